"""
DRF serializers: the experiment config schema and the run audit API
"""
from rest_framework import serializers

from vnv.abcde import PRESETS as ABCDE_PRESETS
from vnv.abcde import COUPLINGS, PARAM_FIELDS, AbcdeParams
from vnv.estimators.base import ALGORITHMS
from vnv.exceptions import InvalidInputError
from vnv.models import ExperimentRun
from vnv.stats import HOLM_MODES
from vnv.timeseries import WINDOW_FRACTIONS



def interval_field(**kwargs):
    return serializers.ListField(child=serializers.FloatField(), min_length=2, max_length=2, **kwargs)


class InitialStateSerializer(serializers.Serializer):
    x = serializers.FloatField()
    y = serializers.FloatField()
    z = serializers.FloatField()
    r = serializers.FloatField(min_value=0.0)
    theta = serializers.FloatField()


class AbcdeConfigSerializer(serializers.Serializer):
    """ABCDE batch settings; null parameters are taken from the preset"""
    preset = serializers.ChoiceField(choices=sorted(ABCDE_PRESETS))
    sigma = serializers.FloatField(allow_null=True)
    rho = serializers.FloatField(allow_null=True)
    beta = serializers.FloatField(allow_null=True)
    a1 = serializers.FloatField(allow_null=True)
    a2 = serializers.FloatField(allow_null=True)
    alpha = serializers.FloatField(
        allow_null=True, help_text="x coupling; not fixed by the model description, unused with coupling=transition",
    )
    epsilon = serializers.FloatField(allow_null=True)
    initial_state = InitialStateSerializer()
    dt = serializers.FloatField(min_value=1e-9)
    horizon = serializers.FloatField(min_value=1e-9)
    substeps = serializers.IntegerField(min_value=1)
    save_every = serializers.IntegerField(min_value=1)
    jitter = serializers.FloatField(min_value=0.0)
    blowup_bound = serializers.FloatField(min_value=1.0)
    coupling = serializers.ChoiceField(
        choices=list(COUPLINGS), help_text="fixed: use alpha; transition: calibrate alpha to the epsilon transition",
    )
    transition_epsilon = serializers.FloatField(min_value=1e-9)
    discard = serializers.FloatField(min_value=0.0, help_text="leading time dropped from each r series")

    def validate(self, attrs):
        if attrs['discard'] >= attrs['horizon']:
            raise serializers.ValidationError("discard must be shorter than the horizon")
        preset = ABCDE_PRESETS[attrs['preset']]
        for name in PARAM_FIELDS:
            if attrs.get(name) is None:
                attrs[name] = preset[name]
        try:
            AbcdeParams(**{name: attrs[name] for name in PARAM_FIELDS})
        except InvalidInputError as exc:
            raise serializers.ValidationError(str(exc))
        return attrs


class SyntheticConfigSerializer(serializers.Serializer):
    dt = serializers.FloatField(min_value=1e-9)
    peak = serializers.FloatField(min_value=2.0)
    ramp_length = serializers.IntegerField(min_value=2)
    prior_drop_length = serializers.IntegerField(min_value=2)
    rise_start_value = serializers.FloatField()
    rise_length = serializers.IntegerField(min_value=10)
    crash_length = serializers.IntegerField(min_value=2)
    tail_length = serializers.IntegerField(min_value=0)
    m_range = interval_field()
    omega_range = interval_field()

    def validate(self, attrs):
        if not 1.0 < attrs['rise_start_value'] < attrs['peak']:
            raise serializers.ValidationError("rise_start_value must lie between the prior peak 1.0 and peak")
        return attrs


class SearchConfigSerializer(serializers.Serializer):
    tc_offset_min = serializers.FloatField(min_value=1e-9)
    tc_offset_max_fraction = serializers.FloatField(min_value=0.0)
    tc_offset_max_samples = serializers.FloatField(allow_null=True, min_value=0.0)
    tc_step = serializers.FloatField(min_value=1e-9)
    m_bounds = interval_field()
    omega_bounds = interval_field()
    d_bounds = interval_field()
    lattice = serializers.ListField(child=serializers.IntegerField(min_value=1), min_length=2, max_length=2)
    xatol = serializers.FloatField(min_value=0.0)
    fatol = serializers.FloatField(min_value=0.0)
    maxfev = serializers.IntegerField(min_value=1)
    exp_rate_bound = serializers.FloatField(min_value=1e-9)
    exp_grid_size = serializers.IntegerField(min_value=3)

    def validate(self, attrs):
        for name in ('m_bounds', 'omega_bounds', 'd_bounds'):
            lo, hi = attrs[name]
            if not lo < hi:
                raise serializers.ValidationError({name: "interval must be nonempty"})
        return attrs


class SearchSectionSerializer(serializers.Serializer):
    subordinated = SearchConfigSerializer()
    phase_transition = SearchConfigSerializer()


class SubsampleSerializer(serializers.Serializer):
    count = serializers.IntegerField(min_value=1)
    min_length = serializers.IntegerField(min_value=5)


class CompareSerializer(serializers.Serializer):
    baseline = serializers.ChoiceField(choices=ALGORITHMS)
    challenger = serializers.ChoiceField(choices=ALGORITHMS)
    min_ratio = serializers.FloatField(min_value=0.0)
    fallback_preset = serializers.ChoiceField(choices=sorted(ABCDE_PRESETS), allow_null=True)


class PlotSerializer(serializers.Serializer):
    runs = serializers.IntegerField(min_value=1)
    stride = serializers.IntegerField(min_value=1)


class ExperimentConfigSerializer(serializers.Serializer):
    """Full experiment config document"""
    source = serializers.ChoiceField(choices=['abcde', 'synthetic'])
    runs = serializers.IntegerField(min_value=2)
    seed = serializers.IntegerField(min_value=0)
    threshold = serializers.FloatField()
    fractions = serializers.ListField(child=serializers.ChoiceField(choices=list(WINDOW_FRACTIONS)), min_length=1)
    min_window_length = serializers.IntegerField(min_value=5)
    subsamples = SubsampleSerializer()
    max_fit_failure_fraction = serializers.FloatField(min_value=0.0, max_value=1.0)
    algorithms = serializers.ListField(child=serializers.ChoiceField(choices=ALGORITHMS), min_length=1)
    paired = serializers.BooleanField()
    holm_mode = serializers.ChoiceField(choices=HOLM_MODES)
    abcde = AbcdeConfigSerializer()
    synthetic = SyntheticConfigSerializer()
    search = SearchSectionSerializer()
    compare = CompareSerializer()
    plot = PlotSerializer()
    output_dir = serializers.CharField(allow_null=True)
    workers = serializers.IntegerField(min_value=1)

    def validate_threshold(self, value):
        if not 0 < value < 1:
            raise serializers.ValidationError("threshold must lie in (0, 1)")
        return value

    def validate_fractions(self, value):
        if len(set(value)) != len(value):
            raise serializers.ValidationError("fractions must be distinct")
        # canonical order keeps the fingerprint independent of listing order
        return [f for f in WINDOW_FRACTIONS if f in value]

    def validate_algorithms(self, value):
        if len(set(value)) != len(value):
            raise serializers.ValidationError("algorithms must be distinct")
        return [a for a in ALGORITHMS if a in value]


class ExperimentRunSerializer(serializers.ModelSerializer):
    status_display = serializers.CharField(source='get_status_display', read_only=True)
    kind_display = serializers.CharField(source='get_kind_display', read_only=True)

    class Meta:
        model = ExperimentRun
        fields = '__all__'
