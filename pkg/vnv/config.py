"""
Experiment configuration

Resolution order: settings.LPPL_VNV['DEFAULTS'] <- preset <- JSON file <-
dotted `key=value` overrides. The merged document is validated by
ExperimentConfigSerializer and frozen into an ExperimentConfig.
"""
import copy
import hashlib
import json
import logging
from dataclasses import dataclass, replace
from pathlib import Path
from typing import Any, Dict, Iterable, Optional, Tuple

from django.conf import settings

from vnv.abcde import (
    COUPLING_TRANSITION, PARAM_FIELDS, AbcdeParams, AbcdeState, BatchConfig, transition_coupling,
)
from vnv.estimators.base import SearchConfig
from vnv.exceptions import ConfigError

logger = logging.getLogger(__name__)

# Keys that change where or how fast, never what
NON_SEMANTIC_KEYS = ('output_dir', 'workers')


def merge_config(base: Dict, overlay: Dict, path: str = '') -> Dict:
    """Recursive overlay; keys missing from `base` are rejected"""
    merged = copy.deepcopy(base)
    for key, value in overlay.items():
        dotted = f"{path}{key}"
        if key not in merged:
            raise ConfigError("unknown config key", key=dotted)
        if isinstance(merged[key], dict):
            if not isinstance(value, dict):
                raise ConfigError("expected an object", key=dotted)
            merged[key] = merge_config(merged[key], value, f"{dotted}.")
        else:
            merged[key] = copy.deepcopy(value)
    return merged


def parse_override(text: str) -> Tuple[str, Any]:
    """'abcde.epsilon=4.94' -> ('abcde.epsilon', 4.94); non-JSON values stay strings"""
    key, sep, raw = text.partition('=')
    key = key.strip()
    if not sep or not key:
        raise ConfigError(f"override '{text}' is not of the form dotted.key=value")
    try:
        value = json.loads(raw)
    except json.JSONDecodeError:
        value = raw
    return key, value


def apply_override(document: Dict, key: str, value: Any) -> Dict:
    overlay: Dict = {}
    cursor = overlay
    parts = key.split('.')
    for part in parts[:-1]:
        cursor = cursor.setdefault(part, {})
    cursor[parts[-1]] = value
    return merge_config(document, overlay)


def read_config_file(path) -> Dict:
    path = Path(path)
    if not path.is_file():
        raise ConfigError(f"config file not found: {path}")
    try:
        data = json.loads(path.read_text())
    except json.JSONDecodeError as exc:
        raise ConfigError(f"{path}: invalid JSON ({exc.msg} at line {exc.lineno})")
    if not isinstance(data, dict):
        raise ConfigError(f"{path}: top level must be a JSON object")
    return data


def _first_error(errors, prefix: str = '') -> Tuple[str, str]:
    """Flatten DRF's nested error structure to the first (dotted key, message)"""
    if isinstance(errors, dict):
        key, value = next(iter(errors.items()))
        key = '' if key == 'non_field_errors' else str(key)
        return _first_error(value, f"{prefix}{key}." if key else prefix)
    if isinstance(errors, list) and errors:
        return _first_error(errors[0], prefix)
    return prefix.rstrip('.'), str(errors)


def _plain(data) -> Any:
    """OrderedDicts and tuples from DRF into plain JSON types"""
    return json.loads(json.dumps(data))


def fingerprint(document: Dict) -> str:
    """First 16 hex chars of SHA-256 over the sorted-key JSON of the semantic config"""
    semantic = {k: v for k, v in document.items() if k not in NON_SEMANTIC_KEYS}
    payload = json.dumps(semantic, sort_keys=True, separators=(',', ':'))
    return hashlib.sha256(payload.encode()).hexdigest()[:16]


@dataclass(frozen=True)
class ExperimentConfig:
    """Validated experiment config plus the typed views the pipeline needs"""
    document: Dict[str, Any]

    def __getattr__(self, name):
        document = self.__dict__.get('document', {})
        if name in document:
            return document[name]
        raise AttributeError(name)

    @property
    def fingerprint(self) -> str:
        return fingerprint(self.document)

    @property
    def output_dir(self) -> Path:
        return Path(self.document['output_dir'] or settings.LPPL_VNV['OUTPUT_DIR'])

    @property
    def run_dir(self) -> Path:
        return self.output_dir / self.fingerprint

    @property
    def fractions(self) -> Tuple[str, ...]:
        return tuple(self.document['fractions'])

    @property
    def algorithms(self) -> Tuple[str, ...]:
        return tuple(self.document['algorithms'])

    def abcde_params(self) -> AbcdeParams:
        section = self.document['abcde']
        return AbcdeParams(**{k: section[k] for k in PARAM_FIELDS})

    def coupled_params(self) -> AbcdeParams:
        """Parameters with alpha calibrated when coupling is 'transition'"""
        section = self.document['abcde']
        params = self.abcde_params()
        if section['coupling'] == COUPLING_TRANSITION:
            alpha = transition_coupling(
                params, section['transition_epsilon'], AbcdeState(**section['initial_state']),
            )
            params = replace(params, alpha=alpha)
        return params

    def batch_config(self) -> BatchConfig:
        section = self.document['abcde']
        return BatchConfig(
            preset=section['preset'],
            params=self.coupled_params(),
            initial_state=AbcdeState(**section['initial_state']),
            dt=section['dt'],
            horizon=section['horizon'],
            substeps=section['substeps'],
            save_every=section['save_every'],
            runs=self.document['runs'],
            seed=self.document['seed'],
            jitter=section['jitter'],
            blowup_bound=section['blowup_bound'],
            discard=section['discard'],
            workers=self.document['workers'],
        )

    def search_config(self, algorithm: str) -> SearchConfig:
        return SearchConfig.from_dict(self.document['search'][algorithm])

    def with_overrides(self, **values) -> 'ExperimentConfig':
        return build_config(merge_config(self.document, values))

    def to_dict(self) -> Dict[str, Any]:
        return copy.deepcopy(self.document)


def build_config(document: Dict) -> ExperimentConfig:
    """Validate a fully merged document"""
    from vnv.api.serializers import ExperimentConfigSerializer

    serializer = ExperimentConfigSerializer(data=document)
    if not serializer.is_valid():
        key, message = _first_error(serializer.errors)
        raise ConfigError(message, key=key or None)
    return ExperimentConfig(document=_plain(serializer.validated_data))


def load_config(path=None, preset: Optional[str] = None, overrides: Iterable[str] = ()) -> ExperimentConfig:
    document = copy.deepcopy(settings.LPPL_VNV['DEFAULTS'])
    if preset:
        presets = settings.LPPL_VNV['PRESETS']
        if preset not in presets:
            raise ConfigError(f"unknown preset '{preset}', choose from {sorted(presets)}", key='preset')
        document = merge_config(document, presets[preset])
    if path:
        document = merge_config(document, read_config_file(path))
    for text in overrides:
        key, value = parse_override(text)
        document = apply_override(document, key, value)
    cfg = build_config(document)
    logger.debug(f"Resolved config {cfg.fingerprint} (preset={preset}, file={path})")
    return cfg
