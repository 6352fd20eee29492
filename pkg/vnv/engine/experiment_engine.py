"""
Experiment engine

For each simulated series: segment drawdowns, take the start of the last
one as the critical event, build the analysis window for every fraction,
fit subsamples with each selected estimator and keep the median estimate.
Runs that succeed for every fraction enter the pairwise t-tests.
"""
import logging
import math
from dataclasses import dataclass, field
from multiprocessing import Pool
from typing import Dict, List, Optional, Tuple

import numpy as np

from vnv.abcde import PARAM_FIELDS, BatchResult, run_id_for
from vnv.abcde import PRESETS as ABCDE_PRESETS
from vnv.config import ExperimentConfig
from vnv.estimators import median_estimate, registry
from vnv.estimators.base import SearchConfig
from vnv.exceptions import (
    ExperimentFailedError, FitFailedError, InvalidInputError, NotEnoughEventsError,
    VnvError,
)
from vnv.persistence import ArtifactStore
from vnv.providers import AbcdeProvider, BaseProvider, SyntheticLpplProvider
from vnv.stats import (
    ErrorSample, ReportTable, mean_absolute_error, render_report_table,
    run_hypothesis_tests,
)
from vnv.timeseries import (
    WINDOW_FRACTIONS, TimeSeries, analysis_window, segment_drawdowns,
    subsample_windows,
)

logger = logging.getLogger(__name__)

STATUS_OK = 'ok'
STATUS_SKIPPED = 'skipped'


@dataclass(frozen=True)
class SimulationJob:
    """Per-run processing settings; plain data so it pickles into workers"""
    threshold: float
    fractions: Tuple[str, ...]
    min_window_length: int
    subsample_count: int
    subsample_min_length: int
    max_fit_failure_fraction: float
    algorithms: Tuple[str, ...]
    searches: Dict[str, SearchConfig]

    @classmethod
    def from_config(cls, cfg: ExperimentConfig) -> 'SimulationJob':
        return cls(
            threshold=cfg.threshold,
            fractions=cfg.fractions,
            min_window_length=cfg.min_window_length,
            subsample_count=cfg.subsamples['count'],
            subsample_min_length=cfg.subsamples['min_length'],
            max_fit_failure_fraction=cfg.max_fit_failure_fraction,
            algorithms=cfg.algorithms,
            searches={a: cfg.search_config(a) for a in cfg.algorithms},
        )


@dataclass
class SimulationRecord:
    """Everything derived from one simulated series"""
    run_id: str
    status: str = STATUS_OK
    reason: str = ''
    detail: str = ''
    series: Optional[str] = None
    events: List[dict] = field(default_factory=list)
    tc: Optional[float] = None
    peak_value: Optional[float] = None
    windows: Dict[str, dict] = field(default_factory=dict)
    # fraction -> algorithm -> {params, tc_hat, error, fits, converged}
    estimates: Dict[str, Dict[str, dict]] = field(default_factory=dict)

    @property
    def ok(self) -> bool:
        return self.status == STATUS_OK

    def skip(self, reason: str, detail: str) -> 'SimulationRecord':
        self.status = STATUS_SKIPPED
        self.reason = reason
        self.detail = detail
        return self

    def error(self, fraction: str, algorithm: str) -> float:
        return self.estimates[fraction][algorithm]['error']

    def to_dict(self) -> dict:
        return {
            'run_id': self.run_id,
            'status': self.status,
            'reason': self.reason,
            'detail': self.detail,
            'series': self.series,
            'events': self.events,
            'tc': self.tc,
            'peak_value': self.peak_value,
            'windows': self.windows,
            'estimates': self.estimates,
        }

    @classmethod
    def from_dict(cls, data: dict) -> 'SimulationRecord':
        return cls(**{k: data.get(k) for k in (
            'run_id', 'status', 'reason', 'detail', 'series', 'events', 'tc',
            'peak_value', 'windows', 'estimates',
        )})


def process_simulation(job: SimulationJob, run_id: str, ts: TimeSeries) -> SimulationRecord:
    """Steps 2-5 for one series; precondition failures become skip reasons"""
    record = SimulationRecord(run_id=run_id)
    try:
        events = segment_drawdowns(ts, job.threshold)
        record.events = [e.to_dict() for e in events]
        if len(events) < 2:
            return record.skip(NotEnoughEventsError.code, f"found {len(events)} drawdowns")
        last = events[-1]
        record.tc = ts.time_at(last.peak_index)
        record.peak_value = last.peak_value
    except VnvError as exc:
        return record.skip(exc.code, str(exc))

    for fraction in job.fractions:
        try:
            window = analysis_window(ts, events, WINDOW_FRACTIONS[fraction], job.min_window_length)
        except VnvError as exc:
            return record.skip(exc.code, f"{fraction}: {exc}")
        record.windows[fraction] = window.to_dict()

        try:
            subsamples = subsample_windows(window, job.subsample_count, job.subsample_min_length)
        except VnvError as exc:
            return record.skip(exc.code, f"{fraction}: {exc}")

        record.estimates[fraction] = {}
        for algorithm in job.algorithms:
            estimator = registry.get(algorithm, job.searches[algorithm])
            fits, failures, causes = [], 0, []
            for sub in subsamples:
                try:
                    fit = estimator.fit(ts, sub)
                except (VnvError, ArithmeticError) as exc:
                    code = getattr(exc, 'code', type(exc).__name__)
                    logger.debug(f"{run_id} {sub.label} {algorithm}: {code}: {exc}")
                    failures += 1
                    causes.append(f"{sub.label} {code}: {exc}")
                    continue
                fits.append(fit)
                if not fit.converged:
                    failures += 1
            if failures > job.max_fit_failure_fraction * len(subsamples) or not fits:
                detail = f"{fraction}/{algorithm}: {failures} of {len(subsamples)} subsample fits failed"
                if causes:
                    detail += f" ({'; '.join(causes[:3])})"
                return record.skip(FitFailedError.code, detail)
            params = median_estimate(fits)
            record.estimates[fraction][algorithm] = {
                'params': params.to_dict(),
                'tc_hat': params.tc,
                'error': abs(params.tc - record.tc),
                'fits': len(subsamples),
                'converged': sum(1 for f in fits if f.converged),
            }
    return record


def _process_task(args) -> SimulationRecord:
    return process_simulation(*args)


def provider_for(cfg: ExperimentConfig) -> BaseProvider:
    if cfg.source == 'synthetic':
        return SyntheticLpplProvider(cfg.synthetic)
    return AbcdeProvider(cfg.batch_config())


def _store_batch(store: ArtifactStore, provider: BaseProvider, batch: BatchResult):
    store.write_manifest({
        **provider.manifest(),
        'statuses': [
            {'run_id': s.run_id, 'ok': s.ok, 'reason': s.reason, 'detail': s.detail,
             'initial_state': s.initial_state}
            for s in batch.statuses
        ],
    })
    for status in batch.statuses:
        if status.ok:
            store.write_series(status.run_id, batch.series[status.run_id])


def simulate_series(cfg: ExperimentConfig, provider: Optional[BaseProvider] = None) -> BatchResult:
    """Step 1 only: generate the batch and persist its series and manifest"""
    store = ArtifactStore(cfg.run_dir)
    store.write_config(cfg.to_dict())
    provider = provider or provider_for(cfg)
    batch = provider.fetch_batch(cfg.runs, cfg.seed, cfg.workers)
    _store_batch(store, provider, batch)
    logger.info(f"Simulated {len(batch.statuses)} series ({batch.failed} failed) into {store.run_dir}")
    return batch


def _load_or_simulate(cfg: ExperimentConfig, provider: BaseProvider, store: ArtifactStore,
                      run_ids: List[str]) -> Tuple[Dict[str, TimeSeries], Dict[str, SimulationRecord]]:
    """Series for runs without a stored record, plus the records already on disk"""
    done: Dict[str, SimulationRecord] = {}
    for run_id in run_ids:
        data = store.read_record(run_id)
        if data is not None:
            done[run_id] = SimulationRecord.from_dict(data)
    pending = [r for r in run_ids if r not in done]
    if not pending:
        logger.info(f"All {len(run_ids)} records found in {store.run_dir}, nothing to recompute")
        return {}, done

    series = {r: store.read_series(r) for r in pending}
    if all(ts is not None for ts in series.values()):
        return series, done

    batch = provider.fetch_batch(cfg.runs, cfg.seed, cfg.workers)
    _store_batch(store, provider, batch)
    series = {}
    for status in batch.statuses:
        if status.run_id not in pending:
            continue
        if status.ok:
            series[status.run_id] = batch.series[status.run_id]
        else:
            record = SimulationRecord(run_id=status.run_id).skip(status.reason, status.detail)
            store.write_record(status.run_id, record.to_dict())
            done[status.run_id] = record
    return series, done


def collect_records(cfg: ExperimentConfig, provider: Optional[BaseProvider] = None,
                    store: Optional[ArtifactStore] = None) -> List[SimulationRecord]:
    """Simulate (or resume) and process every run; records come back in run-id order"""
    store = store or ArtifactStore(cfg.run_dir)
    store.write_config(cfg.to_dict())
    provider = provider or provider_for(cfg)
    run_ids = [run_id_for(i) for i in range(cfg.runs)]

    series, records = _load_or_simulate(cfg, provider, store, run_ids)
    job = SimulationJob.from_config(cfg)
    tasks = [(job, run_id, series[run_id]) for run_id in run_ids if run_id in series]
    if cfg.workers > 1 and len(tasks) > 1:
        with Pool(processes=min(cfg.workers, len(tasks))) as pool:
            processed = list(pool.imap(_process_task, tasks))
    else:
        processed = [_process_task(t) for t in tasks]

    for record in processed:
        record.series = str(store.series_path(record.run_id).relative_to(store.run_dir))
        store.write_record(record.run_id, record.to_dict())
        records[record.run_id] = record

    ordered = [records[r] for r in run_ids]
    for record in ordered:
        if record.ok:
            errors = ', '.join(
                f"{frac}={est[cfg.algorithms[0]]['error']:.4g}" for frac, est in record.estimates.items()
            )
            logger.info(f"{record.run_id}: ok, tc={record.tc:.6g}, errors {errors}")
        else:
            logger.warning(f"{record.run_id}: skipped ({record.reason}) {record.detail}")
    return ordered


def error_samples(records: List[SimulationRecord], fractions, algorithm: str) -> Dict[str, ErrorSample]:
    """Per-class |tc_hat - tc| over the runs that succeeded for every fraction"""
    usable = [r for r in records if r.ok]
    return {
        fraction: ErrorSample(fraction, {r.run_id: r.error(fraction, algorithm) for r in usable})
        for fraction in fractions
    }


def _skip_counts(records: List[SimulationRecord]) -> Dict[str, int]:
    counts: Dict[str, int] = {}
    for r in records:
        if not r.ok:
            counts[r.reason] = counts.get(r.reason, 0) + 1
    return dict(sorted(counts.items()))


def _require_usable(records: List[SimulationRecord], store: ArtifactStore) -> int:
    usable = sum(1 for r in records if r.ok)
    if usable < 2:
        raise ExperimentFailedError(
            f"only {usable} of {len(records)} simulations usable "
            f"(skips: {_skip_counts(records)}); records in {store.run_dir}"
        )
    return usable


def run_experiment(cfg: ExperimentConfig, provider: Optional[BaseProvider] = None) -> ReportTable:
    """Full pipeline: simulate, window, fit, aggregate and test"""
    store = ArtifactStore(cfg.run_dir)
    logger.info(f"Experiment {cfg.fingerprint}: {cfg.runs} runs from {cfg.source}, "
                f"algorithms {list(cfg.algorithms)}")
    records = collect_records(cfg, provider, store)
    usable = _require_usable(records, store)

    algorithm = cfg.algorithms[0]
    samples = error_samples(records, cfg.fractions, algorithm)
    report = ReportTable(
        rows=run_hypothesis_tests(samples, paired=cfg.paired, mode=cfg.holm_mode),
        mae={fraction: mean_absolute_error(sample) for fraction, sample in samples.items()},
        n=usable,
        fingerprint=cfg.fingerprint,
        algorithm=algorithm,
        paired=cfg.paired,
        holm_mode=cfg.holm_mode,
        runs_total=len(records),
        skipped=_skip_counts(records),
    )
    store.write_report(report.to_dict(), report.to_frame(), render_report_table(report))
    logger.info(f"Experiment {cfg.fingerprint}: {usable}/{len(records)} runs usable, "
                f"report in {store.path('report.csv')}")
    return report


def mae_ratio(challenger: float, baseline: float) -> float:
    """challenger / baseline; 1 when both are zero, inf when only the baseline is"""
    if baseline == 0:
        return 1.0 if challenger == 0 else math.inf
    return challenger / baseline


def _compare_once(cfg: ExperimentConfig, provider: Optional[BaseProvider] = None) -> dict:
    baseline, challenger = cfg.compare['baseline'], cfg.compare['challenger']
    cfg = cfg.with_overrides(algorithms=sorted({baseline, challenger}))
    store = ArtifactStore(cfg.run_dir)
    records = collect_records(cfg, provider, store)
    usable = _require_usable(records, store)

    classes = {}
    pooled = {baseline: [], challenger: []}
    for fraction in cfg.fractions:
        maes = {}
        for algorithm in (baseline, challenger):
            sample = error_samples(records, [fraction], algorithm)[fraction]
            maes[algorithm] = mean_absolute_error(sample)
            pooled[algorithm].extend(sample.values())
        classes[fraction] = {
            'baseline_mae': maes[baseline],
            'challenger_mae': maes[challenger],
            'ratio': mae_ratio(maes[challenger], maes[baseline]),
        }
    baseline_mae = float(np.mean(pooled[baseline]))
    challenger_mae = float(np.mean(pooled[challenger]))
    summary = {
        'fingerprint': cfg.fingerprint,
        'baseline': baseline,
        'challenger': challenger,
        'n': usable,
        'runs_total': len(records),
        'skipped': _skip_counts(records),
        'classes': classes,
        'aggregate': {
            'baseline_mae': baseline_mae,
            'challenger_mae': challenger_mae,
            'ratio': mae_ratio(challenger_mae, baseline_mae),
        },
    }
    if cfg.source == 'abcde':
        summary['abcde_preset'] = cfg.abcde['preset']
    store.write_compare(summary)
    logger.info(f"Comparison {cfg.fingerprint}: {challenger}/{baseline} MAE ratio "
                f"{summary['aggregate']['ratio']:.4g} over {usable} runs")
    return summary


def fallback_config(cfg: ExperimentConfig) -> Optional[ExperimentConfig]:
    """
    Same experiment on the fallback ABCDE preset, or None when there is none

    Model parameters still at the original preset's values are released so
    the fallback preset supplies them; explicitly changed ones carry over.
    """
    fallback = cfg.compare['fallback_preset']
    if cfg.source != 'abcde' or not fallback or cfg.abcde['preset'] == fallback:
        return None
    original = ABCDE_PRESETS[cfg.abcde['preset']]
    abcde = {'preset': fallback}
    for name in PARAM_FIELDS:
        if cfg.abcde[name] == original[name]:
            abcde[name] = None
    return cfg.with_overrides(abcde=abcde)


def compare_algorithms(cfg: ExperimentConfig, provider: Optional[BaseProvider] = None) -> dict:
    """
    Both estimators on identical windows; per-class and pooled ratio of mean
    absolute error, challenger over baseline

    An ABCDE comparison that fails, or whose pooled ratio stays below
    compare.min_ratio, is repeated on compare.fallback_preset. The returned
    summary is then the fallback's, with the first attempt under
    'fallback_from'.
    """
    baseline, challenger = cfg.compare['baseline'], cfg.compare['challenger']
    if baseline not in registry.list_estimators() or challenger not in registry.list_estimators():
        raise InvalidInputError(f"unknown algorithms {baseline}/{challenger}")

    try:
        summary, failure = _compare_once(cfg, provider), None
    except ExperimentFailedError as exc:
        summary, failure = None, exc
    ratio = summary['aggregate']['ratio'] if summary else None
    if ratio is not None and ratio >= cfg.compare['min_ratio']:
        return summary

    retry = fallback_config(cfg)
    if retry is None:
        if failure is not None:
            raise failure
        return summary

    first_attempt = {
        'abcde_preset': cfg.abcde['preset'],
        'fingerprint': summary['fingerprint'] if summary else cfg.with_overrides(
            algorithms=sorted({baseline, challenger})).fingerprint,
        'ratio': ratio,
        'error': str(failure) if failure else None,
    }
    logger.warning(f"Comparison on preset {cfg.abcde['preset']} "
                   f"{'failed' if failure else f'gave ratio {ratio:.4g}'}; "
                   f"repeating on preset {retry.abcde['preset']}")
    result = {**_compare_once(retry), 'fallback_from': first_attempt}
    compared = retry.with_overrides(algorithms=sorted({baseline, challenger}))
    ArtifactStore(compared.run_dir).write_compare(result)
    return result
