"""
Base classes for the critical-time estimators
All estimators inherit from BaseEstimator and implement fit()
"""
import logging
import math
from abc import ABC, abstractmethod
from dataclasses import asdict, dataclass, field, fields
from typing import Any, Dict, List, Optional, Tuple, Union

import numpy as np

from vnv.exceptions import InvalidInputError, NoEstimateError, NumericOverflowError
from vnv.lppl import ExpTrendParams, LogDivergentParams, LpplParams, normalize_phase
from vnv.timeseries import TimeSeries, WindowSpec

logger = logging.getLogger(__name__)

SUBORDINATED = 'subordinated'
PHASE_TRANSITION = 'phase_transition'
ALGORITHMS = (SUBORDINATED, PHASE_TRANSITION)


@dataclass(frozen=True)
class SearchConfig:
    """
    Search ranges and optimizer settings shared by both estimators

    The tc grid is expressed in samples beyond the window end: candidates run
    from `tc_offset_min` to `tc_offset_max_fraction` of the window size (or
    `tc_offset_max_samples` when set) in steps of `tc_step`.
    """
    tc_offset_min: float = 1.0
    tc_offset_max_fraction: float = 0.5
    tc_offset_max_samples: Optional[float] = None
    tc_step: float = 1.0
    m_bounds: Tuple[float, float] = (0.05, 0.95)
    omega_bounds: Tuple[float, float] = (2.0, 25.0)
    d_bounds: Tuple[float, float] = (0.0, 1.0)
    lattice: Tuple[int, int] = (3, 3)
    xatol: float = 1e-8
    fatol: float = 1e-10
    maxfev: int = 2000
    # exponential-trend rate grid, in units of 1 / window duration
    exp_rate_bound: float = 10.0
    exp_grid_size: int = 201

    def __post_init__(self):
        for name in ('m_bounds', 'omega_bounds', 'd_bounds'):
            lo, hi = getattr(self, name)
            if not lo < hi:
                raise InvalidInputError(f"{name} must be a nonempty interval, got {(lo, hi)}")
        if not self.tc_offset_min > 0:
            raise InvalidInputError("tc grid must start strictly beyond the window end")
        if not self.tc_step > 0:
            raise InvalidInputError("tc_step must be > 0")
        if min(self.lattice) < 1:
            raise InvalidInputError("lattice needs at least one point per axis")
        if self.maxfev < 1:
            raise InvalidInputError("maxfev must be >= 1")
        if self.exp_grid_size < 3:
            raise InvalidInputError("exp_grid_size must be >= 3")

    @property
    def multistart_count(self) -> int:
        return self.lattice[0] * self.lattice[1]

    def tc_candidates(self, ts: TimeSeries, window: WindowSpec) -> np.ndarray:
        """Candidate critical times, all strictly after the window end"""
        if self.tc_offset_max_samples is not None:
            top = float(self.tc_offset_max_samples)
        else:
            top = self.tc_offset_max_fraction * window.size
        top = max(top, self.tc_offset_min)
        count = int(math.floor((top - self.tc_offset_min) / self.tc_step + 1e-9)) + 1
        offsets = self.tc_offset_min + self.tc_step * np.arange(count)
        return ts.time_at(window.end_index) + offsets * ts.dt

    def lattice_points(self, first: Tuple[float, float], second: Tuple[float, float]) -> List[Tuple[float, float]]:
        """Cell-centre lattice over two bounded axes, row-major"""
        ka, kb = self.lattice
        axis_a = [first[0] + (first[1] - first[0]) * (i + 0.5) / ka for i in range(ka)]
        axis_b = [second[0] + (second[1] - second[0]) * (j + 0.5) / kb for j in range(kb)]
        return [(a, b) for a in axis_a for b in axis_b]

    def optimizer_options(self) -> Dict[str, Any]:
        return {'xatol': self.xatol, 'fatol': self.fatol, 'maxfev': self.maxfev}

    def to_dict(self) -> dict:
        data = asdict(self)
        for name in ('m_bounds', 'omega_bounds', 'd_bounds', 'lattice'):
            data[name] = list(data[name])
        return data

    @classmethod
    def from_dict(cls, data: dict) -> 'SearchConfig':
        known = {f.name for f in fields(cls)}
        unknown = set(data) - known
        if unknown:
            raise InvalidInputError(f"unknown search settings: {sorted(unknown)}")
        values = dict(data)
        for name in ('m_bounds', 'omega_bounds', 'd_bounds', 'lattice'):
            if name in values:
                values[name] = tuple(values[name])
        return cls(**values)


@dataclass(frozen=True)
class PhaseTransitionParams:
    """Exponential detrend plus log-divergent residual fit"""
    trend: ExpTrendParams
    residual: LogDivergentParams

    @property
    def tc(self) -> float:
        return self.residual.tc

    def to_dict(self) -> dict:
        return {'trend': self.trend.to_dict(), 'residual': self.residual.to_dict()}

    @classmethod
    def from_dict(cls, data: dict) -> 'PhaseTransitionParams':
        return cls(ExpTrendParams.from_dict(data['trend']), LogDivergentParams.from_dict(data['residual']))


FitParams = Union[LpplParams, PhaseTransitionParams]


def params_from_dict(algorithm: str, data: dict) -> FitParams:
    if algorithm == SUBORDINATED:
        return LpplParams.from_dict(data)
    if algorithm == PHASE_TRANSITION:
        return PhaseTransitionParams.from_dict(data)
    raise InvalidInputError(f"unknown algorithm '{algorithm}'")


@dataclass
class FitResult:
    """Result from one estimator run on one window"""
    algorithm: str
    params: FitParams
    sse: float
    window: WindowSpec
    converged: bool
    evaluations: int
    diagnostics: Dict[str, Optional[float]] = field(default_factory=dict)

    @property
    def tc(self) -> float:
        return self.params.tc

    def to_dict(self) -> dict:
        return {
            'algorithm': self.algorithm,
            'params': self.params.to_dict(),
            'sse': self.sse,
            'window': self.window.to_dict(),
            'converged': self.converged,
            'evaluations': self.evaluations,
            'diagnostics': dict(self.diagnostics),
        }

    @classmethod
    def from_dict(cls, data: dict) -> 'FitResult':
        return cls(
            algorithm=data['algorithm'],
            params=params_from_dict(data['algorithm'], data['params']),
            sse=float(data['sse']),
            window=WindowSpec.from_dict(data['window']),
            converged=bool(data['converged']),
            evaluations=int(data['evaluations']),
            diagnostics=dict(data.get('diagnostics', {})),
        )


def fit_diagnostics(ts: TimeSeries, window: WindowSpec, tc: float, omega: float,
                    m: Optional[float] = None, B: Optional[float] = None,
                    C: Optional[float] = None) -> Dict[str, Optional[float]]:
    """Oscillation count over the window, damping ratio and tc offset in samples"""
    t_first = ts.time_at(window.start_index)
    t_last = ts.time_at(window.end_index)
    diagnostics = {
        'oscillations': omega / (2.0 * math.pi) * math.log((tc - t_first) / (tc - t_last)),
        'tc_offset_samples': (tc - t_last) / ts.dt,
    }
    if m is not None:
        diagnostics['damping'] = m * abs(B) / (omega * abs(C)) if C else None
    return diagnostics


def _common_reference(trends: List[ExpTrendParams]) -> List[ExpTrendParams]:
    """Trend amplitudes re-quoted at the latest reference time"""
    ref = max(t.t_ref for t in trends)
    rebased = [t.rebased(ref) for t in trends]
    if any(t is None for t in rebased):
        raise NumericOverflowError(f"trend amplitudes cannot be quoted at t={ref:.6g}")
    return rebased


def median_estimate(fits: List[FitResult]) -> FitParams:
    """
    Componentwise median over the converged fits

    Each parameter is reduced independently; psi values are normalised onto
    [0, 2*pi) first.
    """
    converged = [f for f in fits if f.converged]
    if not converged:
        raise NoEstimateError(f"no converged fit among {len(fits)} subsamples")
    algorithms = {f.algorithm for f in converged}
    if len(algorithms) > 1:
        raise InvalidInputError(f"cannot take a median across algorithms {sorted(algorithms)}")

    def reduce(items: list, cls):
        values = {}
        for f in fields(cls):
            column = [getattr(item, f.name) for item in items]
            if f.name == 'psi':
                column = [normalize_phase(v) for v in column]
            values[f.name] = float(np.median(column))
        return cls(**values)

    if converged[0].algorithm == SUBORDINATED:
        return reduce([f.params for f in converged], LpplParams)
    return PhaseTransitionParams(
        trend=reduce(_common_reference([f.params.trend for f in converged]), ExpTrendParams).canonical(),
        residual=reduce([f.params.residual for f in converged], LogDivergentParams),
    )


class BaseEstimator(ABC):
    """
    Base class for all estimators

    Subclasses must implement:
    - fit(): estimate the critical time on one window and return FitResult
    """
    algorithm = ''

    def __init__(self, search: Optional[SearchConfig] = None):
        self.search = search or SearchConfig()

    @abstractmethod
    def fit(self, ts: TimeSeries, window: WindowSpec) -> FitResult:
        pass

    def fit_many(self, ts: TimeSeries, windows: List[WindowSpec]) -> List[FitResult]:
        return [self.fit(ts, w) for w in windows]


class EstimatorRegistry:
    """Registry of available estimators, keyed by algorithm tag"""

    def __init__(self):
        self._estimators: Dict[str, type] = {}

    def register(self, name: str, estimator_class: type):
        if not issubclass(estimator_class, BaseEstimator):
            raise ValueError(f"{estimator_class} must inherit from BaseEstimator")
        self._estimators[name] = estimator_class

    def get(self, name: str, search: Optional[SearchConfig] = None) -> BaseEstimator:
        if name not in self._estimators:
            raise InvalidInputError(f"Estimator '{name}' not found in registry")
        return self._estimators[name](search)

    def list_estimators(self) -> list:
        return sorted(self._estimators)


# Global registry instance
registry = EstimatorRegistry()
