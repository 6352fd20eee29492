"""
Log-periodic power law model forms

    lppl          A + B*tau^m + C*tau^m*cos(omega*ln(tau) - psi)
    power law     A + B*tau^m
    exp trend     A + B*exp(-m*t)
    log-divergent B*ln(tau)*(1 + D*cos(omega*ln(tau) + psi))

with tau = tc - t. The log-divergent form is evaluated on tc - t so that it
lives in the same pre-critical regime as the LPPL itself.
"""
import logging
import math
import sys
from dataclasses import asdict, dataclass, replace
from typing import Optional, Tuple, Union

import numpy as np

from vnv.exceptions import DegenerateDesignError, DomainError, InvalidInputError
from vnv.timeseries import TimeSeries, WindowSpec

logger = logging.getLogger(__name__)

ArrayLike = Union[float, np.ndarray]

TWO_PI = 2.0 * math.pi
# Relative singular-value cutoff for the linear solve
RANK_TOLERANCE = 1e-10
MIN_LINEAR_SAMPLES = 5
# natural-log range of normal floats, with a margin
LOG_FLOAT_MAX = math.log(sys.float_info.max) - 10.0
LOG_FLOAT_MIN = math.log(sys.float_info.min) + 10.0


def normalize_phase(psi: float) -> float:
    """Map an angle onto [0, 2*pi)"""
    value = math.fmod(psi, TWO_PI)
    if value < 0:
        value += TWO_PI
    # fmod of a value just below a multiple of 2*pi can round up to 2*pi
    return 0.0 if value >= TWO_PI else value


@dataclass(frozen=True)
class LpplParams:
    A: float
    B: float
    C: float
    m: float
    omega: float
    psi: float
    tc: float

    def to_dict(self) -> dict:
        return asdict(self)

    @classmethod
    def from_dict(cls, data: dict) -> 'LpplParams':
        return cls(**{k: float(data[k]) for k in ('A', 'B', 'C', 'm', 'omega', 'psi', 'tc')})


@dataclass(frozen=True)
class ExpTrendParams:
    """
    A + B*exp(-m*(t - t_ref))

    t_ref is 0 whenever B on absolute time is a normal float; late windows
    with steep rates keep B at their own reference time instead.
    """
    A: float
    B: float
    m: float
    t_ref: float = 0.0

    def to_dict(self) -> dict:
        return asdict(self)

    @classmethod
    def from_dict(cls, data: dict) -> 'ExpTrendParams':
        return cls(float(data['A']), float(data['B']), float(data['m']), float(data.get('t_ref', 0.0)))

    def rebased(self, t_ref: float) -> Optional['ExpTrendParams']:
        """Same curve with B quoted at t_ref; None when that B is not representable"""
        if t_ref == self.t_ref or self.B == 0:
            return replace(self, t_ref=t_ref)
        log_b = math.log(abs(self.B)) - self.m * (t_ref - self.t_ref)
        if not LOG_FLOAT_MIN < log_b < LOG_FLOAT_MAX:
            return None
        return replace(self, B=math.copysign(math.exp(log_b), self.B), t_ref=t_ref)

    def canonical(self) -> 'ExpTrendParams':
        """Quoted on absolute time when possible"""
        return self.rebased(0.0) or self


@dataclass(frozen=True)
class LogDivergentParams:
    B: float
    D: float
    omega: float
    psi: float
    tc: float

    def to_dict(self) -> dict:
        return asdict(self)

    @classmethod
    def from_dict(cls, data: dict) -> 'LogDivergentParams':
        return cls(**{k: float(data[k]) for k in ('B', 'D', 'omega', 'psi', 'tc')})


def _tau(tc: float, t: ArrayLike) -> ArrayLike:
    tau = tc - np.asarray(t, dtype=float)
    if np.any(tau <= 0):
        raise DomainError(f"evaluation time must precede tc={tc}")
    return tau if tau.ndim else float(tau)


def _scalar_or_array(value):
    return float(value) if np.ndim(value) == 0 else value


def lppl_eval(p: LpplParams, t: ArrayLike) -> ArrayLike:
    tau = _tau(p.tc, t)
    power = np.power(tau, p.m)
    return _scalar_or_array(
        p.A + p.B * power + p.C * power * np.cos(p.omega * np.log(tau) - p.psi)
    )


def power_law_eval(A: float, B: float, m: float, tc: float, t: ArrayLike) -> ArrayLike:
    tau = _tau(tc, t)
    return _scalar_or_array(A + B * np.power(tau, m))


def exp_trend_eval(p: ExpTrendParams, t: ArrayLike) -> ArrayLike:
    elapsed = np.asarray(t, dtype=float) - p.t_ref
    if p.B == 0:
        return _scalar_or_array(p.A + 0.0 * elapsed)
    # B*exp(-m*dt) in log space so a tiny B times a huge exponential stays finite
    return _scalar_or_array(p.A + math.copysign(1.0, p.B) * np.exp(math.log(abs(p.B)) - p.m * elapsed))


def log_divergent_eval(p: LogDivergentParams, t: ArrayLike) -> ArrayLike:
    log_tau = np.log(_tau(p.tc, t))
    return _scalar_or_array(p.B * log_tau * (1.0 + p.D * np.cos(p.omega * log_tau + p.psi)))


@dataclass(frozen=True)
class LinearSolution:
    """Profiled linear parameters of the LPPL at fixed (tc, m, omega)"""
    A: float
    B: float
    C: float
    psi: float
    sse: float

    def params(self, tc: float, m: float, omega: float) -> LpplParams:
        return LpplParams(self.A, self.B, self.C, m, omega, self.psi, tc)


def lppl_design(times: np.ndarray, tc: float, m: float, omega: float) -> np.ndarray:
    """Columns 1, tau^m, tau^m cos(omega ln tau), tau^m sin(omega ln tau)"""
    tau = _tau(tc, times)
    log_tau = np.log(tau)
    power = np.power(tau, m)
    phase = omega * log_tau
    return np.column_stack([np.ones_like(tau), power, power * np.cos(phase), power * np.sin(phase)])


def solve_linear_arrays(times: np.ndarray, values: np.ndarray, tc: float, m: float,
                        omega: float) -> LinearSolution:
    """
    Least-squares (A, B, C, psi) for fixed nonlinear parameters

    C*cos(omega*ln(tau) - psi) is linearised as C1*cos(omega*ln(tau)) +
    C2*sin(omega*ln(tau)), so the problem is ordinary least squares in
    (A, B, C1, C2). Columns are scaled to unit norm before the rank-revealing
    SVD solve.
    """
    times = np.asarray(times, dtype=float)
    values = np.asarray(values, dtype=float)
    if times.size < MIN_LINEAR_SAMPLES:
        raise InvalidInputError(f"linear solve needs at least {MIN_LINEAR_SAMPLES} samples")
    if times.shape != values.shape:
        raise InvalidInputError("times and values must have the same shape")

    design = lppl_design(times, tc, m, omega)
    norms = np.linalg.norm(design, axis=0)
    if not np.all(np.isfinite(design)) or np.any(norms == 0):
        raise DegenerateDesignError(f"design matrix degenerate at tc={tc}, m={m}, omega={omega}")

    coef, _, rank, _ = np.linalg.lstsq(design / norms, values, rcond=RANK_TOLERANCE)
    if rank < design.shape[1]:
        raise DegenerateDesignError(
            f"design matrix rank {rank} < 4 at tc={tc}, m={m}, omega={omega}"
        )
    A, B, c1, c2 = coef / norms
    residual = values - design @ (coef / norms)
    return LinearSolution(
        A=float(A),
        B=float(B),
        C=float(math.hypot(c1, c2)),
        psi=normalize_phase(math.atan2(c2, c1)),
        sse=float(residual @ residual),
    )


def solve_linear_params(ts: TimeSeries, window: WindowSpec, tc: float, m: float,
                        omega: float) -> LinearSolution:
    times, values = ts.slice(window.start_index, window.end_index)
    return solve_linear_arrays(times, values, tc, m, omega)


def sse(ts: TimeSeries, window: WindowSpec, p: LpplParams) -> float:
    """Residual sum of squares of `p` over the window"""
    times, values = ts.slice(window.start_index, window.end_index)
    residual = values - lppl_eval(p, times)
    return float(residual @ residual)


def window_arrays(ts: TimeSeries, window: WindowSpec) -> Tuple[np.ndarray, np.ndarray]:
    if not window.within(ts):
        raise InvalidInputError(f"window {window.to_dict()} outside series of length {len(ts)}")
    return ts.slice(window.start_index, window.end_index)
