"""
Phase-transition estimator

The window is detrended with an exponential fit and the residuals are fitted
with the log-divergent form: tc is profiled on the same grid as the
subordinated estimator, (omega, psi, D) come from a multistart bounded
simplex and B is solved in closed form because it scales the whole
expression.
"""
import logging
import math
from typing import Optional, Tuple

import numpy as np
from scipy.optimize import minimize, minimize_scalar

from vnv.estimators.base import (
    PHASE_TRANSITION, BaseEstimator, FitResult, PhaseTransitionParams, SearchConfig,
    fit_diagnostics,
)
from vnv.exceptions import FitFailedError, InvalidInputError
from vnv.lppl import ExpTrendParams, LogDivergentParams, exp_trend_eval, normalize_phase, window_arrays
from vnv.timeseries import TimeSeries, WindowSpec

logger = logging.getLogger(__name__)

MIN_TREND_SAMPLES = 4
TWO_PI = 2.0 * math.pi


def _exp_linear(t: np.ndarray, values: np.ndarray, m: float) -> Tuple[float, float, float]:
    """(A, B, sse) of A + B*exp(-m*t) at fixed m; sse is inf when degenerate"""
    design = np.column_stack([np.ones_like(t), np.exp(-m * t)])
    if not np.all(np.isfinite(design)):
        return math.nan, math.nan, math.inf
    coef, _, rank, _ = np.linalg.lstsq(design, values, rcond=1e-10)
    if rank < 2:
        return math.nan, math.nan, math.inf
    residual = values - design @ coef
    return float(coef[0]), float(coef[1]), float(residual @ residual)


def fit_exp_trend(ts: TimeSeries, window: WindowSpec, cfg: Optional[SearchConfig] = None) -> ExpTrendParams:
    """
    Least-squares exponential trend over the window

    m is profiled on a grid of +-exp_rate_bound / (window duration) and then
    refined with a bounded scalar search between the neighbouring grid points.
    """
    cfg = cfg or SearchConfig()
    times, values = window_arrays(ts, window)
    if times.size < MIN_TREND_SAMPLES:
        raise InvalidInputError(f"exponential trend needs at least {MIN_TREND_SAMPLES} samples")
    if np.ptp(values) == 0:
        return ExpTrendParams(A=float(values.mean()), B=0.0, m=0.0)

    # work on t - t_start so exp() stays bounded for late windows
    t0 = times[0]
    t = times - t0
    duration = t[-1]
    rates = np.linspace(-cfg.exp_rate_bound / duration, cfg.exp_rate_bound / duration, cfg.exp_grid_size)
    grid_sse = np.array([_exp_linear(t, values, m)[2] for m in rates])
    i = int(np.argmin(grid_sse))
    if not np.isfinite(grid_sse[i]):
        raise FitFailedError("exponential trend is degenerate at every grid rate")

    lo = rates[max(i - 1, 0)]
    hi = rates[min(i + 1, rates.size - 1)]
    refined = minimize_scalar(
        lambda m: _exp_linear(t, values, m)[2], bounds=(lo, hi), method='bounded',
        options={'xatol': 1e-12 / duration},
    )
    m = float(refined.x) if refined.fun <= grid_sse[i] else float(rates[i])
    A, shifted_B, _ = _exp_linear(t, values, m)
    return ExpTrendParams(A=A, B=shifted_B, m=m, t_ref=float(t0)).canonical()


def _log_divergent_objective(log_tau: np.ndarray, residual: np.ndarray):
    def objective(x):
        omega, psi, D = x
        g = log_tau * (1.0 + D * np.cos(omega * log_tau + psi))
        gg = g @ g
        if not gg > 0:
            return math.inf
        B = (g @ residual) / gg
        r = residual - B * g
        return float(r @ r)
    return objective


def _log_divergent_amplitude(log_tau: np.ndarray, residual: np.ndarray, omega: float,
                             psi: float, D: float) -> float:
    g = log_tau * (1.0 + D * np.cos(omega * log_tau + psi))
    gg = g @ g
    return float((g @ residual) / gg) if gg > 0 else 0.0


def fit_phase_transition(ts: TimeSeries, window: WindowSpec,
                         cfg: Optional[SearchConfig] = None) -> FitResult:
    cfg = cfg or SearchConfig()
    times, values = window_arrays(ts, window)
    trend = fit_exp_trend(ts, window, cfg)
    residual = values - exp_trend_eval(trend, times)

    bounds = [cfg.omega_bounds, (0.0, TWO_PI), cfg.d_bounds]
    d_start = 0.5 * (cfg.d_bounds[0] + cfg.d_bounds[1])
    starts = [(w, p, d_start) for w, p in cfg.lattice_points(cfg.omega_bounds, (0.0, TWO_PI))]

    best = None
    best_tc = None
    evaluations = 0
    for tc in cfg.tc_candidates(ts, window):
        log_tau = np.log(tc - times)
        objective = _log_divergent_objective(log_tau, residual)
        for start in starts:
            res = minimize(objective, np.array(start), method='Nelder-Mead', bounds=bounds,
                           options=cfg.optimizer_options())
            evaluations += int(res.nfev)
            if np.isfinite(res.fun) and (best is None or res.fun < best.fun):
                best, best_tc = res, float(tc)
    if best is None:
        raise FitFailedError(f"every tc candidate is degenerate for window {window.label}")
    if not best.success:
        logger.debug(f"simplex did not converge at tc={best_tc:.6g}: {best.message}")

    omega, psi, D = (float(v) for v in best.x)
    B = _log_divergent_amplitude(np.log(best_tc - times), residual, omega, psi, D)
    params = PhaseTransitionParams(
        trend=trend,
        residual=LogDivergentParams(B=B, D=D, omega=omega, psi=normalize_phase(psi), tc=best_tc),
    )
    return FitResult(
        algorithm=PHASE_TRANSITION,
        params=params,
        sse=float(best.fun),
        window=window,
        converged=bool(best.success),
        evaluations=evaluations,
        diagnostics=fit_diagnostics(ts, window, best_tc, omega),
    )


class PhaseTransitionEstimator(BaseEstimator):
    """Exponential detrend, then log-divergent fit of the residuals"""
    algorithm = PHASE_TRANSITION

    def fit(self, ts: TimeSeries, window: WindowSpec) -> FitResult:
        return fit_phase_transition(ts, window, self.search)
