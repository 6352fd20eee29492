"""
Subordinated LPPL estimator

Three tiers: tc is profiled on a grid beyond the window end, (m, omega) are
the bounded simplex minimisers at each tc, and (A, B, C, psi) come from the
linear solve nested innermost.
"""
import logging
import math
from dataclasses import dataclass
from typing import Optional, Tuple

import numpy as np
from scipy.optimize import minimize

from vnv.estimators.base import (
    SUBORDINATED, BaseEstimator, FitResult, SearchConfig, fit_diagnostics,
)
from vnv.exceptions import DegenerateDesignError, FitFailedError
from vnv.lppl import LinearSolution, solve_linear_arrays, window_arrays
from vnv.timeseries import TimeSeries, WindowSpec

logger = logging.getLogger(__name__)


@dataclass
class ProfilePoint:
    """Best (m, omega) found at one tc candidate"""
    tc: float
    m: float
    omega: float
    sse: float
    evaluations: int
    converged: bool


def profile_tc(times: np.ndarray, values: np.ndarray, tc: float,
               cfg: SearchConfig) -> Tuple[Optional[ProfilePoint], int]:
    """
    Multistart bounded Nelder-Mead over (m, omega) at fixed tc

    Returns the best point (None if every start is infeasible) and the
    objective evaluations spent either way.
    """

    def objective(x):
        try:
            return solve_linear_arrays(times, values, tc, x[0], x[1]).sse
        except DegenerateDesignError:
            return math.inf

    best = None
    evaluations = 0
    for start in cfg.lattice_points(cfg.m_bounds, cfg.omega_bounds):
        res = minimize(
            objective, np.array(start), method='Nelder-Mead',
            bounds=[cfg.m_bounds, cfg.omega_bounds],
            options=cfg.optimizer_options(),
        )
        evaluations += int(res.nfev)
        if not np.isfinite(res.fun):
            continue
        # strict comparison keeps the earliest lattice start on ties
        if best is None or res.fun < best.fun:
            best = res

    if best is None:
        return None, evaluations
    if not best.success:
        logger.debug(f"simplex did not converge at tc={tc:.6g}: {best.message}")
    return ProfilePoint(
        tc=float(tc), m=float(best.x[0]), omega=float(best.x[1]), sse=float(best.fun),
        evaluations=evaluations, converged=bool(best.success),
    ), evaluations


def fit_subordinated(ts: TimeSeries, window: WindowSpec, cfg: Optional[SearchConfig] = None) -> FitResult:
    cfg = cfg or SearchConfig()
    times, values = window_arrays(ts, window)

    best = None
    evaluations = 0
    for tc in cfg.tc_candidates(ts, window):
        point, spent = profile_tc(times, values, tc, cfg)
        evaluations += spent
        if point is None:
            continue
        if best is None or point.sse < best.sse:
            best = point
    if best is None:
        raise FitFailedError(f"every tc candidate is degenerate for window {window.label}")

    solution: LinearSolution = solve_linear_arrays(times, values, best.tc, best.m, best.omega)
    params = solution.params(best.tc, best.m, best.omega)
    return FitResult(
        algorithm=SUBORDINATED,
        params=params,
        sse=solution.sse,
        window=window,
        converged=best.converged,
        evaluations=evaluations,
        diagnostics=fit_diagnostics(ts, window, params.tc, params.omega,
                                    m=params.m, B=params.B, C=params.C),
    )


class SubordinatedEstimator(BaseEstimator):
    """Profiled tc, bounded simplex (m, omega), linear (A, B, C, psi)"""
    algorithm = SUBORDINATED

    def fit(self, ts: TimeSeries, window: WindowSpec) -> FitResult:
        return fit_subordinated(ts, window, self.search)
