"""
Shared fixtures and oracles for the test suite
"""
import os
import unittest
from decimal import Decimal, getcontext
from pathlib import Path
from unittest import mock

import numpy as np
import pytest

from vnv.estimators import SUBORDINATED, BaseEstimator, FitResult, registry
from vnv.exceptions import DegenerateDesignError, FitFailedError
from vnv.lppl import LpplParams, lppl_eval
from vnv.providers import SyntheticLpplProvider
from vnv.timeseries import TimeSeries, WindowSpec

RUN_SLOW = os.environ.get('LPPL_VNV_RUN_SLOW') == '1'
GOLDEN_DIR = Path(__file__).resolve().parent / 'golden'


def slow(test):
    """Long acceptance runs; enabled with LPPL_VNV_RUN_SLOW=1"""
    test = pytest.mark.slow(test)
    return unittest.skipUnless(RUN_SLOW, 'set LPPL_VNV_RUN_SLOW=1 to run')(test)


def assert_golden(testcase, name: str, data: bytes):
    """
    Byte-for-byte comparison against vnv/tests/golden/<name>

    A missing golden file is written from `data` and the test is skipped, so
    the first run on a new platform records the baseline and later runs
    compare against it.
    """
    path = GOLDEN_DIR / name
    if not path.exists():
        path.parent.mkdir(parents=True, exist_ok=True)
        path.write_bytes(data)
        testcase.skipTest(f"recorded golden output {path.name}")
    testcase.assertEqual(data, path.read_bytes(), f"{name} differs from the recorded golden output")


# 50-digit reference arithmetic

def decimal_context(digits: int = 50):
    getcontext().prec = digits


def dcos(x: Decimal) -> Decimal:
    """Taylor series cosine at the current decimal precision"""
    getcontext().prec += 2
    i, last, s, fact, num, sign = 0, 0, 1, 1, 1, 1
    while s != last:
        last = s
        i += 2
        fact *= i * (i - 1)
        num *= x * x
        sign *= -1
        s += num / fact * sign
    getcontext().prec -= 2
    return +s


def dpow(base: Decimal, exponent: Decimal) -> Decimal:
    return (exponent * base.ln()).exp()


def lppl_series(params: LpplParams, n: int, dt: float = 1.0, t0: float = 0.0) -> TimeSeries:
    """Noiseless LPPL samples at t0, t0 + dt, ..."""
    times = t0 + dt * np.arange(n)
    return TimeSeries(t0, dt, lppl_eval(params, times))


def full_window(ts: TimeSeries, label: str = 'all') -> WindowSpec:
    return WindowSpec(0, len(ts) - 1, label)


# Stand-in estimators and sources for pipeline tests

class FixedOffsetEstimator(BaseEstimator):
    """Predicts tc ten samples past the window end"""
    algorithm = SUBORDINATED

    def fit(self, ts, window):
        tc = ts.time_at(window.end_index) + 10.0 * ts.dt
        params = LpplParams(A=1.0, B=-1.0, C=0.1, m=0.5, omega=6.0, psi=0.0, tc=tc)
        return FitResult(SUBORDINATED, params, 0.0, window, True, 1)


class AlwaysFailingEstimator(BaseEstimator):
    algorithm = SUBORDINATED

    def fit(self, ts, window):
        raise FitFailedError("no feasible tc")


class DegenerateEstimator(BaseEstimator):
    """Every fit hits a rank-deficient design, or overflows on the second subsample"""
    algorithm = SUBORDINATED

    def fit(self, ts, window):
        if window.label.endswith("#1"):
            raise OverflowError("math range error")
        raise DegenerateDesignError("design matrix rank 3 < 4")


def fast_estimator():
    return mock.patch.dict(registry._estimators, {SUBORDINATED: FixedOffsetEstimator})


def failing_estimator():
    return mock.patch.dict(registry._estimators, {SUBORDINATED: AlwaysFailingEstimator})


def degenerate_estimator():
    return mock.patch.dict(registry._estimators, {SUBORDINATED: DegenerateEstimator})


class CountingProvider(SyntheticLpplProvider):
    """Synthetic source that counts batch requests"""

    def __init__(self, config=None):
        super().__init__(config)
        self.calls = 0

    def fetch_batch(self, runs, seed, workers=1):
        self.calls += 1
        return super().fetch_batch(runs, seed, workers)


class MonotoneRunProvider(SyntheticLpplProvider):
    """Synthetic source whose listed runs are replaced by a plain rising line"""

    def __init__(self, monotone_runs, config=None):
        super().__init__(config)
        self.monotone_runs = set(monotone_runs)

    def fetch_batch(self, runs, seed, workers=1):
        batch = super().fetch_batch(runs, seed, workers)
        for run_id in self.monotone_runs:
            batch.series[run_id] = TimeSeries(0.0, 1.0, np.arange(1.0, 200.0))
        return batch
