"""
Synthetic LPPL provider

Each series has a known critical time: a ramp and a recovered drawdown, a
monotone LPPL rise whose limit value is reached exactly at tc, then a crash.
The critical event found by drawdown segmentation is the LPPL tc itself, so
forecast errors against it measure the estimator alone.
"""
import logging
import math
from typing import Dict, Optional, Tuple

import numpy as np

from vnv.abcde import BatchResult, RunStatus, run_id_for
from vnv.exceptions import InvalidInputError
from vnv.lppl import LpplParams, lppl_eval
from vnv.providers.base_provider import BaseProvider
from vnv.timeseries import TimeSeries

logger = logging.getLogger(__name__)

DEFAULTS = {
    'dt': 1.0,
    'peak': 20.0,
    'ramp_length': 20,
    'prior_drop_length': 10,
    'rise_start_value': 1.1,
    'rise_length': 120,
    'crash_length': 20,
    'tail_length': 10,
    'm_range': [0.45, 0.55],
    'omega_range': [5.5, 6.5],
}


class SyntheticLpplProvider(BaseProvider):
    """Injected LPPL bubbles with ground truth known by construction"""
    name = 'synthetic'

    def __init__(self, config: Optional[Dict] = None):
        merged = dict(DEFAULTS)
        merged.update(config or {})
        unknown = set(merged) - set(DEFAULTS)
        if unknown:
            raise InvalidInputError(f"unknown synthetic source settings: {sorted(unknown)}")
        super().__init__(merged)
        self.truth: Dict[str, LpplParams] = {}

    @property
    def tc_index(self) -> int:
        c = self.config
        return c['ramp_length'] + c['prior_drop_length'] + c['rise_length']

    def build(self, m: float, omega: float, psi: float) -> Tuple[TimeSeries, LpplParams]:
        c = self.config
        dt, peak = float(c['dt']), float(c['peak'])
        ramp = np.linspace(0.5, 1.0, c['ramp_length'])
        drop = np.linspace(1.0, 0.6, c['prior_drop_length'] + 1)[1:]

        rise_start = ramp.size + drop.size
        tc = self.tc_index * dt
        tau_start = tc - rise_start * dt
        # damping below 1/2 keeps the rise strictly monotone
        ratio = 0.5 * m / math.hypot(m, omega)
        shape = 1.0 - ratio * math.cos(omega * math.log(tau_start) - psi)
        K = (peak - c['rise_start_value']) / (tau_start ** m * shape)
        params = LpplParams(A=peak, B=-K, C=ratio * K, m=m, omega=omega, psi=psi, tc=tc)

        rise_times = dt * np.arange(rise_start, self.tc_index)
        rise = np.append(lppl_eval(params, rise_times), peak)
        crash = np.linspace(peak, 0.5 * peak, c['crash_length'] + 1)[1:]
        tail = np.full(c['tail_length'], 0.5 * peak)
        values = np.concatenate([ramp, drop, rise, crash, tail])
        return TimeSeries(0.0, dt, values), params

    def fetch_batch(self, runs: int, seed: int, workers: int = 1) -> BatchResult:
        c = self.config
        statuses, series = [], {}
        for index in range(runs):
            rng = np.random.Generator(np.random.Philox(np.random.SeedSequence([seed, index])))
            m = rng.uniform(*c['m_range'])
            omega = rng.uniform(*c['omega_range'])
            psi = rng.uniform(0.0, 2.0 * math.pi)
            run_id = run_id_for(index)
            ts, params = self.build(m, omega, psi)
            self.truth[run_id] = params
            series[run_id] = ts
            statuses.append(RunStatus(run_id=run_id, ok=True))
        logger.info(f"Built {runs} synthetic LPPL series (tc at sample {self.tc_index})")
        return BatchResult(statuses=statuses, series=series)
