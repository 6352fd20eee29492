"""
ABCDE five-variable chaotic system

A Lorenz subsystem (x, y, z) drives a dissipative pair that is integrated in
hyperbolic coordinates b1 = r cosh(theta), b2 = r sinh(theta). The r component
shows intermittent excursions from zero when epsilon sits just below its
transitional value.

Integration is classical fixed-step RK4 written on plain floats; a trajectory
of a few hundred thousand steps is dominated by interpreter overhead, so the
right-hand side is inlined into the stepping loop.
"""
import logging
import math
from dataclasses import asdict, dataclass, field, replace
from functools import lru_cache
from multiprocessing import Pool
from typing import Callable, Dict, List, Optional, Sequence, Tuple

import numpy as np
from scipy.optimize import brentq

from vnv.exceptions import BlowUpError, InvalidInputError, NumericOverflowError
from vnv.timeseries import TimeSeries

logger = logging.getLogger(__name__)

DEFAULT_DT = 0.005
DEFAULT_HORIZON = 2000.0
DEFAULT_BLOWUP_BOUND = 1e12
# sinh/cosh are only evaluated below this |theta|
THETA_LIMIT = 300.0

# transition of the dissipative pair sits at epsilon = 5 for these a1, a2
TRANSITION_EPSILON = 5.0
CALIBRATION_DT = 0.01
CALIBRATION_SETTLE = 50.0
CALIBRATION_HORIZON = 200.0

COUPLING_FIXED = 'fixed'
COUPLING_TRANSITION = 'transition'
COUPLINGS = (COUPLING_FIXED, COUPLING_TRANSITION)

STATE_FIELDS = ('x', 'y', 'z', 'r', 'theta')
PARAM_FIELDS = ('sigma', 'rho', 'beta', 'a1', 'a2', 'alpha', 'epsilon')

# alpha is not pinned down by the source model description; 1.0 is a neutral
# unit coupling. The dissipative pair grows whenever alpha*|x| exceeds
# epsilon*sqrt(a1*a2), so alpha is the knob that sets how often r bursts.
DEFAULT_ALPHA = 1.0

PRESETS: Dict[str, Dict[str, float]] = {
    # sigma/rho/beta exactly as published
    'paper-verbatim': {
        'sigma': 10.0, 'rho': 2.667, 'beta': 28.0,
        'a1': 0.1, 'a2': 0.2, 'alpha': DEFAULT_ALPHA, 'epsilon': 4.94,
    },
    # canonical Lorenz assignment of rho and beta
    'lorenz-standard': {
        'sigma': 10.0, 'rho': 28.0, 'beta': 2.667,
        'a1': 0.1, 'a2': 0.2, 'alpha': DEFAULT_ALPHA, 'epsilon': 4.94,
    },
}

# Starting point of the reference intermittency runs
REFERENCE_INITIAL_STATE = {'x': 0.0, 'y': 1.0, 'z': 2.0, 'r': 1.0, 'theta': 5.03999}


@dataclass(frozen=True)
class AbcdeParams:
    """Control parameters of the ABCDE system"""
    sigma: float
    rho: float
    beta: float
    a1: float
    a2: float
    alpha: float
    epsilon: float

    def __post_init__(self):
        for name, value in asdict(self).items():
            if not math.isfinite(value):
                raise InvalidInputError(f"AbcdeParams.{name} must be finite")
        if not self.epsilon > 0:
            raise InvalidInputError("epsilon must be > 0")
        if not self.a2 > self.a1 > 0:
            raise InvalidInputError("intermittency regime requires a2 > a1 > 0")

    @classmethod
    def from_preset(cls, name: str, **overrides) -> 'AbcdeParams':
        if name not in PRESETS:
            raise InvalidInputError(f"unknown ABCDE preset '{name}', choose from {sorted(PRESETS)}")
        values = dict(PRESETS[name])
        unknown = set(overrides) - set(values)
        if unknown:
            raise InvalidInputError(f"unknown ABCDE parameters: {sorted(unknown)}")
        values.update(overrides)
        return cls(**values)


@dataclass(frozen=True)
class AbcdeState:
    """State in the (r, theta) form"""
    x: float
    y: float
    z: float
    r: float
    theta: float

    def as_tuple(self) -> Tuple[float, float, float, float, float]:
        return (self.x, self.y, self.z, self.r, self.theta)

    def to_b(self) -> 'AbcdeStateB':
        return AbcdeStateB(
            self.x, self.y, self.z,
            self.r * math.cosh(self.theta), self.r * math.sinh(self.theta),
        )


@dataclass(frozen=True)
class AbcdeStateB:
    """State in the original (b1, b2) form"""
    x: float
    y: float
    z: float
    b1: float
    b2: float

    def as_tuple(self) -> Tuple[float, float, float, float, float]:
        return (self.x, self.y, self.z, self.b1, self.b2)

    def to_rtheta(self) -> AbcdeState:
        """Inverse change of variables; needs b1 > |b2|"""
        if not self.b1 > abs(self.b2):
            raise InvalidInputError("(b1, b2) outside the hyperbolic chart b1 > |b2|")
        r = math.sqrt(self.b1 * self.b1 - self.b2 * self.b2)
        return AbcdeState(self.x, self.y, self.z, r, math.atanh(self.b2 / self.b1))


@dataclass(frozen=True, eq=False)
class Trajectory:
    """Saved states on a uniform grid; columns follow STATE_FIELDS (or b-form)"""
    t0: float
    dt: float
    states: np.ndarray

    def __len__(self) -> int:
        return self.states.shape[0]

    @property
    def times(self) -> np.ndarray:
        return self.t0 + self.dt * np.arange(len(self))

    def column(self, name: str) -> np.ndarray:
        return self.states[:, STATE_FIELDS.index(name)]

    def state(self, index: int) -> AbcdeState:
        return AbcdeState(*(float(v) for v in self.states[index]))

    def r_series(self) -> TimeSeries:
        return TimeSeries(self.t0, self.dt, self.states[:, 3].copy())


def _check_finite(values: Sequence[float]):
    for name, value in zip(STATE_FIELDS, values):
        if not math.isfinite(value):
            raise NumericOverflowError(f"state component {name} is not finite")


def derivatives_rtheta(s: AbcdeState, p: AbcdeParams) -> np.ndarray:
    """(dx, dy, dz, dr, dtheta) of the hyperbolic form"""
    _check_finite(s.as_tuple())
    if abs(s.theta) >= THETA_LIMIT:
        raise BlowUpError(0, f"|theta| = {abs(s.theta):.6g} beyond {THETA_LIMIT}")
    x, y, z, r, theta = s.as_tuple()
    sh = math.sinh(theta)
    ch = math.cosh(theta)
    return np.array([
        p.sigma * (-x + y),
        -y + (p.rho - z) * x,
        -p.beta * z + x * y,
        p.epsilon * r * (-p.a1 + (p.a2 - p.a1) * sh * sh),
        -p.epsilon * (p.a2 - p.a1) * sh * ch + p.alpha * x,
    ])


def derivatives_b(s: AbcdeStateB, p: AbcdeParams) -> np.ndarray:
    """(dx, dy, dz, db1, db2) of the original form"""
    _check_finite(s.as_tuple())
    x, y, z, b1, b2 = s.as_tuple()
    return np.array([
        p.sigma * (-x + y),
        -y + (p.rho - z) * x,
        -p.beta * z + x * y,
        -p.epsilon * p.a1 * b1 + p.alpha * x * b2,
        -p.epsilon * p.a2 * b2 + p.alpha * x * b1,
    ])


def _rk4_loop(rhs: Callable, y0: Tuple[float, ...], dt: float, n: int, substeps: int,
              bound: float, check: Optional[Callable] = None) -> np.ndarray:
    """Generic RK4 on tuples; saves n+1 states, substeps RK4 steps per save"""
    out = np.empty((n + 1, len(y0)))
    out[0] = y0
    h = dt / substeps
    half = 0.5 * h
    sixth = h / 6.0
    y = tuple(float(v) for v in y0)
    step = 0
    saved = 1
    try:
        for i in range(1, n + 1):
            for _ in range(substeps):
                step += 1
                try:
                    k1 = rhs(y)
                    k2 = rhs(tuple(a + half * b for a, b in zip(y, k1)))
                    k3 = rhs(tuple(a + half * b for a, b in zip(y, k2)))
                    k4 = rhs(tuple(a + h * b for a, b in zip(y, k3)))
                except OverflowError as exc:
                    raise BlowUpError(step, str(exc)) from exc
                y = tuple(
                    a + sixth * (b1 + 2.0 * b2 + 2.0 * b3 + b4)
                    for a, b1, b2, b3, b4 in zip(y, k1, k2, k3, k4)
                )
                if not all(math.isfinite(v) and abs(v) <= bound for v in y):
                    raise BlowUpError(step, f"state {y} exceeds bound {bound:g}")
                if check is not None:
                    check(y, step)
            out[i] = y
            saved = i + 1
    except BlowUpError as exc:
        # states saved before the failure, for callers that can use a prefix
        exc.partial = out[:saved].copy()
        raise
    return out


def _validate_run(dt: float, n: int, substeps: int, values: Sequence[float]):
    if not dt > 0:
        raise InvalidInputError(f"dt must be > 0, got {dt}")
    if n < 1:
        raise InvalidInputError(f"step count must be >= 1, got {n}")
    if substeps < 1:
        raise InvalidInputError(f"substeps must be >= 1, got {substeps}")
    if not all(math.isfinite(v) for v in values):
        raise InvalidInputError("initial state must be finite")


def integrate(s0: AbcdeState, p: AbcdeParams, dt: float, n: int,
              bound: float = DEFAULT_BLOWUP_BOUND, substeps: int = 1,
              t0: float = 0.0) -> Trajectory:
    """
    Fixed-step RK4 of the (r, theta) form

    Returns n+1 saved states (s0 first) spaced dt apart; each saved step is
    made of `substeps` RK4 steps of size dt/substeps.
    """
    _validate_run(dt, n, substeps, s0.as_tuple())
    if s0.r < 0:
        raise InvalidInputError("initial r must be non-negative")
    if abs(s0.theta) >= THETA_LIMIT:
        raise BlowUpError(0, f"initial |theta| beyond {THETA_LIMIT}")

    sigma, rho, beta = p.sigma, p.rho, p.beta
    eps_a1 = p.epsilon * p.a1
    eps_da = p.epsilon * (p.a2 - p.a1)
    alpha = p.alpha
    sinh, cosh = math.sinh, math.cosh

    def rhs(s):
        x, y, z, r, th = s
        sh = sinh(th)
        return (
            sigma * (y - x),
            -y + (rho - z) * x,
            -beta * z + x * y,
            r * (eps_da * sh * sh - eps_a1),
            -eps_da * sh * cosh(th) + alpha * x,
        )

    def check(s, step):
        if abs(s[4]) >= THETA_LIMIT:
            raise BlowUpError(step, f"|theta| beyond {THETA_LIMIT}")
        if s[3] < 0:
            raise BlowUpError(step, "r became negative")

    states = _rk4_loop(rhs, s0.as_tuple(), dt, n, substeps, bound, check)
    return Trajectory(t0=t0, dt=dt, states=states)


def integrate_b(s0: AbcdeStateB, p: AbcdeParams, dt: float, n: int,
                bound: float = DEFAULT_BLOWUP_BOUND, substeps: int = 1,
                t0: float = 0.0) -> Trajectory:
    """Same scheme on the original (b1, b2) form; columns x, y, z, b1, b2"""
    _validate_run(dt, n, substeps, s0.as_tuple())
    sigma, rho, beta = p.sigma, p.rho, p.beta
    eps_a1 = p.epsilon * p.a1
    eps_a2 = p.epsilon * p.a2
    alpha = p.alpha

    def rhs(s):
        x, y, z, b1, b2 = s
        return (
            sigma * (y - x),
            -y + (rho - z) * x,
            -beta * z + x * y,
            -eps_a1 * b1 + alpha * x * b2,
            -eps_a2 * b2 + alpha * x * b1,
        )

    states = _rk4_loop(rhs, s0.as_tuple(), dt, n, substeps, bound)
    return Trajectory(t0=t0, dt=dt, states=states)


def growth_exponent(p: AbcdeParams, s0: Optional[AbcdeState] = None, dt: float = CALIBRATION_DT,
                    settle: float = CALIBRATION_SETTLE, horizon: float = CALIBRATION_HORIZON) -> float:
    """
    Finite-time growth rate of the dissipative pair along the Lorenz path

    The b-form is linear in (b1, b2) for a given x(t), so the pair is stepped
    with RK4 alongside the Lorenz subsystem and rescaled to unit norm after
    every step; the mean log growth over `horizon`, after `settle` time units,
    is the exponent. r and |b| share it because theta stays bounded.
    """
    s0 = s0 or AbcdeState(**REFERENCE_INITIAL_STATE)
    if not (dt > 0 and settle >= 0 and horizon > 0):
        raise InvalidInputError("calibration needs dt > 0, settle >= 0 and horizon > 0")

    sigma, rho, beta = p.sigma, p.rho, p.beta
    eps_a1 = p.epsilon * p.a1
    eps_a2 = p.epsilon * p.a2
    alpha = p.alpha

    def rhs(s):
        x, y, z, b1, b2 = s
        return (
            sigma * (y - x),
            -y + (rho - z) * x,
            -beta * z + x * y,
            -eps_a1 * b1 + alpha * x * b2,
            -eps_a2 * b2 + alpha * x * b1,
        )

    settle_steps = int(round(settle / dt))
    steps = int(round(horizon / dt))
    half, sixth = 0.5 * dt, dt / 6.0
    s = (s0.x, s0.y, s0.z, 1.0, 0.0)
    log_growth = 0.0
    for i in range(settle_steps + steps):
        k1 = rhs(s)
        k2 = rhs(tuple(a + half * b for a, b in zip(s, k1)))
        k3 = rhs(tuple(a + half * b for a, b in zip(s, k2)))
        k4 = rhs(tuple(a + dt * b for a, b in zip(s, k3)))
        s = tuple(
            a + sixth * (c1 + 2.0 * c2 + 2.0 * c3 + c4)
            for a, c1, c2, c3, c4 in zip(s, k1, k2, k3, k4)
        )
        norm = math.hypot(s[3], s[4])
        if not (math.isfinite(norm) and norm > 0 and all(math.isfinite(v) for v in s[:3])):
            raise NumericOverflowError(f"calibration path left the finite range at step {i}")
        if i >= settle_steps:
            log_growth += math.log(norm)
        s = (s[0], s[1], s[2], s[3] / norm, s[4] / norm)
    return log_growth / (steps * dt)


@lru_cache(maxsize=32)
def transition_coupling(p: AbcdeParams, epsilon: float = TRANSITION_EPSILON,
                        s0: Optional[AbcdeState] = None, dt: float = CALIBRATION_DT,
                        settle: float = CALIBRATION_SETTLE, horizon: float = CALIBRATION_HORIZON,
                        bracket: Tuple[float, float] = (0.0, 2.0)) -> float:
    """
    alpha at which the growth exponent vanishes for the given epsilon

    With alpha set this way the pair sits at its transition when epsilon
    equals `epsilon`; runs at a slightly smaller epsilon are then just on
    the bursting side. The Lorenz path does not depend on alpha, so every
    evaluation sees the same x(t).
    """
    at_transition = replace(p, epsilon=epsilon)

    def exponent(alpha: float) -> float:
        return growth_exponent(replace(at_transition, alpha=alpha), s0, dt, settle, horizon)

    lo, hi = bracket
    f_lo, f_hi = exponent(lo), exponent(hi)
    if not f_lo < 0 < f_hi:
        raise InvalidInputError(
            f"growth exponent does not change sign on alpha in [{lo}, {hi}] "
            f"({f_lo:.6g}, {f_hi:.6g})"
        )
    alpha = brentq(exponent, lo, hi, xtol=1e-8)
    logger.info(f"Transition coupling alpha={alpha:.8g} at epsilon={epsilon:g} "
                f"(sigma={p.sigma:g}, rho={p.rho:g}, beta={p.beta:g})")
    return float(alpha)


@dataclass(frozen=True)
class BatchConfig:
    """Everything needed to reproduce a batch of ABCDE runs"""
    preset: str = 'paper-verbatim'
    params: AbcdeParams = field(default_factory=lambda: AbcdeParams.from_preset('paper-verbatim'))
    initial_state: AbcdeState = field(default_factory=lambda: AbcdeState(**REFERENCE_INITIAL_STATE))
    dt: float = DEFAULT_DT
    horizon: float = DEFAULT_HORIZON
    substeps: int = 1
    save_every: int = 1
    runs: int = 1
    seed: int = 0
    jitter: float = 0.0
    blowup_bound: float = DEFAULT_BLOWUP_BOUND
    # leading time dropped from every saved r series (start-up transient)
    discard: float = 0.0
    workers: int = 1

    @property
    def steps(self) -> int:
        return max(1, int(round(self.horizon / self.dt)))

    def manifest(self) -> dict:
        return {
            'preset': self.preset,
            'params': asdict(self.params),
            'initial_state': asdict(self.initial_state),
            'dt': self.dt,
            'horizon': self.horizon,
            'substeps': self.substeps,
            'save_every': self.save_every,
            'runs': self.runs,
            'seed': self.seed,
            'jitter': self.jitter,
            'blowup_bound': self.blowup_bound,
            'discard': self.discard,
        }


@dataclass
class RunStatus:
    run_id: str
    ok: bool
    reason: str = ''
    detail: str = ''
    initial_state: Optional[Dict[str, float]] = None


@dataclass
class BatchResult:
    """Ordered run statuses plus the r-series of every successful run"""
    statuses: List[RunStatus]
    series: Dict[str, TimeSeries]

    @property
    def failed(self) -> int:
        return sum(1 for s in self.statuses if not s.ok)

    def ordered_series(self) -> List[TimeSeries]:
        return [self.series[s.run_id] for s in self.statuses if s.ok]


def run_id_for(index: int) -> str:
    return f"run-{index:04d}"


def jittered_state(base: AbcdeState, seed: int, index: int, jitter: float) -> AbcdeState:
    """
    Base state with uniform [-jitter, +jitter] noise on (y, z, theta)

    Each run draws from its own Philox stream keyed by (seed, index), so the
    draw does not depend on how many runs there are or in which order they
    execute.
    """
    if jitter == 0:
        return base
    rng = np.random.Generator(np.random.Philox(np.random.SeedSequence([seed, index])))
    dy, dz, dtheta = rng.uniform(-jitter, jitter, size=3)
    return replace(base, y=base.y + dy, z=base.z + dz, theta=base.theta + dtheta)


def _simulate_one(args) -> Tuple[RunStatus, Optional[TimeSeries]]:
    cfg, index = args
    run_id = run_id_for(index)
    s0 = jittered_state(cfg.initial_state, cfg.seed, index, cfg.jitter)
    status = RunStatus(run_id=run_id, ok=True, initial_state=asdict(s0))
    try:
        traj = integrate(s0, cfg.params, cfg.dt, cfg.steps, bound=cfg.blowup_bound,
                         substeps=cfg.substeps)
    except (BlowUpError, NumericOverflowError) as exc:
        logger.warning(f"{run_id}: {exc}")
        status.ok = False
        status.reason = exc.code
        status.detail = str(exc)
        return status, None

    r = traj.r_series()
    skip = int(round(cfg.discard / cfg.dt))
    if skip:
        r = TimeSeries(r.time_at(skip), r.dt, r.values[skip:])
    if cfg.save_every > 1:
        r = TimeSeries(r.t0, r.dt * cfg.save_every, r.values[::cfg.save_every])
    return status, r


def simulate_batch(cfg: BatchConfig) -> BatchResult:
    """Seeded batch of ABCDE runs; failed runs are recorded and skipped"""
    if cfg.runs < 1:
        raise InvalidInputError("run count must be >= 1")
    if cfg.jitter < 0:
        raise InvalidInputError("jitter amplitude must be non-negative")
    if cfg.save_every < 1:
        raise InvalidInputError("save_every must be >= 1")
    if not 0 <= cfg.discard < cfg.horizon:
        raise InvalidInputError(f"discard must lie in [0, horizon), got {cfg.discard}")

    tasks = [(cfg, i) for i in range(cfg.runs)]
    logger.info(f"Simulating {cfg.runs} ABCDE runs ({cfg.preset}, seed={cfg.seed}, "
                f"steps={cfg.steps}, workers={cfg.workers})")
    if cfg.workers > 1 and cfg.runs > 1:
        with Pool(processes=min(cfg.workers, cfg.runs)) as pool:
            outcomes = list(pool.imap(_simulate_one, tasks))
    else:
        outcomes = [_simulate_one(t) for t in tasks]

    statuses = [status for status, _ in outcomes]
    series = {status.run_id: ts for status, ts in outcomes if ts is not None}
    result = BatchResult(statuses=statuses, series=series)
    if result.failed:
        logger.warning(f"{result.failed}/{cfg.runs} runs failed")
    return result
