"""
Tests for the ABCDE dynamics, integrator and seeded batches
"""
import math
from dataclasses import replace
from decimal import Decimal

import numpy as np
from django.test import SimpleTestCase

from vnv.abcde import (
    PRESETS, REFERENCE_INITIAL_STATE, AbcdeParams, AbcdeState, AbcdeStateB, BatchConfig,
    derivatives_b, derivatives_rtheta, growth_exponent, integrate, integrate_b, jittered_state,
    run_id_for, simulate_batch, transition_coupling,
)
from vnv.config import load_config
from vnv.exceptions import BlowUpError, InvalidInputError, VnvError
from vnv.timeseries import WINDOW_FRACTIONS, analysis_window, segment_drawdowns

from .helpers import decimal_context, slow


def short_batch(**overrides) -> BatchConfig:
    """A few hundred RK4 steps from the reference state"""
    values = dict(
        preset='paper-verbatim',
        params=AbcdeParams.from_preset('paper-verbatim'),
        initial_state=AbcdeState(**REFERENCE_INITIAL_STATE),
        dt=0.005, horizon=0.5, substeps=12, runs=3, seed=11, jitter=1e-3,
    )
    values.update(overrides)
    return BatchConfig(**values)


class AbcdeParamsTest(SimpleTestCase):
    """Test presets and parameter validation"""

    def test_presets_swap_rho_and_beta(self):
        verbatim = AbcdeParams.from_preset('paper-verbatim')
        standard = AbcdeParams.from_preset('lorenz-standard')
        self.assertEqual((verbatim.rho, verbatim.beta), (2.667, 28.0))
        self.assertEqual((standard.rho, standard.beta), (28.0, 2.667))
        self.assertEqual(verbatim.epsilon, 4.94)

    def test_overrides(self):
        p = AbcdeParams.from_preset('lorenz-standard', alpha=0.1)
        self.assertEqual(p.alpha, 0.1)
        self.assertEqual(p.sigma, PRESETS['lorenz-standard']['sigma'])

    def test_invalid_parameters(self):
        with self.assertRaises(InvalidInputError):
            AbcdeParams.from_preset('nope')
        with self.assertRaises(InvalidInputError):
            AbcdeParams.from_preset('paper-verbatim', gamma=1.0)
        with self.assertRaises(InvalidInputError):
            AbcdeParams.from_preset('paper-verbatim', a1=0.3)
        with self.assertRaises(InvalidInputError):
            AbcdeParams.from_preset('paper-verbatim', epsilon=math.nan)


class DerivativesTest(SimpleTestCase):
    """Test the two right-hand sides"""

    def setUp(self):
        self.p = AbcdeParams.from_preset('lorenz-standard')
        self.s = AbcdeState(x=1.5, y=-0.7, z=3.2, r=0.8, theta=0.9)

    def test_rtheta_against_decimal(self):
        decimal_context(50)
        x, r, theta = Decimal('1.5'), Decimal('0.8'), Decimal('0.9')
        eps, a1, a2, alpha = Decimal('4.94'), Decimal('0.1'), Decimal('0.2'), Decimal('1.0')
        e, inv = theta.exp(), (-theta).exp()
        sinh, cosh = (e - inv) / 2, (e + inv) / 2
        dr = eps * r * (-a1 + (a2 - a1) * sinh * sinh)
        dtheta = -eps * (a2 - a1) * sinh * cosh + alpha * x

        d = derivatives_rtheta(self.s, self.p)
        self.assertAlmostEqual(d[3], float(dr), delta=1e-14 * abs(float(dr)))
        self.assertAlmostEqual(d[4], float(dtheta), delta=1e-14 * abs(float(dtheta)))
        self.assertAlmostEqual(d[0], 10.0 * (-1.5 - 0.7))
        self.assertAlmostEqual(d[1], 0.7 + (28.0 - 3.2) * 1.5)
        self.assertAlmostEqual(d[2], -2.667 * 3.2 + 1.5 * -0.7)

    def test_forms_agree_under_change_of_variables(self):
        d = derivatives_rtheta(self.s, self.p)
        db = derivatives_b(self.s.to_b(), self.p)
        ch, sh = math.cosh(self.s.theta), math.sinh(self.s.theta)
        # b1 = r cosh(theta), b2 = r sinh(theta)
        self.assertAlmostEqual(db[3], d[3] * ch + self.s.r * sh * d[4], places=12)
        self.assertAlmostEqual(db[4], d[3] * sh + self.s.r * ch * d[4], places=12)
        np.testing.assert_allclose(db[:3], d[:3])

    def test_state_conversion(self):
        back = self.s.to_b().to_rtheta()
        self.assertAlmostEqual(back.r, self.s.r, places=14)
        self.assertAlmostEqual(back.theta, self.s.theta, places=14)
        with self.assertRaises(InvalidInputError):
            AbcdeStateB(0, 0, 0, 1.0, 2.0).to_rtheta()


class IntegratorTest(SimpleTestCase):
    """Test fixed-step RK4"""

    def test_convergence_order_on_decay(self):
        # origin of the Lorenz part with theta = 0 leaves r' = -epsilon*a1*r
        p = AbcdeParams.from_preset('paper-verbatim')
        s0 = AbcdeState(0.0, 0.0, 0.0, 1.0, 0.0)
        horizon = 2.0
        exact = math.exp(-p.epsilon * p.a1 * horizon)

        errors = []
        for dt in (0.1, 0.05, 0.025):
            traj = integrate(s0, p, dt, int(round(horizon / dt)))
            errors.append(abs(traj.column('r')[-1] - exact))
        orders = [math.log2(a / b) for a, b in zip(errors, errors[1:])]
        for order in orders:
            self.assertGreaterEqual(order, 3.8)
            self.assertLessEqual(order, 4.2)

    def test_cross_form_consistency(self):
        p = AbcdeParams.from_preset('paper-verbatim', alpha=0.05)
        s0 = AbcdeState(1.0, 1.0, 1.0, 1.0, 0.3)
        dt, n = 1e-3, 10_000

        rt = integrate(s0, p, dt, n)
        b = integrate_b(s0.to_b(), p, dt, n)
        r, theta = rt.column('r'), rt.column('theta')
        np.testing.assert_allclose(r * np.cosh(theta), b.states[:, 3], rtol=1e-8, atol=1e-10)
        np.testing.assert_allclose(r * np.sinh(theta), b.states[:, 4], rtol=1e-8, atol=1e-10)
        np.testing.assert_allclose(rt.states[:, :3], b.states[:, :3], rtol=1e-10, atol=1e-10)

    def test_substeps_save_on_dt_grid(self):
        p = AbcdeParams.from_preset('paper-verbatim')
        s0 = AbcdeState(**REFERENCE_INITIAL_STATE)
        traj = integrate(s0, p, 0.005, 40, substeps=12)
        self.assertEqual(len(traj), 41)
        self.assertAlmostEqual(traj.times[-1], 0.2)
        self.assertEqual(traj.state(0), s0)
        self.assertTrue(np.all(np.isfinite(traj.states)))

    def test_blow_up_keeps_saved_prefix(self):
        p = AbcdeParams.from_preset('paper-verbatim')
        s0 = AbcdeState(0.0, 1.0, 2.0, 1.0, 0.0)
        with self.assertRaises(BlowUpError) as ctx:
            integrate(s0, p, 0.01, 100, bound=0.5)
        self.assertEqual(ctx.exception.step, 1)
        self.assertEqual(ctx.exception.partial.shape, (1, 5))
        self.assertEqual(ctx.exception.code, 'blow-up')

    def test_theta_limit(self):
        p = AbcdeParams.from_preset('paper-verbatim')
        with self.assertRaises(BlowUpError) as ctx:
            integrate(AbcdeState(0, 0, 0, 1.0, 300.0), p, 0.01, 10)
        self.assertEqual(ctx.exception.step, 0)
        self.assertIsNone(ctx.exception.partial)

    def test_invalid_arguments(self):
        p = AbcdeParams.from_preset('paper-verbatim')
        s0 = AbcdeState(**REFERENCE_INITIAL_STATE)
        for kwargs in ({'dt': 0.0, 'n': 10}, {'dt': 0.01, 'n': 0}):
            with self.assertRaises(InvalidInputError):
                integrate(s0, p, **kwargs)
        with self.assertRaises(InvalidInputError):
            integrate(s0, p, 0.01, 10, substeps=0)
        with self.assertRaises(InvalidInputError):
            integrate(replace(s0, r=-1.0), p, 0.01, 10)


class BatchTest(SimpleTestCase):
    """Test seeded batches"""

    def test_jitter_streams(self):
        base = AbcdeState(**REFERENCE_INITIAL_STATE)
        self.assertIs(jittered_state(base, 1, 0, 0.0), base)

        a = jittered_state(base, 1, 0, 1e-3)
        self.assertEqual(a, jittered_state(base, 1, 0, 1e-3))
        self.assertNotEqual(a, jittered_state(base, 1, 1, 1e-3))
        self.assertNotEqual(a, jittered_state(base, 2, 0, 1e-3))
        self.assertEqual((a.x, a.r), (base.x, base.r))
        for name in ('y', 'z', 'theta'):
            self.assertLessEqual(abs(getattr(a, name) - getattr(base, name)), 1e-3)

    def test_batch_is_reproducible(self):
        first = simulate_batch(short_batch())
        second = simulate_batch(short_batch())

        self.assertEqual([s.run_id for s in first.statuses], [run_id_for(i) for i in range(3)])
        for run_id, ts in first.series.items():
            np.testing.assert_array_equal(ts.values, second.series[run_id].values)

    def test_worker_pool_matches_in_process(self):
        serial = simulate_batch(short_batch())
        pooled = simulate_batch(short_batch(workers=2))
        self.assertEqual(list(serial.series), list(pooled.series))
        for run_id, ts in serial.series.items():
            np.testing.assert_array_equal(ts.values, pooled.series[run_id].values)

    def test_save_every_decimates(self):
        batch = simulate_batch(short_batch(save_every=5, runs=1))
        ts = batch.series['run-0000']
        self.assertEqual(len(ts), 100 // 5 + 1)
        self.assertAlmostEqual(ts.dt, 0.025)

    def test_failed_runs_are_recorded(self):
        batch = simulate_batch(short_batch(blowup_bound=1.5, runs=2))
        self.assertEqual(batch.failed, 2)
        self.assertEqual(batch.series, {})
        self.assertTrue(all(s.reason == 'blow-up' for s in batch.statuses))
        self.assertEqual(batch.ordered_series(), [])

    def test_manifest(self):
        manifest = short_batch().manifest()
        self.assertEqual(manifest['params']['rho'], 2.667)
        self.assertEqual(manifest['runs'], 3)
        self.assertEqual(manifest['initial_state']['theta'], 5.03999)

    def test_discard_drops_the_transient(self):
        full = simulate_batch(short_batch(runs=1)).series['run-0000']
        trimmed = simulate_batch(short_batch(runs=1, discard=0.1)).series['run-0000']
        self.assertAlmostEqual(trimmed.t0, 0.1)
        self.assertEqual(len(trimmed), len(full) - 20)
        np.testing.assert_array_equal(trimmed.values, full.values[20:])

    def test_discard_applies_before_decimation(self):
        batch = simulate_batch(short_batch(runs=1, discard=0.1, save_every=5))
        ts = batch.series['run-0000']
        self.assertAlmostEqual(ts.t0, 0.1)
        self.assertEqual(len(ts), 81 // 5 + 1)

    def test_discard_must_leave_samples(self):
        for discard in (-0.1, 0.5):
            with self.subTest(discard=discard), self.assertRaises(InvalidInputError):
                simulate_batch(short_batch(discard=discard))


class TransitionCouplingTest(SimpleTestCase):
    """Test the growth exponent of the dissipative pair and alpha calibration"""

    def test_uncoupled_pair_decays_at_slower_rate(self):
        p = AbcdeParams.from_preset('lorenz-standard', alpha=0.0, epsilon=5.0)
        self.assertAlmostEqual(growth_exponent(p, settle=1.0, horizon=5.0), -0.5, places=8)

    def test_fixed_point_transition_matches_closed_form(self):
        # paper-verbatim settles onto a fixed point with x**2 = beta * (rho - 1)
        p = AbcdeParams.from_preset('paper-verbatim')
        alpha = transition_coupling(p, 5.0, settle=20.0, horizon=20.0)
        x_star = math.sqrt(p.beta * (p.rho - 1.0))
        self.assertAlmostEqual(alpha, 5.0 * math.sqrt(p.a1 * p.a2) / x_star, places=5)
        at_transition = replace(p, alpha=alpha, epsilon=5.0)
        self.assertAlmostEqual(growth_exponent(at_transition, settle=20.0, horizon=20.0), 0.0, places=6)

    def test_strong_coupling_grows(self):
        p = AbcdeParams.from_preset('lorenz-standard', epsilon=5.0)
        self.assertLess(growth_exponent(replace(p, alpha=0.0), settle=5.0, horizon=20.0), 0.0)
        self.assertGreater(growth_exponent(replace(p, alpha=1.0), settle=5.0, horizon=20.0), 0.0)

    def test_bracket_without_sign_change(self):
        p = AbcdeParams.from_preset('paper-verbatim')
        with self.assertRaises(InvalidInputError):
            transition_coupling(p, 5.0, settle=20.0, horizon=5.0, bracket=(0.0, 0.01))

    def test_calibration_arguments(self):
        p = AbcdeParams.from_preset('paper-verbatim')
        with self.assertRaises(InvalidInputError):
            growth_exponent(p, horizon=0.0)


class IntermittencyTest(SimpleTestCase):
    """Default coupling produces repeated bursts; enabled with LPPL_VNV_RUN_SLOW=1"""

    @classmethod
    def batch(cls):
        if not hasattr(cls, '_batch'):
            cfg = load_config(overrides=['runs=9', 'abcde.horizon=300.0', 'workers=4'])
            cls._batch = simulate_batch(cfg.batch_config())
        return cls._batch

    @slow
    def test_majority_of_runs_have_two_drawdowns(self):
        batch = self.batch()
        counts = [len(segment_drawdowns(ts, 0.15)) for ts in batch.ordered_series()]
        bursting = sum(1 for c in counts if c >= 2)
        self.assertGreater(bursting, len(batch.statuses) / 2, counts)

    @slow
    def test_seeded_run_has_nested_windows(self):
        for ts in self.batch().ordered_series():
            events = segment_drawdowns(ts, 0.15)
            if len(events) < 2:
                continue
            try:
                windows = {name: analysis_window(ts, events, fraction, 50)
                           for name, fraction in WINDOW_FRACTIONS.items()}
            except VnvError:
                continue
            ends = [windows[name].end_index for name in ('quarter', 'third', 'half')]
            self.assertEqual(ends, sorted(set(ends)))
            self.assertEqual(len({w.start_index for w in windows.values()}), 1)
            return
        self.fail("no run has windows for every fraction")
