"""
Tests for the experiment engine, comparison and plot datasets
"""
import math
import shutil
import tempfile
from pathlib import Path
from unittest import mock

import numpy as np
import pandas as pd
from django.test import SimpleTestCase

from vnv.abcde import REFERENCE_INITIAL_STATE, AbcdeParams, AbcdeState, BatchConfig, Trajectory
from vnv.config import load_config
from vnv.engine import (
    build_plot_data, collect_records, compare_algorithms, emit_plot_data, run_experiment,
    simulate_series,
)
from vnv.engine.experiment_engine import mae_ratio
from vnv.estimators import SUBORDINATED, registry
from vnv.exceptions import ExperimentFailedError, InvalidInputError
from vnv.persistence import load_json

from .helpers import (
    CountingProvider, MonotoneRunProvider, assert_golden, degenerate_estimator, failing_estimator,
    fast_estimator, slow,
)


class PipelineTestCase(SimpleTestCase):
    """Temporary output directory per test"""

    def setUp(self):
        self.tmp = Path(tempfile.mkdtemp(prefix='vnv-test-'))

    def tearDown(self):
        shutil.rmtree(self.tmp, ignore_errors=True)

    def config(self, *overrides, output_dir=None):
        output_dir = output_dir or self.tmp
        return load_config(preset='oracle', overrides=[f'output_dir="{output_dir}"', *overrides])


class OraclePipelineTest(SimpleTestCase):
    """Full pipeline on synthetic bubbles with known tc"""

    @classmethod
    def setUpClass(cls):
        super().setUpClass()
        cls.tmp = Path(tempfile.mkdtemp(prefix='vnv-oracle-'))
        cls.cfg = load_config(preset='oracle', overrides=[f'output_dir="{cls.tmp}"', 'runs=2'])
        cls.report = run_experiment(cls.cfg)

    @classmethod
    def tearDownClass(cls):
        shutil.rmtree(cls.tmp, ignore_errors=True)
        super().tearDownClass()

    def test_three_hypotheses_with_equal_n(self):
        self.assertEqual(len(self.report.rows), 3)
        self.assertEqual({row.n for row in self.report.rows}, {2})
        self.assertEqual(self.report.n, 2)
        self.assertEqual(self.report.runs_total, 2)
        self.assertEqual(self.report.skipped, {})

    def test_estimates_are_close_to_truth(self):
        for fraction, mae in self.report.mae.items():
            with self.subTest(fraction=fraction):
                self.assertLessEqual(mae, 3.0)

    def test_artifacts_written(self):
        run_dir = self.cfg.run_dir
        self.assertEqual(run_dir.name, self.cfg.fingerprint)
        for name in ('config.json', 'batch_manifest.json', 'report.csv', 'report.json', 'report.txt'):
            self.assertTrue((run_dir / name).is_file(), name)
        self.assertEqual(sorted(p.name for p in (run_dir / 'records').iterdir()),
                         ['run-0000.json', 'run-0001.json'])
        self.assertEqual(sorted(p.name for p in (run_dir / 'series').iterdir()),
                         ['run-0000.csv', 'run-0001.csv'])

        frame = pd.read_csv(run_dir / 'report.csv', dtype=str)
        self.assertEqual(list(frame.columns), ['hypothesis', 'p_raw', 'p_corrected', 'n'])
        self.assertEqual(load_json(run_dir / 'report.json')['fingerprint'], self.cfg.fingerprint)

    def test_known_critical_time(self):
        record = load_json(self.cfg.run_dir / 'records' / 'run-0000.json')
        self.assertEqual(record['status'], 'ok')
        self.assertEqual(record['tc'], 150.0)
        self.assertEqual(record['peak_value'], 20.0)


class ExperimentEngineTest(PipelineTestCase):
    """Engine behaviour with a fixed-offset estimator"""

    def test_byte_identical_artifacts(self):
        first_dir, second_dir = self.tmp / 'a', self.tmp / 'b'
        with fast_estimator():
            first = run_experiment(self.config(output_dir=first_dir))
            second = run_experiment(self.config(output_dir=second_dir))

        self.assertEqual(first.fingerprint, second.fingerprint)
        run_a, run_b = first_dir / first.fingerprint, second_dir / second.fingerprint
        for name in ('report.json', 'report.csv', 'report.txt', 'batch_manifest.json'):
            self.assertEqual((run_a / name).read_bytes(), (run_b / name).read_bytes(), name)
        for record in (run_a / 'records').iterdir():
            self.assertEqual(record.read_bytes(), (run_b / 'records' / record.name).read_bytes())

    def test_skipped_runs_are_counted(self):
        cfg = self.config('runs=3')
        with fast_estimator():
            report = run_experiment(cfg, MonotoneRunProvider(['run-0002'], cfg.synthetic))

        self.assertEqual(report.runs_total, 3)
        self.assertEqual(report.n, 2)
        self.assertEqual(report.skipped, {'not-enough-events': 1})
        self.assertEqual(report.n + sum(report.skipped.values()), report.runs_total)
        record = load_json(cfg.run_dir / 'records' / 'run-0002.json')
        self.assertEqual((record['status'], record['reason']), ('skipped', 'not-enough-events'))

    def test_no_usable_runs(self):
        cfg = self.config('runs=2')
        provider = MonotoneRunProvider(['run-0000', 'run-0001'], cfg.synthetic)
        with fast_estimator(), self.assertRaises(ExperimentFailedError):
            run_experiment(cfg, provider)
        self.assertFalse((cfg.run_dir / 'report.json').exists())
        self.assertEqual(len(list((cfg.run_dir / 'records').iterdir())), 2)

    def test_fit_failures_skip_the_run(self):
        cfg = self.config('runs=2')
        with failing_estimator():
            records = collect_records(cfg)
        self.assertEqual([r.reason for r in records], ['fit-failed', 'fit-failed'])
        self.assertIn('half/subordinated', records[0].detail)

    def test_numeric_errors_count_as_fit_failures(self):
        cfg = self.config('runs=2')
        with degenerate_estimator():
            records = collect_records(cfg)
        self.assertEqual([r.reason for r in records], ['fit-failed', 'fit-failed'])
        self.assertIn('degenerate-design', records[0].detail)
        self.assertIn('OverflowError', records[0].detail)

    def test_window_ordering(self):
        cfg = self.config('runs=3')
        with fast_estimator():
            records = collect_records(cfg)
        for record in records:
            self.assertTrue(record.ok)
            ends = [record.windows[f]['end_index'] for f in ('quarter', 'third', 'half')]
            self.assertEqual(ends, sorted(ends))
            self.assertLess(ends[-1], record.events[-1]['peak_index'])
            self.assertEqual(record.error('half', SUBORDINATED),
                             abs(record.estimates['half'][SUBORDINATED]['tc_hat'] - record.tc))

    def test_resume_reuses_records_and_series(self):
        cfg = self.config('runs=2')
        provider = CountingProvider(cfg.synthetic)
        with fast_estimator():
            first = run_experiment(cfg, provider)
            self.assertEqual(provider.calls, 1)

            second = run_experiment(cfg, provider)
            self.assertEqual(provider.calls, 1)

            (cfg.run_dir / 'records' / 'run-0001.json').unlink()
            third = run_experiment(cfg, provider)
            self.assertEqual(provider.calls, 1)

        self.assertEqual(first.to_dict(), second.to_dict())
        self.assertEqual(first.to_dict(), third.to_dict())

    def test_simulate_series_only(self):
        cfg = self.config('runs=2')
        batch = simulate_series(cfg)
        self.assertEqual(batch.failed, 0)
        manifest = load_json(cfg.run_dir / 'batch_manifest.json')
        self.assertEqual(manifest['source'], 'synthetic')
        self.assertEqual([s['run_id'] for s in manifest['statuses']], ['run-0000', 'run-0001'])
        self.assertTrue((cfg.run_dir / 'series' / 'run-0001.csv').is_file())
        self.assertFalse((cfg.run_dir / 'records').exists())


class CompareAlgorithmsTest(PipelineTestCase):
    """MAE ratios between estimators"""

    def test_self_comparison_has_unit_ratio(self):
        cfg = self.config('runs=2', 'compare.challenger="subordinated"')
        with fast_estimator():
            summary = compare_algorithms(cfg)

        self.assertEqual(summary['aggregate']['ratio'], 1.0)
        for fraction, row in summary['classes'].items():
            self.assertEqual(row['ratio'], 1.0, fraction)
            self.assertEqual(row['baseline_mae'], row['challenger_mae'])
        self.assertEqual(summary['n'], 2)
        self.assertTrue((cfg.run_dir / 'compare.json').is_file())

    def test_unknown_algorithm(self):
        cfg = self.config('runs=2')
        with mock.patch.dict(registry._estimators, clear=True), self.assertRaises(InvalidInputError):
            compare_algorithms(cfg)

    def test_low_ratio_on_verbatim_preset_reruns_on_fallback(self):
        cfg = load_config(overrides=[
            f'output_dir="{self.tmp}"', 'abcde.preset="paper-verbatim"', 'abcde.sigma=12.0',
        ])
        low = {'fingerprint': 'first', 'aggregate': {'ratio': 2.0}}
        high = {'fingerprint': 'second', 'aggregate': {'ratio': 40.0}}
        with mock.patch('vnv.engine.experiment_engine._compare_once', side_effect=[low, high]) as once:
            summary = compare_algorithms(cfg)

        retry = once.call_args_list[1].args[0]
        self.assertEqual(retry.abcde['preset'], 'lorenz-standard')
        self.assertEqual(retry.abcde['rho'], 28.0)
        self.assertEqual(retry.abcde['beta'], 2.667)
        self.assertEqual(retry.abcde['sigma'], 12.0)
        self.assertEqual(summary['aggregate']['ratio'], 40.0)
        self.assertEqual(summary['fallback_from'], {
            'abcde_preset': 'paper-verbatim', 'fingerprint': 'first', 'ratio': 2.0, 'error': None,
        })
        written = load_json(retry.with_overrides(algorithms=['phase_transition', 'subordinated']).run_dir
                            / 'compare.json')
        self.assertEqual(written['fallback_from']['ratio'], 2.0)

    def test_failed_comparison_reruns_on_fallback(self):
        cfg = load_config(overrides=[f'output_dir="{self.tmp}"', 'abcde.preset="paper-verbatim"'])
        high = {'fingerprint': 'second', 'aggregate': {'ratio': 40.0}}
        failure = ExperimentFailedError('no usable runs')
        with mock.patch('vnv.engine.experiment_engine._compare_once', side_effect=[failure, high]):
            summary = compare_algorithms(cfg)
        self.assertIsNone(summary['fallback_from']['ratio'])
        self.assertIn('no usable runs', summary['fallback_from']['error'])

    def test_no_fallback_from_fallback_preset(self):
        cfg = load_config(overrides=[f'output_dir="{self.tmp}"'])
        low = {'fingerprint': 'first', 'aggregate': {'ratio': 2.0}}
        with mock.patch('vnv.engine.experiment_engine._compare_once', side_effect=[low]) as once:
            summary = compare_algorithms(cfg)
        self.assertEqual(once.call_count, 1)
        self.assertNotIn('fallback_from', summary)

    def test_mae_ratio(self):
        self.assertEqual(mae_ratio(3.0, 2.0), 1.5)
        self.assertEqual(mae_ratio(0.0, 0.0), 1.0)
        self.assertEqual(mae_ratio(1.0, 0.0), math.inf)
        self.assertEqual(mae_ratio(0.0, 4.0), 0.0)


class PlotDataTest(PipelineTestCase):
    """Plot datasets from short ABCDE trajectories"""

    def batch(self, **overrides):
        values = dict(
            preset='lorenz-standard', params=AbcdeParams.from_preset('lorenz-standard', alpha=0.1),
            initial_state=AbcdeState(**REFERENCE_INITIAL_STATE),
            dt=0.005, horizon=0.25, substeps=12, runs=2, seed=7, jitter=1e-3,
        )
        values.update(overrides)
        return BatchConfig(**values)

    def test_projection_columns(self):
        paths = build_plot_data(self.batch(), 2, self.tmp / 'plots', meta={'fingerprint': 'abc'})

        self.assertEqual(set(paths), {'lorenz_xz', 'lorenz_x_ymz', 'r_series', 'sidecar'})
        xz = pd.read_csv(paths['lorenz_xz'])
        ymz = pd.read_csv(paths['lorenz_x_ymz'])
        r = pd.read_csv(paths['r_series'])
        self.assertEqual(list(xz.columns), ['x', 'z'])
        self.assertEqual(list(ymz.columns), ['x', 'y_minus_z'])
        self.assertEqual(list(r.columns), ['time', 'r_run-0000', 'r_run-0001'])
        self.assertEqual(len(xz), 51)
        self.assertEqual(xz.iloc[0]['x'], 0.0)
        self.assertAlmostEqual(ymz.iloc[0]['y_minus_z'], 1.0 - 2.0)

        sidecar = load_json(paths['sidecar'])
        self.assertEqual(sidecar['fingerprint'], 'abc')
        self.assertEqual(sidecar['samples'], 51)
        self.assertIsNone(sidecar['reference_blowup_step'])
        self.assertEqual(sidecar['run_blowup_steps'], {})

    def test_y_minus_z_is_pointwise(self):
        states = np.array([[1.0, 4.0, 2.5, 1.0, 0.0], [2.0, -1.0, 0.5, 1.0, 0.1]])
        traj = Trajectory(0.0, 0.1, states)
        paths = emit_plot_data(traj, {'run-0000': traj.r_series()}, self.tmp / 'direct')
        frame = pd.read_csv(paths['lorenz_x_ymz'])
        np.testing.assert_array_equal(frame['y_minus_z'].to_numpy(), states[:, 1] - states[:, 2])

    def test_stride_and_determinism(self):
        first = build_plot_data(self.batch(), 1, self.tmp / 'one', stride=5)
        second = build_plot_data(self.batch(), 1, self.tmp / 'two', stride=5)
        for name in ('lorenz_xz', 'lorenz_x_ymz', 'r_series', 'sidecar'):
            self.assertEqual(first[name].read_bytes(), second[name].read_bytes(), name)
        self.assertEqual(len(pd.read_csv(first['lorenz_xz'])), 11)

    def test_blown_up_run_keeps_prefix(self):
        paths = build_plot_data(self.batch(blowup_bound=0.5), 1, self.tmp / 'blow')
        sidecar = load_json(paths['sidecar'])
        self.assertEqual(sidecar['reference_blowup_step'], 1)
        self.assertEqual(sidecar['run_blowup_steps'], {'run-0000': 1})
        self.assertEqual(len(pd.read_csv(paths['r_series'])), 1)
        self.assertEqual(len(pd.read_csv(paths['lorenz_xz'])), 1)

    def test_invalid_arguments(self):
        with self.assertRaises(InvalidInputError):
            build_plot_data(self.batch(), 0, self.tmp)
        with self.assertRaises(InvalidInputError):
            build_plot_data(self.batch(), 1, self.tmp, stride=0)


class AcceptanceTest(PipelineTestCase):
    """Desk-scale runs; enabled with LPPL_VNV_RUN_SLOW=1"""

    @slow
    def test_desk_replication_fails_to_reject(self):
        cfg = load_config(preset='desk', overrides=[
            f'output_dir="{self.tmp}"', 'workers=4',
        ])
        report = run_experiment(cfg)
        self.assertEqual(len(report.rows), 3)
        self.assertEqual(len({row.n for row in report.rows}), 1)
        for row in report.rows:
            with self.subTest(hypothesis=row.label):
                self.assertGreater(row.p_corrected, 0.05)
        assert_golden(self, 'desk_report.csv', (cfg.run_dir / 'report.csv').read_bytes())
        assert_golden(self, 'desk_report.json', (cfg.run_dir / 'report.json').read_bytes())

    @slow
    def test_oracle_comparison_favours_subordinated(self):
        summary = compare_algorithms(self.config())
        self.assertLessEqual(summary['aggregate']['baseline_mae'], 3.0)
        self.assertGreater(summary['aggregate']['ratio'], 1.0)

    @slow
    def test_desk_comparison_ratio(self):
        cfg = load_config(preset='desk', overrides=[
            f'output_dir="{self.tmp}"', 'runs=25', 'workers=4',
        ])
        summary = compare_algorithms(cfg)
        self.assertGreaterEqual(summary['aggregate']['ratio'], 10.0)
