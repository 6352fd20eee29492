"""
Tests for the management commands: exit codes, stdout contract and audit rows
"""
import json
import shutil
import tempfile
from io import StringIO
from pathlib import Path
from unittest import mock

from django.core.management import call_command, load_command_class
from django.core.management.base import CommandError
from django.test import TestCase

from vnv.models import ExperimentRun
from vnv.providers import SyntheticLpplProvider

from .helpers import failing_estimator, fast_estimator


class CommandTestCase(TestCase):
    """Temporary output directory and captured stdout"""

    def setUp(self):
        self.tmp = Path(tempfile.mkdtemp(prefix='vnv-cmd-'))
        self.overrides = [f'output_dir="{self.tmp}"', 'runs=2']

    def tearDown(self):
        shutil.rmtree(self.tmp, ignore_errors=True)

    def call(self, name, *args, **options):
        out = StringIO()
        call_command(name, *args, stdout=out, stderr=StringIO(), **options)
        return out.getvalue()


class ExitCodeTest(CommandTestCase):
    """Errors map to documented exit codes"""

    def test_missing_config_file(self):
        with self.assertRaises(CommandError) as ctx:
            self.call('vnv', config=str(self.tmp / 'missing.json'), overrides=self.overrides)
        self.assertEqual(ctx.exception.returncode, 2)
        self.assertIn('config error', str(ctx.exception))
        self.assertEqual(list(self.tmp.iterdir()), [])
        self.assertFalse(ExperimentRun.objects.exists())

    def test_unknown_override_key(self):
        with self.assertRaises(CommandError) as ctx:
            self.call('simulate', overrides=['abcde.gamma=2'])
        self.assertEqual(ctx.exception.returncode, 2)
        self.assertIn('abcde.gamma', str(ctx.exception))

    def test_experiment_failed(self):
        with failing_estimator(), self.assertRaises(CommandError) as ctx:
            self.call('vnv', preset='oracle', overrides=self.overrides)
        self.assertEqual(ctx.exception.returncode, 3)
        run = ExperimentRun.objects.get()
        self.assertEqual(run.status, 'FAILED')
        self.assertEqual(len(run.errors), 1)

    def test_missing_report(self):
        with self.assertRaises(CommandError) as ctx:
            self.call('report', str(self.tmp))
        self.assertEqual(ctx.exception.returncode, 4)

    def test_unreadable_report(self):
        (self.tmp / 'report.json').write_text('{"rows": ')
        with self.assertRaises(CommandError) as ctx:
            self.call('report', str(self.tmp))
        self.assertEqual(ctx.exception.returncode, 4)

    def test_window_outside_series(self):
        path = SyntheticLpplProvider().build(0.5, 6.0, 1.0)[0].to_csv(self.tmp / 'bubble.csv')
        with self.assertRaises(CommandError) as ctx:
            self.call('fit', series=str(path), window_end=5000, overrides=self.overrides)
        self.assertEqual(ctx.exception.returncode, 1)
        self.assertIn('invalid-input', str(ctx.exception))


class ExperimentCommandsTest(CommandTestCase):
    """simulate / vnv / compare / report end to end"""

    def test_simulate_prints_manifest_path(self):
        out = self.call('simulate', preset='oracle', overrides=self.overrides)
        path = Path(out.strip())
        self.assertEqual(path.name, 'batch_manifest.json')
        self.assertTrue(path.is_file())

        run = ExperimentRun.objects.get()
        self.assertEqual((run.kind, run.status, run.runs_ok), ('simulate', 'COMPLETED', 2))
        self.assertEqual(run.output_dir, str(path.parent))

    def test_simulate_json(self):
        document = json.loads(self.call('simulate', preset='oracle', overrides=self.overrides, json=True))
        self.assertEqual(document['runs'], 2)
        self.assertEqual(document['failed'], 0)
        self.assertEqual(len(document['series']), 2)

    def test_vnv_then_report(self):
        with fast_estimator():
            out = self.call('vnv', preset='oracle', overrides=self.overrides)
        report_csv = Path(out.strip())
        self.assertEqual(report_csv.name, 'report.csv')
        self.assertTrue(report_csv.is_file())

        run = ExperimentRun.objects.get(kind='vnv')
        self.assertEqual(run.status, 'COMPLETED')
        self.assertEqual(run.runs_ok, 2)
        self.assertEqual(run.report['n'], 2)

        text = self.call('report', str(report_csv.parent))
        self.assertIn('Hypothesis', text.splitlines()[0])
        self.assertIn('MAE 50%', text)
        document = json.loads(self.call('report', str(report_csv.parent / 'report.json'), json=True))
        self.assertEqual(document['fingerprint'], report_csv.parent.name)

    def test_progress_only_at_high_verbosity(self):
        with fast_estimator():
            quiet = self.call('vnv', preset='oracle', overrides=self.overrides)
            chatty = self.call('vnv', preset='oracle', overrides=self.overrides, verbosity=2)
        self.assertEqual(len(quiet.strip().splitlines()), 1)
        self.assertIn('Hypothesis', chatty)
        self.assertEqual(chatty.strip().splitlines()[-1], quiet.strip())

    def test_vnv_queue(self):
        with mock.patch('vnv.management.commands.vnv.run_experiment_task') as task:
            out = self.call('vnv', preset='oracle', overrides=self.overrides, queue=True)
        run = ExperimentRun.objects.get()
        task.delay.assert_called_once_with(run.run_id)
        self.assertEqual(out.strip(), run.run_id)
        self.assertEqual(run.status, 'PENDING')
        self.assertTrue(run.run_id.startswith('vnv-'))

    def test_compare(self):
        with fast_estimator():
            out = self.call(
                'compare', preset='oracle', overrides=self.overrides + ['compare.challenger="subordinated"'],
            )
        self.assertEqual(Path(out.strip()).name, 'compare.json')
        run = ExperimentRun.objects.get(kind='compare')
        self.assertEqual(run.report['aggregate']['ratio'], 1.0)


class FitCommandTest(CommandTestCase):
    """Single-window fit from a CSV series"""

    def test_fit_recovers_synthetic_tc(self):
        provider = SyntheticLpplProvider()
        ts, truth = provider.build(0.5, 6.0, 1.0)
        path = ts.to_csv(self.tmp / 'bubble.csv')
        output = self.tmp / 'fit.json'

        out = self.call(
            'fit', series=str(path), window_start=30, window_end=117, algorithm='subordinated',
            output=str(output), preset='oracle', overrides=self.overrides, json=True,
        )
        document = json.loads(out)
        self.assertEqual(document['path'], str(output))
        self.assertEqual(document['algorithm'], 'subordinated')
        self.assertEqual(document['window'], {'start_index': 30, 'end_index': 117, 'label': 'fit'})
        self.assertLessEqual(abs(document['params']['tc'] - truth.tc), 4.5)
        self.assertTrue(output.is_file())

    def test_missing_series_file(self):
        with self.assertRaises(CommandError) as ctx:
            self.call('fit', series=str(self.tmp / 'nope.csv'), overrides=self.overrides)
        self.assertEqual(ctx.exception.returncode, 4)


class HelpTest(TestCase):
    """Every documented flag shows up in --help"""

    FLAGS = {
        'simulate': ['--config', '--preset', '--set', '--workers', '--json'],
        'vnv': ['--config', '--preset', '--set', '--workers', '--json', '--queue'],
        'compare': ['--config', '--preset', '--set', '--workers', '--json'],
        'fit': ['--series', '--window-start', '--window-end', '--algorithm', '--output', '--set'],
        'plot_data': ['--output-dir', '--preset', '--set'],
        'report': ['--json'],
    }

    def test_flags_listed(self):
        for name, flags in self.FLAGS.items():
            help_text = load_command_class('vnv', name).create_parser('manage.py', name).format_help()
            for flag in flags:
                with self.subTest(command=name, flag=flag):
                    self.assertIn(flag, help_text)
