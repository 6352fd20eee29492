"""
Management command to run the full validation experiment
"""
from vnv.stats import render_report_table
from vnv.tasks import create_run, execute_run, run_experiment_task

from ._base import VnvCommand


class Command(VnvCommand):
    help = 'Run the critical-time validation experiment and write its report'

    def add_command_arguments(self, parser):
        parser.add_argument(
            '--queue',
            action='store_true',
            help='Queue the run on the Celery worker and print its run id'
        )

    def run(self, options):
        cfg = self.load_config(options)
        run = create_run('vnv', cfg)

        if options['queue']:
            run_experiment_task.delay(run.run_id)
            self.progress(f'Queued {run.run_id}', self.style.SUCCESS)
            self.emit(run.run_id, {'run_id': run.run_id, 'fingerprint': cfg.fingerprint, 'status': 'PENDING'})
            return

        self.progress(f'Experiment {cfg.fingerprint}: {cfg.runs} runs, {list(cfg.algorithms)}',
                      self.style.SUCCESS)
        report = execute_run(run)
        self.progress(render_report_table(report))

        path = cfg.run_dir / 'report.csv'
        self.emit(path, {'path': str(path), 'run_id': run.run_id, **report.to_dict()})
