"""
Management command to generate and persist a batch of series
"""
from vnv.tasks import create_run, execute_run

from ._base import VnvCommand


class Command(VnvCommand):
    help = 'Simulate a seeded batch of series into the config\'s run directory'

    def run(self, options):
        cfg = self.load_config(options)
        self.progress(f'Simulating {cfg.runs} {cfg.source} series (config {cfg.fingerprint})',
                      self.style.SUCCESS)
        run = create_run('simulate', cfg)
        batch = execute_run(run)

        for status in batch.statuses:
            if status.ok:
                self.progress(f'  ✓ {status.run_id}')
            else:
                self.progress(f'  ! {status.run_id}: {status.detail}', self.style.WARNING)

        path = cfg.run_dir / 'batch_manifest.json'
        self.emit(path, {
            'path': str(path),
            'run_id': run.run_id,
            'fingerprint': cfg.fingerprint,
            'runs': len(batch.statuses),
            'failed': batch.failed,
            'series': [str(cfg.run_dir / 'series' / f'{s.run_id}.csv') for s in batch.statuses if s.ok],
        })
