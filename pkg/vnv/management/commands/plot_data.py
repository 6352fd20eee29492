"""
Management command to write the intermittency plot datasets
"""
from pathlib import Path

from vnv.engine import build_plot_data

from ._base import VnvCommand


class Command(VnvCommand):
    help = 'Write Lorenz projections and seeded r series as CSV plot data'

    def add_command_arguments(self, parser):
        parser.add_argument(
            '--output-dir',
            help='Directory for the CSV files (default <run dir>/plots)'
        )

    def run(self, options):
        cfg = self.load_config(options)
        out_dir = Path(options['output_dir']) if options['output_dir'] else cfg.run_dir / 'plots'
        paths = build_plot_data(
            cfg.batch_config(), cfg.plot['runs'], out_dir, stride=cfg.plot['stride'],
            meta={'fingerprint': cfg.fingerprint},
        )
        for name, path in paths.items():
            self.progress(f'  ✓ {name}: {path}')
        self.emit(paths['sidecar'], {name: str(path) for name, path in paths.items()})
