"""
Management command to compare the two estimators on identical windows
"""
from vnv.tasks import create_run, execute_run

from ._base import VnvCommand


class Command(VnvCommand):
    help = 'Compare baseline and challenger estimators by mean absolute tc error'

    def run(self, options):
        cfg = self.load_config(options)
        run = create_run('compare', cfg)
        summary = execute_run(run)

        for fraction, row in summary['classes'].items():
            self.progress(f"  {fraction:8s} baseline {row['baseline_mae']:.6g}  "
                          f"challenger {row['challenger_mae']:.6g}  ratio {row['ratio']:.4g}")
        self.progress(f"Aggregate ratio {summary['aggregate']['ratio']:.4g} over {summary['n']} runs",
                      self.style.SUCCESS)

        path = cfg.run_dir / 'compare.json'
        self.emit(path, {'path': str(path), 'run_id': run.run_id, **summary})
