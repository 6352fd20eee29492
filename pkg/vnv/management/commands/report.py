"""
Management command to render a persisted report table
"""
import json
from pathlib import Path

from vnv.persistence import load_json
from vnv.stats import ReportTable, render_report_table

from ._base import VnvCommand


class Command(VnvCommand):
    help = 'Render report.json (or a run directory containing it) as an aligned text table'
    config_flags = False

    def add_command_arguments(self, parser):
        parser.add_argument(
            'path',
            help='report.json or the run directory holding it'
        )

    def run(self, options):
        path = Path(options['path'])
        if path.is_dir():
            path = path / 'report.json'
        if not path.is_file():
            raise FileNotFoundError(f"no report at {path}")
        try:
            report = ReportTable.from_dict(load_json(path))
        except (json.JSONDecodeError, KeyError, TypeError, ValueError) as e:
            raise OSError(f"{path}: not a report ({e})")

        if self.as_json:
            self.emit(path, report.to_dict())
        else:
            self.stdout.write(render_report_table(report), ending='')
