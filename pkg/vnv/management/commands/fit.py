"""
Management command to fit one estimator to one window of a CSV series
"""
from pathlib import Path

from vnv.estimators import registry
from vnv.exceptions import InvalidInputError
from vnv.persistence import dump_json
from vnv.providers import CsvSeriesProvider
from vnv.timeseries import WindowSpec

from ._base import VnvCommand


class Command(VnvCommand):
    help = 'Fit a critical-time estimator to a window of a time,value CSV series'

    def add_command_arguments(self, parser):
        parser.add_argument(
            '--series',
            required=True,
            help='CSV file with time and value columns'
        )
        parser.add_argument(
            '--window-start',
            type=int,
            default=0,
            help='First sample index of the fit window (inclusive, default 0)'
        )
        parser.add_argument(
            '--window-end',
            type=int,
            help='Last sample index of the fit window (inclusive, default last sample)'
        )
        parser.add_argument(
            '--algorithm',
            choices=registry.list_estimators(),
            help='Estimator to use (default: first configured algorithm)'
        )
        parser.add_argument(
            '--output',
            help='Where to write the FitResult JSON (default <output_dir>/fits/)'
        )

    def run(self, options):
        cfg = self.load_config(options)
        series_path = Path(options['series'])
        ts = CsvSeriesProvider([series_path]).fetch_series(series_path)
        end = len(ts) - 1 if options['window_end'] is None else options['window_end']
        window = WindowSpec(options['window_start'], end, 'fit')
        if not window.within(ts):
            raise InvalidInputError(f"window [{window.start_index}, {window.end_index}] outside "
                                    f"series of {len(ts)} samples")

        algorithm = options['algorithm'] or cfg.algorithms[0]
        estimator = registry.get(algorithm, cfg.search_config(algorithm))
        self.progress(f'Fitting {algorithm} to {series_path} [{window.start_index}, {window.end_index}]')
        result = estimator.fit(ts, window)
        self.progress(f'  tc_hat={result.tc:.6g} sse={result.sse:.6g} converged={result.converged}',
                      self.style.SUCCESS if result.converged else self.style.WARNING)

        output = options['output'] or (
            cfg.output_dir / 'fits' / f'{series_path.stem}-{algorithm}-{window.start_index}-{window.end_index}.json'
        )
        document = result.to_dict()
        path = dump_json(output, document)
        self.emit(path, {'path': str(path), **document})
