"""
CSV series provider
"""
import logging
from pathlib import Path
from typing import List, Union

from vnv.abcde import BatchResult, RunStatus, run_id_for
from vnv.exceptions import InvalidInputError
from vnv.providers.base_provider import BaseProvider
from vnv.timeseries import TimeSeries

logger = logging.getLogger(__name__)


class CsvSeriesProvider(BaseProvider):
    """Series read from `time,<value>` CSV files, one run per file"""
    name = 'csv'

    def __init__(self, paths: List[Union[str, Path]]):
        super().__init__({'paths': [str(p) for p in paths]})
        self.paths = [Path(p) for p in paths]

    def fetch_series(self, path: Union[str, Path]) -> TimeSeries:
        path = Path(path)
        if not path.is_file():
            raise FileNotFoundError(f"series file not found: {path}")
        return TimeSeries.from_csv(path)

    def fetch_batch(self, runs: int, seed: int, workers: int = 1) -> BatchResult:
        if runs > len(self.paths):
            raise InvalidInputError(f"{runs} runs requested but only {len(self.paths)} files given")
        statuses, series = [], {}
        for index, path in enumerate(self.paths[:runs]):
            run_id = run_id_for(index)
            series[run_id] = self.fetch_series(path)
            statuses.append(RunStatus(run_id=run_id, ok=True, detail=str(path)))
        return BatchResult(statuses=statuses, series=series)
