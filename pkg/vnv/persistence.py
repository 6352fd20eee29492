"""
Content-addressed run directory

<output_dir>/<fingerprint>/
    config.json            validated config document
    batch_manifest.json    source settings and per-run status
    series/run-NNNN.csv    time,r
    records/run-NNNN.json  one SimulationRecord per run
    report.csv / report.json / report.txt
    compare.json
    plots/

JSON is written with sorted keys and no timestamps so that identical
configs give byte-identical artifacts.
"""
import json
import logging
import math
from pathlib import Path
from typing import Any, Dict, List, Optional, Union

from vnv.timeseries import TimeSeries

logger = logging.getLogger(__name__)


def json_safe(value: Any) -> Any:
    """Non-finite floats become null; JSON has no spelling for them"""
    if isinstance(value, float) and not math.isfinite(value):
        return None
    if isinstance(value, dict):
        return {str(k): json_safe(v) for k, v in value.items()}
    if isinstance(value, (list, tuple)):
        return [json_safe(v) for v in value]
    return value


def dump_json(path: Union[str, Path], data: Any) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(json.dumps(json_safe(data), sort_keys=True, indent=2, allow_nan=False) + '\n')
    return path


def load_json(path: Union[str, Path]) -> Any:
    return json.loads(Path(path).read_text())


class ArtifactStore:
    """Reads and writes the artifacts of one fingerprinted run"""

    def __init__(self, run_dir: Union[str, Path]):
        self.run_dir = Path(run_dir)

    @property
    def fingerprint(self) -> str:
        return self.run_dir.name

    def path(self, *parts: str) -> Path:
        return self.run_dir.joinpath(*parts)

    def series_path(self, run_id: str) -> Path:
        return self.path('series', f"{run_id}.csv")

    def record_path(self, run_id: str) -> Path:
        return self.path('records', f"{run_id}.json")

    def write_config(self, document: Dict) -> Path:
        return dump_json(self.path('config.json'), document)

    def read_config(self) -> Optional[Dict]:
        path = self.path('config.json')
        return load_json(path) if path.is_file() else None

    def write_manifest(self, manifest: Dict) -> Path:
        return dump_json(self.path('batch_manifest.json'), manifest)

    def write_series(self, run_id: str, ts: TimeSeries) -> Path:
        return ts.to_csv(self.series_path(run_id), value_column='r')

    def read_series(self, run_id: str) -> Optional[TimeSeries]:
        path = self.series_path(run_id)
        return TimeSeries.from_csv(path) if path.is_file() else None

    def write_record(self, run_id: str, record: Dict) -> Path:
        return dump_json(self.record_path(run_id), record)

    def read_record(self, run_id: str) -> Optional[Dict]:
        path = self.record_path(run_id)
        if not path.is_file():
            return None
        try:
            return load_json(path)
        except json.JSONDecodeError:
            logger.warning(f"Ignoring unreadable record {path}")
            return None

    def list_records(self) -> List[str]:
        folder = self.path('records')
        return sorted(p.stem for p in folder.glob('run-*.json')) if folder.is_dir() else []

    def write_report(self, report_dict: Dict, frame, text: str) -> Path:
        dump_json(self.path('report.json'), report_dict)
        frame.to_csv(self.path('report.csv'), index=False)
        self.path('report.txt').write_text(text)
        return self.path('report.csv')

    def write_compare(self, summary: Dict) -> Path:
        return dump_json(self.path('compare.json'), summary)
