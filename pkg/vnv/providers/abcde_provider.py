"""
ABCDE simulation provider
"""
import logging
from dataclasses import replace
from typing import Dict

from vnv.abcde import BatchConfig, BatchResult, simulate_batch
from vnv.providers.base_provider import BaseProvider

logger = logging.getLogger(__name__)


class AbcdeProvider(BaseProvider):
    """r-series from seeded ABCDE runs"""
    name = 'abcde'

    def __init__(self, batch: BatchConfig):
        super().__init__()
        self.batch = batch

    def fetch_batch(self, runs: int, seed: int, workers: int = 1) -> BatchResult:
        cfg = replace(self.batch, runs=runs, seed=seed, workers=workers)
        return simulate_batch(cfg)

    def manifest(self) -> Dict:
        return {'source': self.name, **self.batch.manifest()}
