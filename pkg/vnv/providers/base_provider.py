"""
Base provider interface
All series sources must implement this interface
"""
from abc import ABC, abstractmethod
from typing import Dict, Optional

from vnv.abcde import BatchResult


class BaseProvider(ABC):
    """Base class for all series sources"""
    name = ''

    def __init__(self, config: Optional[Dict] = None):
        self.config = config or {}

    @abstractmethod
    def fetch_batch(self, runs: int, seed: int, workers: int = 1) -> BatchResult:
        """
        Produce `runs` series in run-id order

        Returns:
            BatchResult with one status per run and a series per successful run
        """
        pass

    def manifest(self) -> Dict:
        """Settings needed to reproduce the batch"""
        return {'source': self.name, **self.config}
