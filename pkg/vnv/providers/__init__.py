"""
Series sources
"""
from vnv.providers.abcde_provider import AbcdeProvider
from vnv.providers.base_provider import BaseProvider
from vnv.providers.csv_provider import CsvSeriesProvider
from vnv.providers.synthetic_provider import SyntheticLpplProvider

__all__ = ['AbcdeProvider', 'BaseProvider', 'CsvSeriesProvider', 'SyntheticLpplProvider']
