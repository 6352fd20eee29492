from .experiment_engine import (
    SimulationRecord, collect_records, compare_algorithms, process_simulation,
    run_experiment, simulate_series,
)
from .plot_data import build_plot_data, emit_plot_data

__all__ = [
    'SimulationRecord',
    'build_plot_data',
    'collect_records',
    'compare_algorithms',
    'emit_plot_data',
    'process_simulation',
    'run_experiment',
    'simulate_series',
]
