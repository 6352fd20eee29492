"""
Plot datasets for the intermittency figure

    lorenz_xz.csv     x, z            projection of the Lorenz subsystem
    lorenz_x_ymz.csv  x, y_minus_z    projection onto (x, y - z)
    r_series.csv      time, r_<run>   r for a few seeded runs
    plot_data.json    column documentation and provenance

Only data is written; rendering is left to the caller's plotting tool.
"""
import logging
from pathlib import Path
from typing import Dict, Optional, Tuple, Union

import pandas as pd

from vnv.abcde import (
    AbcdeState, BatchConfig, Trajectory, integrate, jittered_state, run_id_for,
)
from vnv.exceptions import BlowUpError, InvalidInputError
from vnv.persistence import dump_json
from vnv.timeseries import TimeSeries

logger = logging.getLogger(__name__)

FLOAT_FORMAT = '%.17g'


def _trajectory_or_prefix(s0: AbcdeState, batch: BatchConfig) -> Tuple[Trajectory, Optional[int]]:
    """Full trajectory, or the states saved before a blow-up with its step"""
    try:
        traj = integrate(s0, batch.params, batch.dt, batch.steps,
                         bound=batch.blowup_bound, substeps=batch.substeps)
        return traj, None
    except BlowUpError as exc:
        if exc.partial is None:
            raise
        logger.warning(f"Plot trajectory {exc}; keeping {len(exc.partial)} saved states")
        return Trajectory(0.0, batch.dt, exc.partial), exc.step


def emit_plot_data(trajectory: Trajectory, r_runs: Dict[str, TimeSeries], out_dir: Union[str, Path],
                   stride: int = 1, meta: Optional[Dict] = None) -> Dict[str, Path]:
    """Write the three projection/series CSVs and their sidecar; returns name -> path"""
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    states = trajectory.states[::stride]
    x, y, z = states[:, 0], states[:, 1], states[:, 2]

    paths = {
        'lorenz_xz': out_dir / 'lorenz_xz.csv',
        'lorenz_x_ymz': out_dir / 'lorenz_x_ymz.csv',
        'r_series': out_dir / 'r_series.csv',
    }
    pd.DataFrame({'x': x, 'z': z}).to_csv(paths['lorenz_xz'], index=False, float_format=FLOAT_FORMAT)
    pd.DataFrame({'x': x, 'y_minus_z': y - z}).to_csv(
        paths['lorenz_x_ymz'], index=False, float_format=FLOAT_FORMAT,
    )

    # runs may differ in length when one blew up; pandas pads with NaN
    columns = {}
    for run_id, ts in r_runs.items():
        columns[f"r_{run_id}"] = pd.Series(ts.values[::stride], index=ts.times[::stride])
    frame = pd.DataFrame(columns)
    frame.index.name = 'time'
    frame.reset_index().to_csv(paths['r_series'], index=False, float_format=FLOAT_FORMAT)

    sidecar = {
        'files': {
            'lorenz_xz.csv': {'columns': ['x', 'z'], 'description': 'Lorenz subsystem projected on (x, z)'},
            'lorenz_x_ymz.csv': {
                'columns': ['x', 'y_minus_z'],
                'description': 'trajectory projected on (x, y - z), computed pointwise',
            },
            'r_series.csv': {
                'columns': ['time'] + list(columns),
                'description': 'r against time for seeded runs; empty cells after a blow-up',
            },
        },
        'stride': stride,
        'samples': int(states.shape[0]),
        **(meta or {}),
    }
    paths['sidecar'] = dump_json(out_dir / 'plot_data.json', sidecar)
    return paths


def build_plot_data(batch: BatchConfig, runs: int, out_dir: Union[str, Path], stride: int = 1,
                    meta: Optional[Dict] = None) -> Dict[str, Path]:
    """
    Integrate the unjittered reference trajectory and `runs` seeded runs
    (same jitter streams as simulate_batch), then emit

    A run that blows up contributes the r values saved before the failure.
    """
    if runs < 1:
        raise InvalidInputError("plot needs at least one r run")
    if stride < 1:
        raise InvalidInputError("stride must be >= 1")
    trajectory, reference_step = _trajectory_or_prefix(batch.initial_state, batch)
    r_runs, blowups = {}, {}
    for index in range(runs):
        run_id = run_id_for(index)
        s0 = jittered_state(batch.initial_state, batch.seed, index, batch.jitter)
        traj, step = _trajectory_or_prefix(s0, batch)
        r_runs[run_id] = traj.r_series()
        if step is not None:
            blowups[run_id] = step

    meta = dict(meta or {})
    meta.update({
        'batch': batch.manifest(),
        'reference_blowup_step': reference_step,
        'run_blowup_steps': blowups,
    })
    return emit_plot_data(trajectory, r_runs, out_dir, stride=stride, meta=meta)
