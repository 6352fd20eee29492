"""
Time-series container, drawdown segmentation and analysis windows

A critical event is the start (running-peak index) of a drawdown of at least
`threshold`; the analysis window runs from the recovery of the second-to-last
drawdown to the first sample that reaches a fraction of the last peak.
"""
import logging
import math
from dataclasses import dataclass
from pathlib import Path
from typing import List, Optional, Tuple, Union

import numpy as np
import pandas as pd

from vnv.exceptions import (
    DegenerateDataError, InvalidInputError, NotEnoughEventsError,
    NoWindowError, WindowTooShortError,
)

logger = logging.getLogger(__name__)

# Window classes and the fraction of the critical peak that closes them
WINDOW_FRACTIONS = {
    'half': 1 / 2,
    'third': 1 / 3,
    'quarter': 1 / 4,
}

DEFAULT_MIN_WINDOW_LENGTH = 50
DEFAULT_SUBSAMPLE_COUNT = 10
DEFAULT_SUBSAMPLE_MIN_LENGTH = 30

# Relative tolerance when checking a CSV time column for a uniform grid
GRID_TOLERANCE = 1e-9


@dataclass(frozen=True, eq=False)
class TimeSeries:
    """Uniformly sampled scalar series; sample i sits at t0 + i*dt"""
    t0: float
    dt: float
    values: np.ndarray

    def __post_init__(self):
        values = np.asarray(self.values, dtype=float)
        if values.ndim != 1:
            raise InvalidInputError("TimeSeries values must be one-dimensional")
        if values.size < 2:
            raise InvalidInputError("TimeSeries needs at least 2 samples")
        if not self.dt > 0:
            raise InvalidInputError(f"TimeSeries dt must be > 0, got {self.dt}")
        object.__setattr__(self, 't0', float(self.t0))
        object.__setattr__(self, 'dt', float(self.dt))
        object.__setattr__(self, 'values', values)

    def __len__(self) -> int:
        return self.values.size

    @property
    def times(self) -> np.ndarray:
        return self.t0 + self.dt * np.arange(self.values.size)

    def time_at(self, index: int) -> float:
        return self.t0 + index * self.dt

    def slice(self, start: int, end: int) -> Tuple[np.ndarray, np.ndarray]:
        """Times and values for the inclusive index range [start, end]"""
        idx = np.arange(start, end + 1)
        return self.t0 + self.dt * idx, self.values[start:end + 1]

    def scaled(self, factor: float) -> 'TimeSeries':
        return TimeSeries(self.t0, self.dt, self.values * factor)

    def to_frame(self, value_column: str = 'value') -> pd.DataFrame:
        return pd.DataFrame({'time': self.times, value_column: self.values})

    def to_csv(self, path: Union[str, Path], value_column: str = 'value') -> Path:
        path = Path(path)
        path.parent.mkdir(parents=True, exist_ok=True)
        # %.17g round-trips every double
        self.to_frame(value_column).to_csv(path, index=False, float_format='%.17g')
        return path

    @classmethod
    def from_csv(cls, path: Union[str, Path]) -> 'TimeSeries':
        """Read a two-column `time,<value>` CSV back into a series"""
        df = pd.read_csv(path, float_precision='round_trip')
        if df.shape[1] != 2 or df.columns[0] != 'time':
            raise InvalidInputError(
                f"{path}: expected two columns with header 'time,<value>', got {list(df.columns)}"
            )
        times = df['time'].to_numpy(dtype=float)
        values = df.iloc[:, 1].to_numpy(dtype=float)
        if times.size < 2:
            raise InvalidInputError(f"{path}: needs at least 2 samples")

        dt = (times[-1] - times[0]) / (times.size - 1)
        expected = times[0] + dt * np.arange(times.size)
        scale = max(abs(times[0]), abs(times[-1]), dt)
        if not dt > 0 or np.max(np.abs(times - expected)) > GRID_TOLERANCE * scale:
            raise InvalidInputError(f"{path}: time column is not a uniform grid")
        return cls(times[0], dt, values)


@dataclass(frozen=True)
class DrawdownEvent:
    """Peak-to-trough decline; end_index is the first sample above the peak"""
    peak_index: int
    peak_value: float
    trough_index: int
    trough_value: float
    end_index: Optional[int]
    magnitude: float

    @property
    def recovered(self) -> bool:
        return self.end_index is not None

    def to_dict(self) -> dict:
        return {
            'peak_index': self.peak_index,
            'peak_value': self.peak_value,
            'trough_index': self.trough_index,
            'trough_value': self.trough_value,
            'end_index': self.end_index,
            'magnitude': self.magnitude,
        }

    @classmethod
    def from_dict(cls, data: dict) -> 'DrawdownEvent':
        return cls(**data)


@dataclass(frozen=True)
class WindowSpec:
    """Inclusive sample range [start_index, end_index] of a parent series"""
    start_index: int
    end_index: int
    label: str

    def __post_init__(self):
        if not self.start_index < self.end_index:
            raise InvalidInputError(
                f"window start {self.start_index} must precede end {self.end_index}"
            )
        if self.start_index < 0:
            raise InvalidInputError("window start must be non-negative")

    @property
    def size(self) -> int:
        """Number of samples in the window"""
        return self.end_index - self.start_index + 1

    @property
    def span(self) -> int:
        """Number of sample intervals covered"""
        return self.end_index - self.start_index

    def within(self, ts: TimeSeries) -> bool:
        return 0 <= self.start_index and self.end_index < len(ts)

    def to_dict(self) -> dict:
        return {'start_index': self.start_index, 'end_index': self.end_index, 'label': self.label}

    @classmethod
    def from_dict(cls, data: dict) -> 'WindowSpec':
        return cls(int(data['start_index']), int(data['end_index']), str(data['label']))


def fraction_label(fraction: float) -> str:
    for label, value in WINDOW_FRACTIONS.items():
        if math.isclose(fraction, value, rel_tol=1e-9):
            return label
    raise InvalidInputError(f"window fraction must be one of 1/2, 1/3, 1/4, got {fraction}")


def segment_drawdowns(ts: TimeSeries, threshold: float) -> List[DrawdownEvent]:
    """
    Split a series into disjoint drawdowns of at least `threshold`

    Scans left to right with a running peak. A drawdown opens at the running
    peak once a sample falls to <= (1 - threshold) * peak, its trough is the
    minimum before recovery, and it closes at the first sample strictly above
    the opening peak. The recovery sample seeds the next running peak.
    """
    if len(ts) < 2:
        raise InvalidInputError("segmentation needs at least 2 samples")
    if not 0 < threshold < 1:
        raise InvalidInputError(f"threshold must lie in (0, 1), got {threshold}")

    values = ts.values
    n = values.size
    events: List[DrawdownEvent] = []
    start = 0

    while start < n:
        segment = values[start:]
        running_peak = np.maximum.accumulate(segment)
        breaches = np.flatnonzero(segment <= (1.0 - threshold) * running_peak)
        scanned = running_peak[:breaches[0] + 1] if breaches.size else running_peak
        if np.any(scanned <= 0):
            bad = start + int(np.argmax(scanned <= 0))
            raise DegenerateDataError(f"nonpositive running peak at index {bad}")
        if breaches.size == 0:
            break

        breach = start + int(breaches[0])
        # argmax picks the first occurrence, i.e. the index where the peak was set
        peak_index = start + int(np.argmax(segment[:breaches[0] + 1]))
        peak_value = float(values[peak_index])

        recoveries = np.flatnonzero(values[breach + 1:] > peak_value)
        end_index = breach + 1 + int(recoveries[0]) if recoveries.size else None
        stop = end_index if end_index is not None else n
        trough_index = breach + int(np.argmin(values[breach:stop]))
        trough_value = float(values[trough_index])

        events.append(DrawdownEvent(
            peak_index=peak_index,
            peak_value=peak_value,
            trough_index=trough_index,
            trough_value=trough_value,
            end_index=end_index,
            magnitude=(peak_value - trough_value) / peak_value,
        ))
        if end_index is None:
            break
        start = end_index

    return events


def critical_event(ts: TimeSeries, threshold: float) -> Tuple[float, float]:
    """Time and value of the peak that opens the last drawdown"""
    events = segment_drawdowns(ts, threshold)
    if len(events) < 2:
        raise NotEnoughEventsError(f"need at least 2 drawdowns, found {len(events)}")
    last = events[-1]
    return ts.time_at(last.peak_index), last.peak_value


def analysis_window(
    ts: TimeSeries,
    events: List[DrawdownEvent],
    fraction: float,
    min_length: int = DEFAULT_MIN_WINDOW_LENGTH,
) -> WindowSpec:
    """
    Window from the end of the second-to-last drawdown to the first sample
    reaching `fraction` of the last peak

    The crossing must happen strictly before the critical event and the
    window must hold at least `min_length` samples.
    """
    label = fraction_label(fraction)
    if len(events) < 2:
        raise NotEnoughEventsError(f"need at least 2 drawdowns, found {len(events)}")

    previous, last = events[-2], events[-1]
    if previous.end_index is None:
        raise InvalidInputError("second-to-last drawdown never recovered")
    if last.peak_value <= 0:
        raise DegenerateDataError("critical peak must be positive")

    start = previous.end_index
    level = fraction * last.peak_value
    crossings = np.flatnonzero(ts.values[start:last.peak_index] >= level)
    if crossings.size == 0:
        raise NoWindowError(f"{label} level {level:.6g} not reached before the critical event")

    end = start + int(crossings[0])
    size = end - start + 1
    if end <= start or size < min_length:
        raise WindowTooShortError(f"{label} window has {size} samples, minimum is {min_length}")

    return WindowSpec(start_index=start, end_index=end, label=label)


def subsample_windows(w: WindowSpec, count: int, min_len: int) -> List[WindowSpec]:
    """
    `count` windows sharing w.end_index, starts evenly spaced from
    w.start_index to w.end_index - min_len
    """
    if count < 1:
        raise InvalidInputError(f"subsample count must be >= 1, got {count}")
    if min_len < 1 or min_len > w.span:
        raise WindowTooShortError(f"min_len {min_len} does not fit window span {w.span}")
    if count == 1:
        return [w]

    last_start = w.end_index - min_len
    # distinct integer starts need at least one sample of room per extra window
    if last_start - w.start_index < count - 1:
        raise WindowTooShortError(
            f"cannot place {count} distinct starts in [{w.start_index}, {last_start}]"
        )

    starts = np.floor(np.linspace(w.start_index, last_start, count) + 0.5).astype(int)
    return [
        WindowSpec(start_index=int(s), end_index=w.end_index, label=f"{w.label}#{k}")
        for k, s in enumerate(starts)
    ]
