"""Uniformly sampled sensor channels: CSV ingestion, resampling, slicing.

Recorded channels arrive as (timestamp, value) CSV rows. Acquisition tooling
does not guarantee a uniform grid, so ingestion interpolates onto one; all
downstream stages assume `TimeSeries` carries an exact uniform rate.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass, field

import numpy as np

from .errors import ArgumentError, DataError, FormatError

# Relative deviation from the ideal grid below which timestamps count as uniform.
_UNIFORM_REL_TOL = 1e-6

# Slack when snapping a time to a sample index, in fractions of one sample.
_INDEX_EPS = 1e-9


@dataclass(frozen=True)
class TimeSeries:
    """A single scalar channel on a uniform time grid.

    Sample i lives at ``start_time + i / sample_rate``. Values are finite
    floats; the array is frozen so instances can be shared freely.
    """

    start_time: float
    sample_rate: float
    samples: np.ndarray
    channel_name: str = ""

    def __post_init__(self):
        if not self.sample_rate > 0:
            raise ArgumentError(f"sample_rate must be > 0, got {self.sample_rate}")
        samples = np.asarray(self.samples, dtype=float)
        if samples.ndim != 1:
            raise ArgumentError(f"samples must be 1-D, got shape {samples.shape}")
        if samples.size and not np.isfinite(samples).all():
            bad = int(np.flatnonzero(~np.isfinite(samples))[0])
            raise DataError(f"non-finite sample at index {bad}")
        samples.setflags(write=False)
        object.__setattr__(self, "samples", samples)

    def __len__(self) -> int:
        return self.samples.size

    @property
    def duration(self) -> float:
        """Covered time span in seconds (n / rate)."""
        return self.samples.size / self.sample_rate

    @property
    def end_time(self) -> float:
        return self.start_time + self.samples.size / self.sample_rate

    def timestamps(self) -> np.ndarray:
        return self.start_time + np.arange(self.samples.size) / self.sample_rate


def _require_nonempty(ts: TimeSeries):
    if ts.samples.size == 0:
        raise ArgumentError("operation requires a non-empty series")


def load_csv(
    path,
    time_column: str = "time",
    value_column: str = "value",
    delimiter: str = ",",
    channel_name: str | None = None,
) -> TimeSeries:
    """Read one channel from a delimited text file.

    The file must carry a header row. Timestamps must be strictly increasing;
    if they are not uniform, the values are linearly interpolated onto a
    uniform grid whose rate is inferred from the finest observed spacing.

    Raises:
        FormatError: missing header or named column.
        DataError: non-monotone time, non-finite value, or fewer than 2 rows.
    """
    times: list[float] = []
    values: list[float] = []
    with open(path, newline="", encoding="utf-8") as fh:
        reader = csv.DictReader(fh, delimiter=delimiter)
        if reader.fieldnames is None:
            raise FormatError(f"{path}: empty file, header row required")
        for col in (time_column, value_column):
            if col not in reader.fieldnames:
                raise FormatError(f"{path}: missing column {col!r}")
        for i, row in enumerate(reader):
            try:
                t = float(row[time_column])
                v = float(row[value_column])
            except (TypeError, ValueError):
                raise DataError(f"{path}: unparsable number at data row {i}") from None
            if not math.isfinite(t) or not math.isfinite(v):
                raise DataError(f"{path}: non-finite value at data row {i}")
            if times and t <= times[-1]:
                raise DataError(f"{path}: time not strictly increasing at data row {i}")
            times.append(t)
            values.append(v)
    if len(times) < 2:
        raise DataError(f"{path}: need at least 2 rows to infer a sample rate")

    t_arr = np.asarray(times)
    v_arr = np.asarray(values)
    name = channel_name if channel_name is not None else value_column
    n = t_arr.size
    span = t_arr[-1] - t_arr[0]
    mean_dt = span / (n - 1)
    ideal = t_arr[0] + np.arange(n) * mean_dt
    if np.abs(t_arr - ideal).max() <= _UNIFORM_REL_TOL * mean_dt:
        rate = (n - 1) / span
        return TimeSeries(float(t_arr[0]), float(rate), v_arr, name)

    # Non-uniform: interpolate onto the finest-spacing grid so no region is
    # coarsened below its measured resolution.
    rate = 1.0 / float(np.diff(t_arr).min())
    n_out = int(math.floor(span * rate + 0.5)) + 1
    grid = t_arr[0] + np.arange(n_out) / rate
    resampled = np.interp(grid, t_arr, v_arr)
    return TimeSeries(float(t_arr[0]), float(rate), resampled, name)


def write_csv(
    ts: TimeSeries,
    path,
    time_column: str = "time",
    value_column: str | None = None,
    delimiter: str = ",",
):
    """Write a series as delimited text with full round-trip precision."""
    _require_nonempty(ts)
    value_column = value_column or ts.channel_name or "value"
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh, delimiter=delimiter)
        writer.writerow([time_column, value_column])
        for i, v in enumerate(ts.samples):
            writer.writerow([repr(ts.start_time + i / ts.sample_rate), repr(float(v))])


def resample(ts: TimeSeries, target_rate: float) -> TimeSeries:
    """Return the series on a new uniform rate.

    Upsampling interpolates linearly; downsampling holds the nearest
    preceding source sample. Start time is preserved and the output never
    extends past the last source sample.
    """
    if not target_rate > 0:
        raise ArgumentError(f"target_rate must be > 0, got {target_rate}")
    _require_nonempty(ts)
    if target_rate == ts.sample_rate:
        return TimeSeries(ts.start_time, ts.sample_rate, ts.samples.copy(), ts.channel_name)

    n = ts.samples.size
    last_rel = (n - 1) / ts.sample_rate
    n_out = int(math.floor(last_rel * target_rate + _INDEX_EPS)) + 1
    rel_out = np.arange(n_out) / target_rate
    if target_rate > ts.sample_rate:
        rel_in = np.arange(n) / ts.sample_rate
        out = np.interp(rel_out, rel_in, ts.samples)
    else:
        idx = np.floor(rel_out * ts.sample_rate + _INDEX_EPS).astype(int)
        out = ts.samples[np.clip(idx, 0, n - 1)]
    return TimeSeries(ts.start_time, float(target_rate), out, ts.channel_name)


def slice_series(ts: TimeSeries, t0: float, t1: float) -> TimeSeries:
    """Cut the window [t0, t1) on the existing grid.

    The result starts at the first grid point >= t0. Bounds must satisfy
    start_time <= t0 < t1 <= end_time.
    """
    _require_nonempty(ts)
    if not t0 < t1:
        raise ArgumentError(f"require t0 < t1, got [{t0}, {t1})")
    n = ts.samples.size
    k0 = (t0 - ts.start_time) * ts.sample_rate
    k1 = (t1 - ts.start_time) * ts.sample_rate
    if k0 < -_INDEX_EPS or k1 > n + _INDEX_EPS:
        raise ArgumentError(
            f"window [{t0}, {t1}) outside series range [{ts.start_time}, {ts.end_time}]"
        )
    i0 = max(0, math.ceil(k0 - _INDEX_EPS))
    i1 = min(n, math.ceil(k1 - _INDEX_EPS))
    if i1 <= i0:
        raise ArgumentError(f"window [{t0}, {t1}) contains no grid point")
    return TimeSeries(
        ts.start_time + i0 / ts.sample_rate,
        ts.sample_rate,
        ts.samples[i0:i1].copy(),
        ts.channel_name,
    )
