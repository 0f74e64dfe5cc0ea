"""Continuous wavelet transform with a Gabor base wavelet.

The transform projects a uniform-rate signal onto scaled, shifted copies of
the analytic Gabor wavelet over a log-spaced frequency grid. Two independent
routes are provided: `cwt_fft` (production path, FFT convolution per scale)
and `cwt_direct` (direct time-domain summation, the correctness oracle for
small inputs). Both use the same zero-extension convention, so they agree to
rounding error away from kernel truncation effects.
"""

from __future__ import annotations

import math
import struct
from dataclasses import dataclass, field

import numpy as np

from .errors import ArgumentError, FormatError
from .timeseries import TimeSeries

# Kernel support: lags where the Gaussian envelope falls below 1e-12 are cut.
_ENVELOPE_CUTOFF = math.sqrt(-2.0 * math.log(1e-12))

# Edge-contamination half-width: four envelope e-foldings per unit scale.
_COI_FOLDS = 4.0

DEFAULT_OMEGA0 = 6.0
DEFAULT_VOICES = 12


def gabor(t, omega0: float):
    """Gabor wavelet exp(j*omega0*t) * exp(-t^2/2), vectorized over t.

    The modulus depends only on the Gaussian envelope: |gabor(t)| =
    exp(-t^2/2); negating t conjugates the value.
    """
    t = np.asarray(t, dtype=float)
    out = np.exp(1j * omega0 * t) * np.exp(-0.5 * t * t)
    return out if out.ndim else complex(out)


@dataclass(frozen=True)
class ScaleGrid:
    """Log-spaced analysis frequencies, highest first, with their scales.

    The endpoints are pinned exactly to (f_max, f_min); interior rows keep a
    constant adjacent-frequency ratio as close to 2^(1/voices_per_octave) as
    the pinning allows. Scale and frequency are tied by a = omega0/(2*pi*f).
    """

    f_min: float
    f_max: float
    voices_per_octave: int
    omega0: float
    frequencies: np.ndarray = field(repr=False)

    def __post_init__(self):
        freqs = np.asarray(self.frequencies, dtype=float)
        freqs.setflags(write=False)
        object.__setattr__(self, "frequencies", freqs)

    @property
    def n_rows(self) -> int:
        return self.frequencies.size

    @property
    def scales(self) -> np.ndarray:
        """Per-row wavelet scale in seconds, matching row order."""
        return self.omega0 / (2.0 * np.pi * self.frequencies)


def build_scale_grid(
    f_min: float,
    f_max: float,
    voices_per_octave: int = DEFAULT_VOICES,
    omega0: float = DEFAULT_OMEGA0,
) -> ScaleGrid:
    """Construct the analysis grid covering [f_min, f_max] inclusive.

    Row count is the nearest integer to voices_per_octave octave subdivisions
    of the span, so a one-octave span at one voice yields exactly two rows.
    """
    if not (0 < f_min < f_max):
        raise ArgumentError(f"require 0 < f_min < f_max, got ({f_min}, {f_max})")
    if voices_per_octave < 1:
        raise ArgumentError(f"voices_per_octave must be >= 1, got {voices_per_octave}")
    if not omega0 > 0:
        raise ArgumentError(f"omega0 must be > 0, got {omega0}")
    octaves = math.log2(f_max / f_min)
    n_rows = max(2, round(voices_per_octave * octaves) + 1)
    freqs = np.geomspace(f_max, f_min, n_rows)
    freqs[0] = f_max
    freqs[-1] = f_min
    return ScaleGrid(f_min, f_max, voices_per_octave, omega0, freqs)


@dataclass(frozen=True)
class ScalogramGrid:
    """CWT coefficients and magnitudes on a (scale row x time column) lattice.

    Row 0 is the highest frequency; column c sits at time_origin + c /
    sample_rate. `cone_of_influence[r]` is the per-row count of edge columns
    contaminated by the zero extension. After band filtering, `band` is set
    and `magnitudes` no longer equals |coefficients|.
    """

    coefficients: np.ndarray = field(repr=False)
    magnitudes: np.ndarray = field(repr=False)
    grid: ScaleGrid
    time_origin: float
    sample_rate: float
    cone_of_influence: np.ndarray = field(repr=False)
    band: object | None = None
    source_id: str = ""

    def __post_init__(self):
        for name in ("coefficients", "magnitudes", "cone_of_influence"):
            arr = getattr(self, name)
            arr.setflags(write=False)
        if self.magnitudes.shape != self.coefficients.shape:
            raise ArgumentError("magnitudes and coefficients must share a shape")

    @property
    def n_rows(self) -> int:
        return self.magnitudes.shape[0]

    @property
    def n_cols(self) -> int:
        return self.magnitudes.shape[1]

    @property
    def duration(self) -> float:
        return self.magnitudes.shape[1] / self.sample_rate

    def col_time(self, col) -> float:
        """Timestamp of a sample column (vectorized)."""
        return self.time_origin + np.asarray(col) / self.sample_rate


def _validate_transform_input(ts: TimeSeries, grid: ScaleGrid):
    if ts.samples.size == 0:
        raise ArgumentError("cannot transform an empty series")
    if grid.n_rows < 1:
        raise ArgumentError("scale grid has no rows")


def _kernel_at_lags(lags: np.ndarray, scale: float, omega0: float, dt: float) -> np.ndarray:
    """Discretized Eq-2 kernel: conj(wavelet) at (lag*dt/scale), times dt/sqrt(a).

    On the zero-extended grid the trapezoid weights all collapse to 1, so the
    integral is exactly this kernel summed against the samples.
    """
    u = lags * (dt / scale)
    return np.conj(gabor(u, omega0)) * (dt / math.sqrt(scale))


def cone_of_influence(grid: ScaleGrid, sample_rate: float) -> np.ndarray:
    """Per-row edge half-width in samples: ceil(4 * scale * rate)."""
    return np.ceil(_COI_FOLDS * grid.scales * sample_rate).astype(int)


def cwt_fft(ts: TimeSeries, grid: ScaleGrid) -> ScalogramGrid:
    """Transform via per-scale FFT convolution with zero padding.

    The kernel is truncated where its envelope drops below 1e-12; FFT length
    is the next power of two covering signal plus kernel, so the circular
    convolution equals the linear one exactly.
    """
    _validate_transform_input(ts, grid)
    f = np.asarray(ts.samples, dtype=float)
    n = f.size
    dt = 1.0 / ts.sample_rate
    coeffs = np.empty((grid.n_rows, n), dtype=complex)
    signal_ffts: dict[int, np.ndarray] = {}

    for r, scale in enumerate(grid.scales):
        half = int(math.ceil(_ENVELOPE_CUTOFF * scale * ts.sample_rate))
        kernel = _kernel_at_lags(np.arange(-half, half + 1), scale, grid.omega0, dt)
        fft_len = 1 << (n + kernel.size - 1).bit_length()
        if fft_len not in signal_ffts:
            signal_ffts[fft_len] = np.fft.fft(f, fft_len)
        conv = np.fft.ifft(signal_ffts[fft_len] * np.fft.fft(kernel[::-1], fft_len))
        coeffs[r] = conv[half : half + n]

    return ScalogramGrid(
        coefficients=coeffs,
        magnitudes=np.abs(coeffs),
        grid=grid,
        time_origin=ts.start_time,
        sample_rate=ts.sample_rate,
        cone_of_influence=cone_of_influence(grid, ts.sample_rate),
        source_id=ts.channel_name,
    )


def cwt_direct(ts: TimeSeries, grid: ScaleGrid) -> ScalogramGrid:
    """Transform by direct summation over every sample lag (no truncation).

    Serves as the oracle for `cwt_fft` on small inputs (<= 4096 samples): the
    kernel is evaluated at all 2n-1 lags and summed in the time domain.
    """
    _validate_transform_input(ts, grid)
    f = np.asarray(ts.samples, dtype=float)
    n = f.size
    if n > 4096:
        raise ArgumentError(f"direct transform limited to 4096 samples, got {n}")
    dt = 1.0 / ts.sample_rate
    lags = np.arange(-(n - 1), n)
    coeffs = np.empty((grid.n_rows, n), dtype=complex)
    for r, scale in enumerate(grid.scales):
        kernel = _kernel_at_lags(lags, scale, grid.omega0, dt)
        coeffs[r] = np.convolve(f, kernel[::-1])[n - 1 : 2 * n - 1]

    return ScalogramGrid(
        coefficients=coeffs,
        magnitudes=np.abs(coeffs),
        grid=grid,
        time_origin=ts.start_time,
        sample_rate=ts.sample_rate,
        cone_of_influence=cone_of_influence(grid, ts.sample_rate),
        source_id=ts.channel_name,
    )


# --- binary dump ------------------------------------------------------------
#
# Layout: 6 little-endian float64 header values (rows, cols, f_min, f_max,
# omega0, sample_rate) followed by the matrix row-major as little-endian
# float64. Complex matrices store (re, im) interleaved, so the payload is
# rows*cols values for magnitudes and rows*cols*2 for coefficients; the
# loader tells them apart by size.

_HEADER = struct.Struct("<6d")


def save_matrix(sg: ScalogramGrid, path, kind: str = "magnitudes"):
    if kind == "magnitudes":
        payload = np.ascontiguousarray(sg.magnitudes, dtype="<f8")
    elif kind == "coefficients":
        flat = np.empty(sg.coefficients.shape + (2,), dtype="<f8")
        flat[..., 0] = sg.coefficients.real
        flat[..., 1] = sg.coefficients.imag
        payload = flat
    else:
        raise ArgumentError(f"unknown dump kind {kind!r}")
    header = _HEADER.pack(
        float(sg.n_rows),
        float(sg.n_cols),
        sg.grid.f_min,
        sg.grid.f_max,
        sg.grid.omega0,
        sg.sample_rate,
    )
    with open(path, "wb") as fh:
        fh.write(header)
        fh.write(payload.tobytes())


def load_matrix(path, time_origin: float = 0.0, source_id: str = "") -> ScalogramGrid:
    """Rebuild a grid from a dump; the time origin travels in the sidecar."""
    with open(path, "rb") as fh:
        raw = fh.read()
    if len(raw) < _HEADER.size:
        raise FormatError(f"{path}: truncated header")
    rows_f, cols_f, f_min, f_max, omega0, rate = _HEADER.unpack_from(raw)
    rows, cols = int(rows_f), int(cols_f)
    body = np.frombuffer(raw, dtype="<f8", offset=_HEADER.size)
    voices = max(1, round((rows - 1) / math.log2(f_max / f_min)))
    freqs = np.geomspace(f_max, f_min, rows)
    freqs[0], freqs[-1] = f_max, f_min
    grid = ScaleGrid(f_min, f_max, voices, omega0, freqs)
    if body.size == rows * cols:
        mags = body.reshape(rows, cols).copy()
        coeffs = mags.astype(complex)
    elif body.size == rows * cols * 2:
        pairs = body.reshape(rows, cols, 2)
        coeffs = pairs[..., 0] + 1j * pairs[..., 1]
        mags = np.abs(coeffs)
    else:
        raise FormatError(f"{path}: payload size {body.size} does not match {rows}x{cols}")
    return ScalogramGrid(
        coefficients=coeffs,
        magnitudes=mags,
        grid=grid,
        time_origin=time_origin,
        sample_rate=rate,
        cone_of_influence=cone_of_influence(grid, rate),
        source_id=source_id,
    )
