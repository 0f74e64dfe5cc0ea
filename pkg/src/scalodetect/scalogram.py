"""Scalogram rendering, pixel/time mapping, and segmentation.

The pixel convention is fixed: 10 ms of measurement maps to 1.024 px, i.e.
102.4 px per second, and image width is the half-up-rounded product of
duration and pixel rate. Frequencies run top-down from f_max to f_min on a
log scale. Rendering is fully deterministic: the same grid and colormap
produce byte-identical PNG files.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field, replace

import numpy as np
from PIL import Image

from .errors import ArgumentError
from .wavelet import ScalogramGrid

DEFAULT_PX_PER_SECOND = 102.4
DEFAULT_IMAGE_HEIGHT = 512

# Edge slack for range checks, in pixels.
_PX_EPS = 1e-6


@dataclass(frozen=True)
class PixelMapping:
    """Bidirectional pixel <-> physical mapping of one scalogram image."""

    time_origin: float
    image_width: int
    image_height: int
    f_min: float
    f_max: float
    px_per_second: float = DEFAULT_PX_PER_SECOND
    source_id: str = ""

    def __post_init__(self):
        if not self.px_per_second > 0:
            raise ArgumentError(f"px_per_second must be > 0, got {self.px_per_second}")
        if self.image_width < 1 or self.image_height < 1:
            raise ArgumentError("image dimensions must be positive")
        if not (0 < self.f_min < self.f_max):
            raise ArgumentError(f"require 0 < f_min < f_max, got ({self.f_min}, {self.f_max})")

    @property
    def row_band_edges(self) -> np.ndarray:
        """Frequency at every pixel-row boundary, length image_height + 1.

        Row boundary 0 (top) is f_max, boundary image_height (bottom) is
        f_min, log-interpolated in between.
        """
        p = np.arange(self.image_height + 1) / self.image_height
        return self.f_max * (self.f_min / self.f_max) ** p


def mapping_for_grid(
    sg: ScalogramGrid,
    px_per_second: float = DEFAULT_PX_PER_SECOND,
    image_height: int = DEFAULT_IMAGE_HEIGHT,
) -> PixelMapping:
    """Derive the image mapping for a grid; width rounds half-up."""
    width = int(math.floor(sg.duration * px_per_second + 0.5))
    return PixelMapping(
        time_origin=sg.time_origin,
        image_width=max(1, width),
        image_height=image_height,
        f_min=sg.grid.f_min,
        f_max=sg.grid.f_max,
        px_per_second=px_per_second,
        source_id=sg.source_id,
    )


def time_to_px(mapping: PixelMapping, t: float) -> float:
    """Horizontal pixel coordinate of time t (real-valued, 0 at the origin)."""
    x = (t - mapping.time_origin) * mapping.px_per_second
    if x < -_PX_EPS or x > mapping.image_width + _PX_EPS:
        raise ArgumentError(f"time {t} outside mapped range")
    return x


def px_to_time(mapping: PixelMapping, x: float) -> float:
    """Time of horizontal pixel coordinate x; inverse of time_to_px."""
    if x < -_PX_EPS or x > mapping.image_width + _PX_EPS:
        raise ArgumentError(f"pixel {x} outside image width {mapping.image_width}")
    return mapping.time_origin + x / mapping.px_per_second


def px_to_frequency(mapping: PixelMapping, y: float) -> float:
    """Frequency at vertical pixel coordinate y (0 = top = f_max)."""
    if y < -_PX_EPS or y > mapping.image_height + _PX_EPS:
        raise ArgumentError(f"pixel {y} outside image height {mapping.image_height}")
    frac = min(max(y / mapping.image_height, 0.0), 1.0)
    return mapping.f_max * (mapping.f_min / mapping.f_max) ** frac


def frequency_to_px(mapping: PixelMapping, f: float) -> float:
    """Vertical pixel coordinate of a frequency; inverse of px_to_frequency."""
    if not (mapping.f_min <= f <= mapping.f_max):
        raise ArgumentError(f"frequency {f} outside [{mapping.f_min}, {mapping.f_max}]")
    return mapping.image_height * math.log(mapping.f_max / f) / math.log(mapping.f_max / mapping.f_min)


def save_mapping(mapping: PixelMapping, path):
    """Write the sidecar JSON needed for back-projection and labeling."""
    payload = {
        "time_origin": mapping.time_origin,
        "px_per_second": mapping.px_per_second,
        "f_min": mapping.f_min,
        "f_max": mapping.f_max,
        "height": mapping.image_height,
        "width": mapping.image_width,
        "source_id": mapping.source_id,
    }
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(payload, fh, indent=2, sort_keys=True)
        fh.write("\n")


def load_mapping(path) -> PixelMapping:
    with open(path, encoding="utf-8") as fh:
        d = json.load(fh)
    return PixelMapping(
        time_origin=d["time_origin"],
        image_width=d["width"],
        image_height=d["height"],
        f_min=d["f_min"],
        f_max=d["f_max"],
        px_per_second=d["px_per_second"],
        source_id=d.get("source_id", ""),
    )


# --- colormap ----------------------------------------------------------------

#: Piecewise-linear ramp over normalized magnitude. Zero maps to pure white
#: so filtered-out background renders blank; the top of the band saturates red.
DEFAULT_COLORMAP = (
    (0.00, (255, 255, 255)),
    (0.25, (0, 0, 255)),
    (0.50, (0, 255, 0)),
    (0.75, (255, 255, 0)),
    (1.00, (255, 0, 0)),
)


def _apply_colormap(norm: np.ndarray, stops) -> np.ndarray:
    positions = np.array([s[0] for s in stops])
    colors = np.array([s[1] for s in stops], dtype=float)
    out = np.empty(norm.shape + (3,), dtype=np.uint8)
    for ch in range(3):
        vals = np.interp(norm, positions, colors[:, ch])
        out[..., ch] = np.floor(vals + 0.5).astype(np.uint8)
    return out


@dataclass(frozen=True)
class ScalogramImage:
    """RGB raster plus the mapping that ties pixels back to time/frequency."""

    pixels: np.ndarray = field(repr=False)
    mapping: PixelMapping
    source_id: str = ""

    def __post_init__(self):
        h, w = self.pixels.shape[:2]
        if (w, h) != (self.mapping.image_width, self.mapping.image_height):
            raise ArgumentError(
                f"pixel array {w}x{h} does not match mapping "
                f"{self.mapping.image_width}x{self.mapping.image_height}"
            )
        self.pixels.setflags(write=False)

    def save_png(self, path):
        Image.fromarray(self.pixels, mode="RGB").save(path, format="PNG")


def render(
    sg: ScalogramGrid,
    colormap=DEFAULT_COLORMAP,
    px_per_second: float = DEFAULT_PX_PER_SECOND,
    image_height: int = DEFAULT_IMAGE_HEIGHT,
) -> ScalogramImage:
    """Rasterize a magnitude grid to an RGB image.

    Magnitudes are normalized to [0, c2] when a filter band is attached,
    otherwise to the grid maximum. Columns are linearly resampled from sample
    positions to pixel centers; each scale row is stretched evenly over
    image_height / n_rows pixel rows.
    """
    if sg.n_rows == 0 or sg.n_cols == 0:
        raise ArgumentError("cannot render an empty grid")
    mags = sg.magnitudes
    if not np.isfinite(mags).all() or (mags < 0).any():
        raise ArgumentError("magnitudes must be finite and non-negative")
    if sg.band is not None:
        scale = sg.band.c2
    else:
        scale = float(mags.max())
    if scale <= 0:
        scale = 1.0
    norm = np.clip(mags / scale, 0.0, 1.0)

    mapping = mapping_for_grid(sg, px_per_second, image_height)
    w, h = mapping.image_width, mapping.image_height
    # Pixel-center positions in sample-index coordinates.
    col_pos = (np.arange(w) + 0.5) * (sg.sample_rate / px_per_second)
    sample_idx = np.arange(sg.n_cols)
    horiz = np.empty((sg.n_rows, w))
    for r in range(sg.n_rows):
        horiz[r] = np.interp(col_pos, sample_idx, norm[r])
    row_of_px = np.minimum((np.arange(h) * sg.n_rows) // h, sg.n_rows - 1)
    pixels = _apply_colormap(horiz[row_of_px], colormap)
    return ScalogramImage(pixels=pixels, mapping=mapping, source_id=sg.source_id)


def segment(
    sg: ScalogramGrid,
    max_width_s: float = 40.0,
    keep_regions=None,
) -> list[ScalogramGrid]:
    """Cut a grid into contiguous parts no longer than max_width_s.

    Each part's time_origin is advanced so global timestamps survive the cut.
    With keep_regions (training mode), parts whose span intersects no region
    are dropped.
    """
    if not max_width_s > 0:
        raise ArgumentError(f"max_width_s must be > 0, got {max_width_s}")
    cols_per_part = int(math.floor(max_width_s * sg.sample_rate + _PX_EPS))
    if cols_per_part < 1:
        raise ArgumentError("max_width_s shorter than one sample period")
    parts = []
    for start in range(0, sg.n_cols, cols_per_part):
        stop = min(start + cols_per_part, sg.n_cols)
        origin = sg.time_origin + start / sg.sample_rate
        if keep_regions is not None:
            t0, t1 = origin, sg.time_origin + stop / sg.sample_rate
            if not any(r0 < t1 and t0 < r1 for r0, r1 in keep_regions):
                continue
        parts.append(
            replace(
                sg,
                coefficients=sg.coefficients[:, start:stop].copy(),
                magnitudes=sg.magnitudes[:, start:stop].copy(),
                time_origin=origin,
            )
        )
    return parts
