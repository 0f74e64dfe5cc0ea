"""Magnitude band filtering: whiten below c1, saturate above c2.

Cells strictly below c1 become zero (rendered white), cells strictly above
c2 are clamped to c2, and everything on or inside the boundaries passes
unchanged. Complex coefficients are never touched; the filter acts on the
magnitude plane only. `calibrate_band` picks (c1, c2) from magnitudes pooled
inside labeled event boxes: as small an interval as possible while still
covering essentially every event cell.
"""

from __future__ import annotations

from dataclasses import dataclass, replace

import numpy as np

from .errors import ArgumentError
from .wavelet import ScalogramGrid


@dataclass(frozen=True)
class FilterBand:
    """Magnitude clipping interval; requires 0 <= c1 < c2, both finite."""

    c1: float
    c2: float

    def __post_init__(self):
        if not (np.isfinite(self.c1) and np.isfinite(self.c2)):
            raise ArgumentError("band endpoints must be finite")
        if not (0 <= self.c1 < self.c2):
            raise ArgumentError(f"require 0 <= c1 < c2, got ({self.c1}, {self.c2})")


def apply_band_filter(sg: ScalogramGrid, band: FilterBand) -> ScalogramGrid:
    """Return a filtered copy of the grid, tagged with the band.

    Boundary cells (exactly c1 or c2) pass unchanged; the comparisons are
    strict. The input grid is never modified.
    """
    mags = sg.magnitudes.copy()
    mags[mags < band.c1] = 0.0
    np.minimum(mags, band.c2, out=mags)
    return replace(sg, magnitudes=mags, band=band)


@dataclass(frozen=True)
class LabeledRegion:
    """A time/frequency box known to contain event energy, for calibration."""

    t_start: float
    t_end: float
    f_low: float
    f_high: float

    def cell_mask(self, sg: ScalogramGrid) -> np.ndarray:
        cols = sg.time_origin + np.arange(sg.n_cols) / sg.sample_rate
        col_sel = (cols >= self.t_start) & (cols < self.t_end)
        freqs = sg.grid.frequencies
        row_sel = (freqs >= self.f_low) & (freqs <= self.f_high)
        return np.outer(row_sel, col_sel)


def calibrate_band(
    labeled: list[tuple[ScalogramGrid, list[LabeledRegion]]],
    coverage: float = 0.99,
    margin: float = 0.10,
) -> FilterBand:
    """Choose (c1, c2) from magnitudes pooled inside all labeled boxes.

    c1 is the (1 - coverage) quantile shrunk by the margin, c2 the coverage
    quantile grown by it, so the band covers the labeled population with
    headroom on both sides.

    Raises:
        ArgumentError: empty pool, no box with at least 10 cells, or a pool
            too degenerate to give c1 < c2.
    """
    if not (0 < coverage <= 1.0):
        raise ArgumentError(f"coverage must be in (0, 1], got {coverage}")
    if margin < 0:
        raise ArgumentError(f"margin must be >= 0, got {margin}")
    pool = []
    largest_box = 0
    for sg, regions in labeled:
        for region in regions:
            mask = region.cell_mask(sg)
            largest_box = max(largest_box, int(mask.sum()))
            pool.append(sg.magnitudes[mask])
    if not pool:
        raise ArgumentError("no labeled boxes supplied")
    values = np.concatenate(pool)
    if values.size == 0:
        raise ArgumentError("labeled boxes contain no cells")
    if largest_box < 10:
        raise ArgumentError("need at least one labeled box with >= 10 cells")
    lo = float(np.quantile(values, 1.0 - coverage))
    hi = float(np.quantile(values, coverage))
    c1 = max(0.0, lo / (1.0 + margin))
    c2 = hi * (1.0 + margin)
    if not c2 > c1:
        raise ArgumentError(
            f"degenerate magnitude pool: computed band ({c1}, {c2}) has no width"
        )
    return FilterBand(c1, c2)
