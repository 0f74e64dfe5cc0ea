"""Back-projection of pixel-space detections onto the time axis.

A detection box becomes an event interval: horizontal edges map through the
pixel rate to start/end seconds, vertical edges through the log frequency
mapping to a band. Intervals from adjacent segments of one recording are
merged when they nearly touch, so segmentation stays invisible downstream.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, replace

from .detector import Detection
from .errors import ArgumentError
from .scalogram import PixelMapping, px_to_frequency, px_to_time

DEFAULT_MERGE_GAP_S = 0.05


@dataclass(frozen=True)
class EventInterval:
    """A detected event in physical units."""

    start: float
    end: float
    f_low: float
    f_high: float
    confidence: float
    source_id: str = ""

    def __post_init__(self):
        if not self.start < self.end:
            raise ArgumentError(f"require start < end, got ({self.start}, {self.end})")
        if not self.f_low < self.f_high:
            raise ArgumentError(f"require f_low < f_high, got ({self.f_low}, {self.f_high})")
        if not 0.0 <= self.confidence <= 1.0:
            raise ArgumentError(f"confidence {self.confidence} outside [0, 1]")


def to_event_interval(det: Detection, mapping: PixelMapping) -> EventInterval:
    """Project one detection box back to a time interval and frequency band.

    Any segmentation offset is already folded into mapping.time_origin. The
    top edge of the box gives f_high, the bottom edge f_low.
    """
    x0, y0, x1, y1 = det.bbox
    return EventInterval(
        start=px_to_time(mapping, x0),
        end=px_to_time(mapping, x1),
        f_low=px_to_frequency(mapping, y1),
        f_high=px_to_frequency(mapping, y0),
        confidence=det.confidence,
        source_id=mapping.source_id,
    )


def merge_adjacent(
    intervals: list[EventInterval],
    gap_s: float = DEFAULT_MERGE_GAP_S,
) -> list[EventInterval]:
    """Merge same-source intervals separated by at most gap_s seconds.

    Merging takes the earliest start, latest end, widest frequency band and
    highest confidence. The default gap is far below any plausible event
    length, so only pieces split by a segment cut are joined.
    """
    by_source: dict[str, list[EventInterval]] = {}
    for iv in intervals:
        by_source.setdefault(iv.source_id, []).append(iv)
    merged: list[EventInterval] = []
    for source in by_source.values():
        source.sort(key=lambda iv: (iv.start, iv.end))
        current = source[0]
        for iv in source[1:]:
            if iv.start - current.end <= gap_s:
                current = replace(
                    current,
                    start=min(current.start, iv.start),
                    end=max(current.end, iv.end),
                    f_low=min(current.f_low, iv.f_low),
                    f_high=max(current.f_high, iv.f_high),
                    confidence=max(current.confidence, iv.confidence),
                )
            else:
                merged.append(current)
                current = iv
        merged.append(current)
    merged.sort(key=lambda iv: (iv.start, iv.end, iv.source_id))
    return merged


def save_intervals(intervals: list[EventInterval], path):
    """Persist results as the JSON interchange list."""
    payload = [
        {
            "source_id": iv.source_id,
            "start_s": iv.start,
            "end_s": iv.end,
            "f_low_hz": iv.f_low,
            "f_high_hz": iv.f_high,
            "confidence": iv.confidence,
        }
        for iv in intervals
    ]
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(payload, fh, indent=2)
        fh.write("\n")


def load_intervals(path) -> list[EventInterval]:
    with open(path, encoding="utf-8") as fh:
        payload = json.load(fh)
    return [
        EventInterval(
            start=d["start_s"],
            end=d["end_s"],
            f_low=d["f_low_hz"],
            f_high=d["f_high_hz"],
            confidence=d["confidence"],
            source_id=d.get("source_id", ""),
        )
        for d in payload
    ]
