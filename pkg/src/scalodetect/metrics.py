"""Evaluation of predicted event intervals against ground truth.

Matching pairs predictions and truth intervals one-to-one by descending
temporal IoU; pairs at or above the overlap threshold count as true
positives. A recording with neither truth intervals nor predictions
contributes one true negative, mirroring per-test bookkeeping. Boundary
errors report how far each matched prediction's endpoints sit from truth,
absolutely and as a percentage of the event length.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field

from .errors import ArgumentError, DataError
from .mapback import EventInterval

DEFAULT_OVERLAP_THRESHOLD = 0.3


@dataclass(frozen=True)
class GroundTruth:
    """Reference intervals for one recording."""

    source_id: str
    intervals: tuple[tuple[float, float], ...]

    def __post_init__(self):
        ivs = tuple((float(a), float(b)) for a, b in self.intervals)
        prev_end = -math.inf
        for a, b in ivs:
            if not a < b:
                raise ArgumentError(f"{self.source_id}: degenerate interval ({a}, {b})")
            if a < prev_end:
                raise ArgumentError(f"{self.source_id}: intervals overlap or are unsorted")
            prev_end = b
        object.__setattr__(self, "intervals", ivs)

    @property
    def test_has_event(self) -> bool:
        return len(self.intervals) > 0


def interval_iou(a: tuple[float, float], b: tuple[float, float]) -> float:
    """Temporal intersection over union of two (start, end) intervals."""
    inter = max(0.0, min(a[1], b[1]) - max(a[0], b[0]))
    if inter == 0.0:
        return 0.0
    union = (a[1] - a[0]) + (b[1] - b[0]) - inter
    return inter / union


@dataclass(frozen=True)
class BoundaryErrors:
    """Endpoint deviation of a matched prediction, signed seconds and % of length."""

    length: float
    start_error: float
    start_error_pct: int
    end_error: float
    end_error_pct: int
    start_error_pct_raw: float
    end_error_pct_raw: float


def boundary_errors(truth: tuple[float, float], pred: tuple[float, float]) -> BoundaryErrors:
    """Compare a predicted interval with its matched truth interval.

    Percentages are the magnitude of the error relative to the truth length,
    rounded half-up to whole percent for presentation; the raw values are
    kept alongside.
    """
    a1, b1 = truth
    a2, b2 = pred
    length = b1 - a1
    if not length > 0:
        raise DataError(f"truth interval ({a1}, {b1}) has non-positive length")
    if not b2 > a2:
        raise DataError(f"predicted interval ({a2}, {b2}) has non-positive length")
    start_error = a2 - a1
    end_error = b2 - b1
    start_pct_raw = 100.0 * abs(start_error) / length
    end_pct_raw = 100.0 * abs(end_error) / length
    return BoundaryErrors(
        length=length,
        start_error=start_error,
        start_error_pct=int(math.floor(start_pct_raw + 0.5)),
        end_error=end_error,
        end_error_pct=int(math.floor(end_pct_raw + 0.5)),
        start_error_pct_raw=start_pct_raw,
        end_error_pct_raw=end_pct_raw,
    )


@dataclass(frozen=True)
class MatchRecord:
    """One matched (truth, prediction) pair with its boundary errors."""

    source_id: str
    truth: tuple[float, float]
    prediction: tuple[float, float]
    confidence: float
    iou: float
    errors: BoundaryErrors


@dataclass
class MatchCounts:
    tp: int = 0
    fp: int = 0
    fn: int = 0
    tn: int = 0
    matches: list[MatchRecord] = field(default_factory=list)

    def add(self, other: "MatchCounts"):
        self.tp += other.tp
        self.fp += other.fp
        self.fn += other.fn
        self.tn += other.tn
        self.matches.extend(other.matches)


def match_detections(
    predictions: list[EventInterval],
    truth: GroundTruth,
    overlap_threshold: float = DEFAULT_OVERLAP_THRESHOLD,
) -> MatchCounts:
    """Assign predictions to truth intervals for one recording.

    Greedy one-to-one assignment by descending IoU; a pair counts as TP when
    its IoU reaches the threshold. Leftover predictions are FP, leftover
    truths FN. An event-free recording with no predictions is one TN.
    """
    if not 0.0 < overlap_threshold <= 1.0:
        raise ArgumentError(f"overlap_threshold must be in (0, 1], got {overlap_threshold}")
    counts = MatchCounts()
    if not truth.intervals and not predictions:
        counts.tn = 1
        return counts

    # Candidate pairs sorted by IoU, with indices as deterministic tie-breaks.
    pairs = []
    for ti, t_iv in enumerate(truth.intervals):
        for pi, pred in enumerate(predictions):
            iou = interval_iou(t_iv, (pred.start, pred.end))
            if iou >= overlap_threshold:
                pairs.append((iou, ti, pi))
    pairs.sort(key=lambda p: (-p[0], p[1], p[2]))
    used_truth: set[int] = set()
    used_pred: set[int] = set()
    for iou, ti, pi in pairs:
        if ti in used_truth or pi in used_pred:
            continue
        used_truth.add(ti)
        used_pred.add(pi)
        pred = predictions[pi]
        counts.matches.append(
            MatchRecord(
                source_id=truth.source_id,
                truth=truth.intervals[ti],
                prediction=(pred.start, pred.end),
                confidence=pred.confidence,
                iou=iou,
                errors=boundary_errors(truth.intervals[ti], (pred.start, pred.end)),
            )
        )
    counts.tp = len(used_truth)
    counts.fp = len(predictions) - len(used_pred)
    counts.fn = len(truth.intervals) - len(used_truth)
    return counts


@dataclass(frozen=True)
class ClassificationMetrics:
    """Precision/recall/accuracy/F1; None marks an undefined (0/0) value."""

    precision: float | None
    recall: float | None
    accuracy: float | None
    f1: float | None
    degenerate: bool


def classification_metrics(tp: int, fp: int, fn: int, tn: int) -> ClassificationMetrics:
    """Compute the four headline rates from raw counts.

    Zero-denominator cases yield None instead of raising. F1 is evaluated in
    count form 2*TP / (2*TP + FP + FN) — algebraically the harmonic mean of
    precision and recall — so it is correctly rounded in one division.
    """
    for name, v in (("tp", tp), ("fp", fp), ("fn", fn), ("tn", tn)):
        if v < 0:
            raise ArgumentError(f"{name} must be >= 0, got {v}")
    total = tp + fp + fn + tn
    precision = tp / (fp + tp) if fp + tp > 0 else None
    recall = tp / (fn + tp) if fn + tp > 0 else None
    accuracy = (tp + tn) / total if total > 0 else None
    if precision is None or recall is None or precision + recall == 0:
        f1 = None
    else:
        f1 = 2 * tp / (2 * tp + fp + fn)
    return ClassificationMetrics(
        precision=precision,
        recall=recall,
        accuracy=accuracy,
        f1=f1,
        degenerate=total == 0,
    )


@dataclass(frozen=True)
class EvalReport:
    """Aggregate counts, rates, and per-match boundary errors."""

    tp: int
    fp: int
    fn: int
    tn: int
    precision: float | None
    recall: float | None
    accuracy: float | None
    f1: float | None
    degenerate: bool
    matches: tuple[MatchRecord, ...]


def evaluate(
    predictions_by_source: dict[str, list[EventInterval]],
    truths: list[GroundTruth],
    overlap_threshold: float = DEFAULT_OVERLAP_THRESHOLD,
) -> EvalReport:
    """Score predictions across a set of recordings.

    Predictions for a source without a ground-truth entry count as false
    positives against an empty truth.
    """
    totals = MatchCounts()
    seen = set()
    for truth in truths:
        seen.add(truth.source_id)
        preds = predictions_by_source.get(truth.source_id, [])
        totals.add(match_detections(preds, truth, overlap_threshold))
    for source_id, preds in predictions_by_source.items():
        if source_id not in seen and preds:
            totals.add(match_detections(preds, GroundTruth(source_id, ()), overlap_threshold))
    rates = classification_metrics(totals.tp, totals.fp, totals.fn, totals.tn)
    return EvalReport(
        tp=totals.tp,
        fp=totals.fp,
        fn=totals.fn,
        tn=totals.tn,
        precision=rates.precision,
        recall=rates.recall,
        accuracy=rates.accuracy,
        f1=rates.f1,
        degenerate=rates.degenerate,
        matches=tuple(totals.matches),
    )


def save_ground_truth(truths: list[GroundTruth], path):
    payload = [
        {"source_id": t.source_id, "intervals": [list(iv) for iv in t.intervals]}
        for t in truths
    ]
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(payload, fh, indent=2)
        fh.write("\n")


def load_ground_truth(path) -> list[GroundTruth]:
    """Read ground truth JSON: a list of {source_id, intervals} objects
    (a single object is accepted too)."""
    with open(path, encoding="utf-8") as fh:
        payload = json.load(fh)
    if isinstance(payload, dict):
        payload = [payload]
    return [
        GroundTruth(d["source_id"], tuple(tuple(iv) for iv in d["intervals"]))
        for d in payload
    ]
