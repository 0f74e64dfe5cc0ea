"""Evaluation report rendering: JSON, delimited tables, and figures.

The report directory holds `report.json` (machine-readable counts, rates,
and matches), `matches.csv` (one row per matched event, columns following
the boundary-error table layout), and `boundary_errors.png` (error
distributions). Recording overlays picture the detected intervals on the
raw signal the way reviewers inspect them.
"""

from __future__ import annotations

import csv
import json
from pathlib import Path

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt
import numpy as np

from .mapback import EventInterval
from .metrics import EvalReport
from .timeseries import TimeSeries

_MATCH_COLUMNS = (
    "source_id",
    "truth_start_s",
    "truth_end_s",
    "pred_start_s",
    "pred_end_s",
    "length_s",
    "start_error_s",
    "start_error_pct",
    "end_error_s",
    "end_error_pct",
    "iou",
    "confidence",
)


def report_to_dict(report: EvalReport) -> dict:
    return {
        "counts": {"tp": report.tp, "fp": report.fp, "fn": report.fn, "tn": report.tn},
        "metrics": {
            "precision": report.precision,
            "recall": report.recall,
            "accuracy": report.accuracy,
            "f1": report.f1,
            "degenerate": report.degenerate,
        },
        "matches": [
            {
                "source_id": m.source_id,
                "truth": list(m.truth),
                "prediction": list(m.prediction),
                "confidence": m.confidence,
                "iou": m.iou,
                "length_s": m.errors.length,
                "start_error_s": m.errors.start_error,
                "start_error_pct": m.errors.start_error_pct,
                "end_error_s": m.errors.end_error,
                "end_error_pct": m.errors.end_error_pct,
            }
            for m in report.matches
        ],
    }


def _write_matches_csv(report: EvalReport, path):
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow(_MATCH_COLUMNS)
        for m in report.matches:
            writer.writerow(
                [
                    m.source_id,
                    f"{m.truth[0]:.6f}",
                    f"{m.truth[1]:.6f}",
                    f"{m.prediction[0]:.6f}",
                    f"{m.prediction[1]:.6f}",
                    f"{m.errors.length:.6f}",
                    f"{m.errors.start_error:+.6f}",
                    m.errors.start_error_pct,
                    f"{m.errors.end_error:+.6f}",
                    m.errors.end_error_pct,
                    f"{m.iou:.6f}",
                    f"{m.confidence:.6f}",
                ]
            )


def _plot_boundary_errors(report: EvalReport, path):
    fig, axes = plt.subplots(1, 2, figsize=(9, 3.5))
    starts = [m.errors.start_error for m in report.matches]
    ends = [m.errors.end_error for m in report.matches]
    pcts = [m.errors.start_error_pct_raw for m in report.matches] + [
        m.errors.end_error_pct_raw for m in report.matches
    ]
    if starts:
        bins = np.linspace(
            min(min(starts), min(ends)) - 0.01, max(max(starts), max(ends)) + 0.01, 30
        )
        axes[0].hist(starts, bins=bins, alpha=0.6, label="start")
        axes[0].hist(ends, bins=bins, alpha=0.6, label="end")
        axes[0].legend()
        axes[1].hist(pcts, bins=np.arange(0, max(pcts) + 2), color="tab:purple")
        axes[1].axvline(10, color="red", linestyle="--", linewidth=1)
    axes[0].set_xlabel("boundary error (s)")
    axes[0].set_ylabel("matches")
    axes[1].set_xlabel("boundary error (% of event length)")
    axes[1].set_ylabel("endpoints")
    fig.tight_layout()
    fig.savefig(path, dpi=110)
    plt.close(fig)


def write_report(report: EvalReport, outdir) -> dict:
    """Write report.json, matches.csv, and boundary_errors.png; returns paths."""
    outdir = Path(outdir)
    outdir.mkdir(parents=True, exist_ok=True)
    json_path = outdir / "report.json"
    with open(json_path, "w", encoding="utf-8") as fh:
        json.dump(report_to_dict(report), fh, indent=2)
        fh.write("\n")
    csv_path = outdir / "matches.csv"
    _write_matches_csv(report, csv_path)
    fig_path = outdir / "boundary_errors.png"
    _plot_boundary_errors(report, fig_path)
    return {"json": str(json_path), "csv": str(csv_path), "figure": str(fig_path)}


def plot_overlay(
    ts: TimeSeries,
    intervals: list[EventInterval],
    truth_intervals=None,
    path=None,
    title: str = "",
):
    """Draw the raw signal with detected (red) and truth (green) spans."""
    fig, ax = plt.subplots(figsize=(10, 3))
    ax.plot(ts.timestamps(), ts.samples, linewidth=0.5, color="tab:blue")
    for iv in intervals:
        ax.axvspan(iv.start, iv.end, color="red", alpha=0.3)
    for t0, t1 in truth_intervals or ():
        ax.axvspan(t0, t1, color="green", alpha=0.2)
    ax.set_xlabel("time (s)")
    ax.set_ylabel(ts.channel_name or "signal")
    if title:
        ax.set_title(title)
    fig.tight_layout()
    if path is not None:
        fig.savefig(path, dpi=110)
        plt.close(fig)
        return None
    return fig


def format_summary(report: EvalReport) -> str:
    """One-screen human summary of counts and rates."""

    def fmt(v):
        return "n/a" if v is None else f"{v:.4f}"

    lines = [
        f"TP={report.tp} FP={report.fp} FN={report.fn} TN={report.tn}",
        f"precision={fmt(report.precision)} recall={fmt(report.recall)} "
        f"accuracy={fmt(report.accuracy)} f1={fmt(report.f1)}",
        f"matched events: {len(report.matches)}",
    ]
    if report.matches:
        within = sum(
            1
            for m in report.matches
            if m.errors.start_error_pct_raw <= 10 and m.errors.end_error_pct_raw <= 10
        )
        lines.append(
            f"boundary errors <= 10% of event length on both ends: "
            f"{within}/{len(report.matches)} ({100.0 * within / len(report.matches):.1f}%)"
        )
    return "\n".join(lines)
