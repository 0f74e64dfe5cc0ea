"""Stage orchestration over file handoffs.

Each stage reads and writes the interchange files (PNG + mapping sidecar +
binary magnitude dump + YOLO detections + results JSON), so any stage can be
replaced by an external tool. The fused `run_pipeline` literally invokes the
same stage functions in sequence, which makes staged and fused runs
byte-identical by construction.

Naming convention per recording: `<source>_p<k>` for segment part k, with
suffixes `.png`, `.mapping.json`, `.mag.bin`, `.cwt.bin`, `.detections.txt`;
filtered artifacts insert `.filtered` before the suffix.
"""

from __future__ import annotations

from dataclasses import replace
from pathlib import Path

from .bandfilter import FilterBand, apply_band_filter
from .config import PipelineConfig
from .detector import (
    detect_blobs,
    export_yolo_detections,
    import_detections,
    nms,
)
from .errors import ArgumentError
from .mapback import EventInterval, merge_adjacent, save_intervals, to_event_interval
from .metrics import EvalReport, evaluate, load_ground_truth
from .scalogram import load_mapping, mapping_for_grid, render, save_mapping, segment
from .timeseries import TimeSeries, load_csv
from .wavelet import build_scale_grid, cwt_fft, load_matrix, save_matrix


def _band_from_config(cfg: PipelineConfig) -> FilterBand:
    cfg.require_band()
    return FilterBand(cfg.filter.c1, cfg.filter.c2)


def gate_intervals(intervals: list[EventInterval], freq_gate) -> list[EventInterval]:
    """Drop intervals whose frequency band misses the configured gate."""
    if freq_gate is None:
        return list(intervals)
    lo, hi = freq_gate
    return [iv for iv in intervals if iv.f_high >= lo and iv.f_low <= hi]


def transform_series(ts: TimeSeries, cfg: PipelineConfig, source_id: str = ""):
    """CWT plus segmentation: the in-memory front half of the pipeline."""
    grid = build_scale_grid(cfg.cwt.f_min, cfg.cwt.f_max, cfg.cwt.voices, cfg.cwt.omega0)
    sg = cwt_fft(ts, grid)
    if source_id:
        sg = replace(sg, source_id=source_id)
    return segment(sg, cfg.segment.max_s)


def process_series(ts: TimeSeries, cfg: PipelineConfig, source_id: str = "") -> list[EventInterval]:
    """Full in-memory pass: transform, filter, detect, back-project, merge."""
    band = _band_from_config(cfg)
    intervals: list[EventInterval] = []
    for part in transform_series(ts, cfg, source_id):
        filtered = apply_band_filter(part, band)
        mapping = mapping_for_grid(filtered, cfg.mapping.px_per_second, cfg.mapping.height)
        dets = detect_blobs(filtered, mapping, cfg.detector.min_area, cfg.detector.cs_threshold)
        dets = nms(dets, cfg.detector.nms_iou)
        intervals.extend(to_event_interval(d, mapping) for d in dets)
    intervals = gate_intervals(intervals, cfg.detector.freq_gate)
    return merge_adjacent(intervals)


# --- file-based stages ---------------------------------------------------------


def stage_transform(
    input_csv,
    outdir,
    cfg: PipelineConfig,
    source_id: str | None = None,
    time_column: str = "time",
    value_column: str = "value",
    delimiter: str = ",",
    dump_coefficients: bool = False,
) -> list[str]:
    """CSV -> per-part scalogram PNG, mapping sidecar, magnitude dump.

    Returns the part path prefixes (no suffix) for the later stages.
    """
    input_csv = Path(input_csv)
    outdir = Path(outdir)
    outdir.mkdir(parents=True, exist_ok=True)
    source = source_id or input_csv.stem
    ts = load_csv(input_csv, time_column, value_column, delimiter, channel_name=source)
    parts = transform_series(ts, cfg, source)
    stems = []
    for k, part in enumerate(parts):
        stem = outdir / f"{source}_p{k:03d}"
        image = render(part, px_per_second=cfg.mapping.px_per_second, image_height=cfg.mapping.height)
        image.save_png(f"{stem}.png")
        save_mapping(image.mapping, f"{stem}.mapping.json")
        save_matrix(part, f"{stem}.mag.bin", kind="magnitudes")
        if dump_coefficients:
            save_matrix(part, f"{stem}.cwt.bin", kind="coefficients")
        stems.append(str(stem))
    return stems


def _load_part(stem: str):
    mapping = load_mapping(f"{stem}.mapping.json")
    sg = load_matrix(f"{stem}.mag.bin", time_origin=mapping.time_origin, source_id=mapping.source_id)
    return sg, mapping


def stage_filter(stems: list[str], cfg: PipelineConfig) -> list[str]:
    """Apply the configured band to magnitude dumps; emits filtered twins."""
    band = _band_from_config(cfg)
    out = []
    for stem in stems:
        sg, mapping = _load_part(stem)
        filtered = apply_band_filter(sg, band)
        fstem = f"{stem}.filtered"
        save_matrix(filtered, f"{fstem}.mag.bin", kind="magnitudes")
        save_mapping(mapping, f"{fstem}.mapping.json")
        image = render(filtered, px_per_second=cfg.mapping.px_per_second, image_height=cfg.mapping.height)
        image.save_png(f"{fstem}.png")
        out.append(fstem)
    return out


def stage_detect(
    stems: list[str],
    cfg: PipelineConfig,
    external_dir=None,
    external_format: str = "yolo_text",
) -> list[str]:
    """Run the configured detector per part; writes YOLO detection files.

    Builtin mode detects blobs in the filtered magnitude dump. External mode
    imports `<part>.txt` (or `.xml`) from external_dir, then applies the same
    confidence threshold and NMS.
    """
    band = _band_from_config(cfg)
    paths = []
    for stem in stems:
        sg, mapping = _load_part(stem)
        if cfg.detector.mode == "builtin":
            filtered = replace(sg, band=band)
            dets = detect_blobs(filtered, mapping, cfg.detector.min_area, cfg.detector.cs_threshold)
        else:
            if external_dir is None:
                raise ArgumentError("external detector mode needs a detections directory")
            ext = "xml" if external_format == "voc_xml" else "txt"
            label_path = Path(external_dir) / f"{Path(stem).name}.{ext}"
            dets = import_detections(label_path, external_format, mapping)
            dets = [d for d in dets if d.confidence >= cfg.detector.cs_threshold]
        dets = nms(dets, cfg.detector.nms_iou)
        out = f"{stem}.detections.txt"
        with open(out, "w", encoding="utf-8") as fh:
            fh.write(export_yolo_detections(dets, mapping))
        paths.append(out)
    return paths


def stage_map(stems: list[str], out_path, cfg: PipelineConfig) -> list[EventInterval]:
    """Back-project per-part detections to merged event intervals."""
    intervals: list[EventInterval] = []
    for stem in stems:
        mapping = load_mapping(f"{stem}.mapping.json")
        dets = import_detections(f"{stem}.detections.txt", "yolo_text", mapping)
        intervals.extend(to_event_interval(d, mapping) for d in dets)
    intervals = gate_intervals(intervals, cfg.detector.freq_gate)
    intervals = merge_adjacent(intervals)
    save_intervals(intervals, out_path)
    return intervals


def stage_eval(results_intervals, truth_path, cfg: PipelineConfig) -> EvalReport:
    """Score intervals (or a results file) against a ground-truth file."""
    if isinstance(results_intervals, (str, Path)):
        from .mapback import load_intervals

        results_intervals = load_intervals(results_intervals)
    truths = load_ground_truth(truth_path)
    by_source: dict[str, list[EventInterval]] = {}
    for iv in results_intervals:
        by_source.setdefault(iv.source_id, []).append(iv)
    return evaluate(by_source, truths, cfg.eval.overlap_threshold)


def run_pipeline(
    input_csv,
    outdir,
    cfg: PipelineConfig,
    source_id: str | None = None,
    time_column: str = "time",
    value_column: str = "value",
    delimiter: str = ",",
    external_dir=None,
    external_format: str = "yolo_text",
) -> tuple[list[EventInterval], list[str]]:
    """The fused flow: transform, filter, detect, map over file handoffs.

    Returns the merged intervals and the part stems. Composing the stage
    functions directly guarantees byte-identical artifacts to running the
    stages one subcommand at a time.
    """
    stems = stage_transform(
        input_csv, outdir, cfg, source_id, time_column, value_column, delimiter
    )
    fstems = stage_filter(stems, cfg)
    stage_detect(fstems, cfg, external_dir, external_format)
    source = source_id or Path(input_csv).stem
    results_path = Path(outdir) / f"{source}.results.json"
    intervals = stage_map(fstems, results_path, cfg)
    return intervals, fstems
