"""Command-line pipeline: scalogram event detection from the shell.

Subcommands mirror the processing stages (synth, transform, filter, detect,
map, eval, pipeline) plus the dataset utilities (export-labels, split,
train-config, calibrate). Configuration comes from an optional JSON file and
`--set section.key=value` overrides. Failures print one machine-readable
JSON object on stderr: config violations exit 2 (with the field path),
missing inputs exit 3, other pipeline errors exit 1.
"""

from __future__ import annotations

import json
import sys
from concurrent.futures import ThreadPoolExecutor
from dataclasses import replace
from pathlib import Path

import click

from . import pipeline as stages
from .bandfilter import calibrate_band
from .config import load_config, save_config
from .detector import LabeledBox, export_training_config, export_yolo_labels, write_voc_xml
from .errors import ArgumentError, ConfigError, PipelineError
from .mapback import load_intervals
from .metrics import load_ground_truth, save_ground_truth
from .report import format_summary, plot_overlay, report_to_dict, write_report
from .scalogram import frequency_to_px, load_mapping, time_to_px
from .synth import (
    CORPUS_SEED,
    corpus_preset,
    dataset_split,
    generate_test,
    load_manifest,
    save_manifest,
)
from .timeseries import load_csv, write_csv
from .wavelet import build_scale_grid, cwt_fft


def _fail(code: str, message: str, exit_code: int, field: str | None = None):
    payload = {"error": {"code": code, "message": message}}
    if field is not None:
        payload["error"]["field"] = field
    click.echo(json.dumps(payload), err=True)
    sys.exit(exit_code)


class _Group(click.Group):
    def invoke(self, ctx):
        try:
            return super().invoke(ctx)
        except ConfigError as exc:
            _fail("config", str(exc), 2, field=exc.field)
        except FileNotFoundError as exc:
            _fail("missing_input", str(exc), 3)
        except PipelineError as exc:
            _fail(exc.code, str(exc), 1)
        except OSError as exc:
            _fail("io", str(exc), 1)


def _parse_override(item: str) -> tuple[str, object]:
    if "=" not in item:
        raise ConfigError(item, "override must look like section.key=value")
    key, raw = item.split("=", 1)
    try:
        value = json.loads(raw)
    except json.JSONDecodeError:
        value = raw
    return key, value


@click.group(cls=_Group)
@click.option("--config", "config_path", type=click.Path(), default=None, help="Pipeline config JSON.")
@click.option("--set", "overrides", multiple=True, metavar="KEY=VALUE", help="Override config entries, e.g. --set detector.cs_threshold=0.6.")
@click.option("--json", "as_json", is_flag=True, help="Emit structured JSON results on stdout.")
@click.pass_context
def main(ctx, config_path, overrides, as_json):
    """Detect frequency-based events in recorded sensor time series."""
    ctx.ensure_object(dict)
    ctx.obj["cfg"] = load_config(config_path, dict(_parse_override(o) for o in overrides))
    ctx.obj["json"] = as_json


def _emit(ctx, payload: dict, text: str | None = None):
    if ctx.obj["json"]:
        click.echo(json.dumps(payload, indent=2))
    elif text is not None:
        click.echo(text)


@main.command()
@click.option("--outdir", type=click.Path(), required=True)
@click.option("--spec", "spec_path", type=click.Path(), default=None, help="SynthSpec JSON (object or list).")
@click.option("--corpus-preset", "use_preset", is_flag=True, help="Generate the 518-test benchmark corpus.")
@click.option("--seed", type=int, default=CORPUS_SEED, show_default=True)
@click.option("--jobs", type=int, default=1, show_default=True)
@click.pass_context
def synth(ctx, outdir, spec_path, use_preset, seed, jobs):
    """Generate synthetic test recordings with ground truth."""
    if use_preset == (spec_path is not None):
        raise ArgumentError("pass exactly one of --spec or --corpus-preset")
    outdir = Path(outdir)
    outdir.mkdir(parents=True, exist_ok=True)
    if use_preset:
        specs = corpus_preset(seed)
    else:
        specs = load_manifest(spec_path)

    def emit_one(spec):
        ts, truth = generate_test(spec)
        write_csv(ts, outdir / f"{spec.source_id}.csv", value_column="value")
        return truth

    with ThreadPoolExecutor(max_workers=max(1, jobs)) as pool:
        truths = list(pool.map(emit_one, specs))
    save_manifest(specs, outdir / "manifest.json")
    save_ground_truth(truths, outdir / "ground_truth.json")
    n_events = sum(len(t.intervals) for t in truths)
    _emit(
        ctx,
        {"tests": len(specs), "events": n_events, "outdir": str(outdir)},
        f"wrote {len(specs)} tests ({n_events} events) to {outdir}",
    )


@main.command()
@click.option("--input", "input_csv", type=click.Path(), required=True)
@click.option("--outdir", type=click.Path(), default=".", show_default=True)
@click.option("--source-id", default=None)
@click.option("--time-column", default="time", show_default=True)
@click.option("--value-column", default="value", show_default=True)
@click.option("--delimiter", default=",", show_default=True)
@click.option("--coefficients", is_flag=True, help="Also dump complex coefficients.")
@click.pass_context
def transform(ctx, input_csv, outdir, source_id, time_column, value_column, delimiter, coefficients):
    """CSV recording -> scalogram parts (PNG + sidecar + magnitude dump)."""
    stems = stages.stage_transform(
        input_csv, outdir, ctx.obj["cfg"], source_id,
        time_column, value_column, delimiter, coefficients,
    )
    _emit(ctx, {"parts": stems}, "\n".join(stems))


def _normalize_stems(paths) -> list[str]:
    stems = []
    for p in paths:
        s = str(p)
        for suffix in (".mag.bin", ".mapping.json", ".png", ".detections.txt", ".cwt.bin"):
            if s.endswith(suffix):
                s = s[: -len(suffix)]
                break
        stems.append(s)
    return stems


@main.command("filter")
@click.argument("parts", nargs=-1, required=True, type=click.Path())
@click.pass_context
def filter_cmd(ctx, parts):
    """Band-filter magnitude dumps (uses filter.c1/c2 from the config)."""
    out = stages.stage_filter(_normalize_stems(parts), ctx.obj["cfg"])
    _emit(ctx, {"parts": out}, "\n".join(out))


@main.command()
@click.argument("parts", nargs=-1, required=True, type=click.Path())
@click.option("--cs", type=float, default=None, help="Override detector.cs_threshold.")
@click.option("--labels-dir", type=click.Path(), default=None, help="External detections directory (detector.mode=external).")
@click.option("--labels-format", type=click.Choice(["yolo_text", "voc_xml"]), default="yolo_text", show_default=True)
@click.pass_context
def detect(ctx, parts, cs, labels_dir, labels_format):
    """Locate event objects in filtered parts; writes YOLO detection files."""
    cfg = ctx.obj["cfg"]
    if cs is not None:
        cfg = replace(cfg, detector=replace(cfg.detector, cs_threshold=cs))
    paths = stages.stage_detect(_normalize_stems(parts), cfg, labels_dir, labels_format)
    _emit(ctx, {"detections": paths}, "\n".join(paths))


@main.command("map")
@click.argument("parts", nargs=-1, required=True, type=click.Path())
@click.option("--output", type=click.Path(), required=True, help="Results JSON path.")
@click.pass_context
def map_cmd(ctx, parts, output):
    """Back-project detection files to merged event intervals."""
    intervals = stages.stage_map(_normalize_stems(parts), output, ctx.obj["cfg"])
    _emit(
        ctx,
        {"results": str(output), "intervals": len(intervals)},
        f"{len(intervals)} event interval(s) -> {output}",
    )


@main.command("eval")
@click.option("--results", "results_path", type=click.Path(), required=True)
@click.option("--truth", "truth_path", type=click.Path(), required=True)
@click.option("--outdir", type=click.Path(), required=True)
@click.pass_context
def eval_cmd(ctx, results_path, truth_path, outdir):
    """Score results against ground truth; writes report + figures."""
    report = stages.stage_eval(results_path, truth_path, ctx.obj["cfg"])
    paths = write_report(report, outdir)
    payload = report_to_dict(report)
    payload["paths"] = paths
    _emit(ctx, payload, format_summary(report))


@main.command()
@click.option("--input", "inputs", type=click.Path(), multiple=True, required=True, help="Recording CSV (repeatable).")
@click.option("--outdir", type=click.Path(), required=True)
@click.option("--truth", "truth_path", type=click.Path(), default=None)
@click.option("--time-column", default="time", show_default=True)
@click.option("--value-column", default="value", show_default=True)
@click.option("--delimiter", default=",", show_default=True)
@click.option("--labels-dir", type=click.Path(), default=None)
@click.option("--labels-format", type=click.Choice(["yolo_text", "voc_xml"]), default="yolo_text", show_default=True)
@click.option("--jobs", type=int, default=1, show_default=True)
@click.option("--overlay", is_flag=True, help="Render per-recording overlay figures.")
@click.pass_context
def pipeline(ctx, inputs, outdir, truth_path, time_column, value_column, delimiter, labels_dir, labels_format, jobs, overlay):
    """Fused transform -> filter -> detect -> map (+ eval with --truth)."""
    cfg = ctx.obj["cfg"]
    outdir = Path(outdir)
    outdir.mkdir(parents=True, exist_ok=True)

    def run_one(input_csv):
        return stages.run_pipeline(
            input_csv, outdir, cfg,
            time_column=time_column, value_column=value_column, delimiter=delimiter,
            external_dir=labels_dir, external_format=labels_format,
        )[0]

    with ThreadPoolExecutor(max_workers=max(1, jobs)) as pool:
        per_input = list(pool.map(run_one, inputs))
    intervals = sorted(
        (iv for ivs in per_input for iv in ivs),
        key=lambda iv: (iv.source_id, iv.start),
    )
    from .mapback import save_intervals

    combined = outdir / "results.json"
    save_intervals(intervals, combined)
    payload = {"results": str(combined), "intervals": len(intervals)}
    text = f"{len(intervals)} event interval(s) -> {combined}"

    if overlay:
        figdir = outdir / "figures"
        figdir.mkdir(exist_ok=True)
        truth_by_source = {}
        if truth_path:
            truth_by_source = {t.source_id: t.intervals for t in load_ground_truth(truth_path)}
        for input_csv in inputs:
            source = Path(input_csv).stem
            ts = load_csv(input_csv, time_column, value_column, delimiter, channel_name=source)
            ivs = [iv for iv in intervals if iv.source_id == source]
            plot_overlay(ts, ivs, truth_by_source.get(source), figdir / f"{source}.png", title=source)
        payload["figures"] = str(figdir)

    if truth_path:
        report = stages.stage_eval(intervals, truth_path, cfg)
        paths = write_report(report, outdir / "report")
        payload["report"] = report_to_dict(report)
        payload["report"]["paths"] = paths
        text += "\n" + format_summary(report)
    _emit(ctx, payload, text)


@main.command("export-labels")
@click.option("--truth", "truth_path", type=click.Path(), required=True)
@click.option("--mapping", "mapping_paths", type=click.Path(), multiple=True, required=True, help="Part mapping sidecar (repeatable).")
@click.option("--manifest", "manifest_path", type=click.Path(), default=None, help="Synth manifest for tight frequency extents.")
@click.option("--format", "label_format", type=click.Choice(["yolo", "voc"]), default="yolo", show_default=True)
@click.option("--outdir", type=click.Path(), required=True)
@click.pass_context
def export_labels(ctx, truth_path, mapping_paths, manifest_path, label_format, outdir):
    """Write training labels for ground-truth events on rendered parts."""
    outdir = Path(outdir)
    outdir.mkdir(parents=True, exist_ok=True)
    truths = {t.source_id: t for t in load_ground_truth(truth_path)}
    carrier_bands = {}
    if manifest_path:
        for spec in load_manifest(manifest_path):
            factor = 2.0 ** (2.0 / 12.0)
            carrier_bands[spec.source_id] = [
                (ev.start, ev.end, ev.carrier_freq / factor, ev.carrier_freq * factor)
                for ev in spec.events
            ]
    written = []
    for mp in mapping_paths:
        mapping = load_mapping(mp)
        truth = truths.get(mapping.source_id)
        if truth is None:
            continue
        part_t0 = mapping.time_origin
        part_t1 = mapping.time_origin + mapping.image_width / mapping.px_per_second
        boxes = []
        events = carrier_bands.get(
            mapping.source_id,
            [(a, b, None, None) for a, b in truth.intervals],
        )
        for t0, t1, f_lo, f_hi in events:
            lo, hi = max(t0, part_t0), min(t1, part_t1)
            if hi <= lo:
                continue
            x0, x1 = time_to_px(mapping, lo), time_to_px(mapping, hi)
            if f_lo is None:
                y0, y1 = 0.0, float(mapping.image_height)
            else:
                y0 = frequency_to_px(mapping, min(f_hi, mapping.f_max))
                y1 = frequency_to_px(mapping, max(f_lo, mapping.f_min))
            boxes.append(LabeledBox((x0, y0, x1, y1), image_ref=mapping.source_id))
        stem = Path(str(mp)).name.replace(".mapping.json", "")
        if label_format == "yolo":
            out = outdir / f"{stem}.txt"
            out.write_text(export_yolo_labels(boxes, mapping), encoding="utf-8")
        else:
            out = outdir / f"{stem}.xml"
            write_voc_xml(boxes, mapping, out, filename=f"{stem}.png")
        written.append(str(out))
    _emit(ctx, {"labels": written}, "\n".join(written))


@main.command()
@click.option("--ids-from", "ids_path", type=click.Path(), required=True, help="Manifest/ground-truth JSON or plain id list.")
@click.option("--fractions", nargs=3, type=float, default=(0.55, 0.15, 0.30), show_default=True)
@click.option("--seed", type=int, default=0, show_default=True)
@click.option("--output", type=click.Path(), default=None)
@click.pass_context
def split(ctx, ids_path, fractions, seed, output):
    """Deterministically partition recording ids into train/val/inference."""
    text = Path(ids_path).read_text(encoding="utf-8")
    try:
        payload = json.loads(text)
        ids = [d["source_id"] for d in payload]
    except (json.JSONDecodeError, TypeError, KeyError):
        ids = [line.strip() for line in text.splitlines() if line.strip()]
    result = dataset_split(ids, tuple(fractions), seed)
    if output:
        with open(output, "w", encoding="utf-8") as fh:
            json.dump(result, fh, indent=2)
            fh.write("\n")
    sizes = {k: len(v) for k, v in result.items()}
    _emit(ctx, {"sizes": sizes, "split": result}, json.dumps(sizes))


@main.command("train-config")
@click.option("--outdir", type=click.Path(), required=True)
@click.option("--epochs", type=int, default=None)
@click.option("--batch-size", type=int, default=None)
@click.option("--momentum", type=float, default=None)
@click.option("--weight-decay", type=float, default=None)
@click.option("--initial-lr", type=float, default=None)
@click.option("--optimizer", default=None)
@click.option("--train-dir", default=None)
@click.option("--val-dir", default=None)
@click.option("--inference-dir", default=None)
@click.pass_context
def train_config(ctx, outdir, epochs, batch_size, momentum, weight_decay, initial_lr, optimizer, train_dir, val_dir, inference_dir):
    """Emit the trainer-agnostic hyperparameter file for an external detector."""
    overrides = {
        k: v
        for k, v in {
            "epochs": epochs,
            "batch_size": batch_size,
            "momentum": momentum,
            "weight_decay": weight_decay,
            "initial_lr": initial_lr,
            "optimizer": optimizer,
        }.items()
        if v is not None
    }
    dataset_paths = None
    if train_dir or val_dir or inference_dir:
        dataset_paths = {
            "train": train_dir or "dataset/train",
            "val": val_dir or "dataset/val",
            "inference": inference_dir or "dataset/inference",
        }
    out = export_training_config(outdir, dataset_paths, **overrides)
    _emit(ctx, {"config": str(out)}, str(out))


@main.command()
@click.option("--manifest", "manifest_path", type=click.Path(), required=True)
@click.option("--data-dir", type=click.Path(), required=True, help="Directory holding <source_id>.csv recordings.")
@click.option("--coverage", type=float, default=0.99, show_default=True)
@click.option("--margin", type=float, default=0.10, show_default=True)
@click.option("--limit", type=int, default=30, show_default=True, help="Max event-bearing tests to transform.")
@click.option("--output", type=click.Path(), default=None, help="Write a config fragment with the band.")
@click.pass_context
def calibrate(ctx, manifest_path, data_dir, coverage, margin, limit, output):
    """Choose the filter band from labeled event regions of known tests."""
    from .synth import calibration_regions

    cfg = ctx.obj["cfg"]
    grid = build_scale_grid(cfg.cwt.f_min, cfg.cwt.f_max, cfg.cwt.voices, cfg.cwt.omega0)
    specs = [s for s in load_manifest(manifest_path) if s.events][: max(1, limit)]
    labeled = []
    for spec in specs:
        ts = load_csv(Path(data_dir) / f"{spec.source_id}.csv")
        labeled.append((cwt_fft(ts, grid), calibration_regions(spec)))
    band = calibrate_band(labeled, coverage, margin)
    fragment = {"filter": {"c1": band.c1, "c2": band.c2}}
    if output:
        with open(output, "w", encoding="utf-8") as fh:
            json.dump(fragment, fh, indent=2)
            fh.write("\n")
    _emit(ctx, fragment, f"c1={band.c1!r} c2={band.c2!r}")


if __name__ == "__main__":
    main()
