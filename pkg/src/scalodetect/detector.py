"""Event-object location in filtered scalograms, plus detector interchange.

The built-in detector finds 8-connected components of nonzero cells in a
band-filtered grid and scores them with a fill-ratio/intensity proxy. Any
external detector can replace it through the file interchange: YOLO text
lines or LabelImg-style VOC XML, both round-tripping bit-exactly enough
(half a pixel, exact confidences) to keep evaluation detector-agnostic.
"""

from __future__ import annotations

import json
import xml.etree.ElementTree as ET
from dataclasses import dataclass
from pathlib import Path

import numpy as np
from scipy import ndimage

from .errors import ArgumentError, DataError, ParseError, StateError
from .scalogram import PixelMapping, mapping_for_grid
from .wavelet import ScalogramGrid

#: Single-class table; index is the class id used in label files.
DEFAULT_CLASSES = ("ldw_event",)

_EIGHT_CONNECTED = np.ones((3, 3), dtype=int)


@dataclass(frozen=True)
class Detection:
    """Axis-aligned pixel-space box with a confidence score."""

    bbox: tuple[float, float, float, float]  # x_min, y_min, x_max, y_max
    confidence: float
    class_id: int = 0
    source: str = "builtin"

    def __post_init__(self):
        x0, y0, x1, y1 = self.bbox
        if not (x0 < x1 and y0 < y1):
            raise ArgumentError(f"degenerate box {self.bbox}")
        if not (0.0 <= self.confidence <= 1.0):
            raise ArgumentError(f"confidence {self.confidence} outside [0, 1]")

    @property
    def area(self) -> float:
        x0, y0, x1, y1 = self.bbox
        return (x1 - x0) * (y1 - y0)


@dataclass(frozen=True)
class LabeledBox:
    """Ground-truth annotation box for one image."""

    bbox: tuple[float, float, float, float]
    class_name: str = DEFAULT_CLASSES[0]
    image_ref: str = ""

    def __post_init__(self):
        x0, y0, x1, y1 = self.bbox
        if not (x0 < x1 and y0 < y1):
            raise ArgumentError(f"degenerate box {self.bbox}")


def box_iou(a, b) -> float:
    """Intersection over union of two (x0, y0, x1, y1) boxes."""
    ix0, iy0 = max(a[0], b[0]), max(a[1], b[1])
    ix1, iy1 = min(a[2], b[2]), min(a[3], b[3])
    iw, ih = max(0.0, ix1 - ix0), max(0.0, iy1 - iy0)
    inter = iw * ih
    if inter == 0.0:
        return 0.0
    area_a = (a[2] - a[0]) * (a[3] - a[1])
    area_b = (b[2] - b[0]) * (b[3] - b[1])
    return inter / (area_a + area_b - inter)


def detect_blobs(
    sg: ScalogramGrid,
    mapping: PixelMapping | None = None,
    min_area_px: int = 64,
    cs_threshold: float = 0.0,
) -> list[Detection]:
    """Locate connected foreground regions of a band-filtered grid.

    Components are 8-connected sets of nonzero cells; each yields its tight
    bounding box in image pixels. Confidence is fill_ratio * (mean box
    magnitude / c2), clamped to [0, 1]. Components smaller than min_area_px
    cells, or scoring below cs_threshold, are dropped. Output is sorted by
    descending confidence (ties by x, then y).

    Raises:
        StateError: the grid has no attached filter band.
    """
    if sg.band is None:
        raise StateError("detect_blobs requires a band-filtered grid")
    if mapping is None:
        mapping = mapping_for_grid(sg)
    c2 = sg.band.c2
    mags = sg.magnitudes
    labels, _ = ndimage.label(mags > 0, structure=_EIGHT_CONNECTED)
    detections = []
    px_per_col = mapping.px_per_second / sg.sample_rate
    px_per_row = mapping.image_height / sg.n_rows
    for label_id, slices in enumerate(ndimage.find_objects(labels), start=1):
        if slices is None:
            continue
        sl_rows, sl_cols = slices
        cells = int(np.count_nonzero(labels[sl_rows, sl_cols] == label_id))
        if cells < min_area_px:
            continue
        region = mags[sl_rows, sl_cols]
        box_mean = float(region.mean())
        fill_ratio = cells / region.size
        confidence = min(1.0, max(0.0, fill_ratio * (box_mean / c2)))
        if confidence < cs_threshold:
            continue
        x0 = sl_cols.start * px_per_col
        x1 = min(sl_cols.stop * px_per_col, float(mapping.image_width))
        y0 = sl_rows.start * px_per_row
        y1 = min(sl_rows.stop * px_per_row, float(mapping.image_height))
        detections.append(Detection((x0, y0, x1, y1), confidence, 0, "builtin"))
    detections.sort(key=lambda d: (-d.confidence, d.bbox[0], d.bbox[1]))
    return detections


def nms(dets: list[Detection], iou_threshold: float = 0.5) -> list[Detection]:
    """Greedy non-maximum suppression.

    Repeatedly keeps the most confident remaining box and discards every box
    overlapping it with IoU strictly above the threshold. Confidence ties
    break toward smaller x_min, then smaller y_min.
    """
    remaining = sorted(dets, key=lambda d: (-d.confidence, d.bbox[0], d.bbox[1]))
    kept: list[Detection] = []
    while remaining:
        best = remaining.pop(0)
        kept.append(best)
        remaining = [d for d in remaining if box_iou(best.bbox, d.bbox) <= iou_threshold]
    return kept


# --- YOLO text interchange ----------------------------------------------------


def _check_in_image(bbox, mapping: PixelMapping, what: str):
    x0, y0, x1, y1 = bbox
    eps = 1e-6
    if x0 < -eps or y0 < -eps or x1 > mapping.image_width + eps or y1 > mapping.image_height + eps:
        raise ArgumentError(
            f"{what} {bbox} outside {mapping.image_width}x{mapping.image_height} image"
        )


def _yolo_geometry(bbox, mapping: PixelMapping) -> str:
    x0, y0, x1, y1 = bbox
    w, h = mapping.image_width, mapping.image_height
    cx, cy = (x0 + x1) / 2 / w, (y0 + y1) / 2 / h
    bw, bh = (x1 - x0) / w, (y1 - y0) / h
    return f"{cx:.6f} {cy:.6f} {bw:.6f} {bh:.6f}"


def export_yolo_labels(
    boxes: list[LabeledBox],
    mapping: PixelMapping,
    classes=DEFAULT_CLASSES,
) -> str:
    """Serialize annotation boxes as YOLO text: `class cx cy w h` per line.

    Geometry is normalized to [0, 1] by the image size, six decimal places.
    """
    lines = []
    for box in boxes:
        _check_in_image(box.bbox, mapping, "labeled box")
        try:
            class_id = classes.index(box.class_name)
        except ValueError:
            raise ArgumentError(f"unknown class name {box.class_name!r}") from None
        lines.append(f"{class_id} {_yolo_geometry(box.bbox, mapping)}\n")
    return "".join(lines)


def export_yolo_detections(dets: list[Detection], mapping: PixelMapping) -> str:
    """Serialize detections as YOLO text with a trailing confidence field.

    The confidence is written with full round-trip precision so importing
    reproduces it exactly.
    """
    lines = []
    for det in dets:
        _check_in_image(det.bbox, mapping, "detection")
        lines.append(
            f"{det.class_id} {_yolo_geometry(det.bbox, mapping)} {det.confidence!r}\n"
        )
    return "".join(lines)


def import_detections(path, format: str, mapping: PixelMapping) -> list[Detection]:
    """Read detections or annotations from a label file.

    YOLO text lines are `class cx cy w h [conf]`; a missing confidence means
    1.0. VOC XML (as LabelImg writes it) yields boxes with confidence 1.0.
    """
    if format == "yolo_text":
        return _import_yolo(path, mapping)
    if format == "voc_xml":
        return _import_voc(path, mapping)
    raise ArgumentError(f"unknown detection format {format!r}")


def _import_yolo(path, mapping: PixelMapping) -> list[Detection]:
    w, h = mapping.image_width, mapping.image_height
    detections = []
    with open(path, encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            if not line.strip():
                continue
            fields = line.split()
            if len(fields) not in (5, 6):
                raise ParseError(f"{path}:{lineno}: expected 5 or 6 fields, got {len(fields)}")
            try:
                class_id = int(fields[0])
                cx, cy, bw, bh = (float(v) for v in fields[1:5])
                conf = float(fields[5]) if len(fields) == 6 else 1.0
            except ValueError:
                raise ParseError(f"{path}:{lineno}: unparsable number") from None
            for name, val in (("cx", cx), ("cy", cy), ("w", bw), ("h", bh)):
                if not 0.0 <= val <= 1.0:
                    raise DataError(f"{path}:{lineno}: normalized {name}={val} outside [0, 1]")
            if not 0.0 <= conf <= 1.0:
                raise DataError(f"{path}:{lineno}: confidence {conf} outside [0, 1]")
            x0 = max(0.0, (cx - bw / 2) * w)
            x1 = min(float(w), (cx + bw / 2) * w)
            y0 = max(0.0, (cy - bh / 2) * h)
            y1 = min(float(h), (cy + bh / 2) * h)
            if not (x0 < x1 and y0 < y1):
                raise DataError(f"{path}:{lineno}: degenerate box")
            detections.append(Detection((x0, y0, x1, y1), conf, class_id, "external"))
    return detections


def _import_voc(path, mapping: PixelMapping) -> list[Detection]:
    try:
        root = ET.parse(path).getroot()
    except ET.ParseError as exc:
        raise ParseError(f"{path}: {exc}") from None
    detections = []
    for i, obj in enumerate(root.iter("object")):
        bndbox = obj.find("bndbox")
        if bndbox is None:
            raise ParseError(f"{path}: object[{i}] has no <bndbox>")
        coords = {}
        for tag in ("xmin", "ymin", "xmax", "ymax"):
            node = bndbox.find(tag)
            if node is None or node.text is None:
                raise ParseError(f"{path}: object[{i}]/bndbox missing <{tag}>")
            try:
                coords[tag] = float(node.text)
            except ValueError:
                raise ParseError(f"{path}: object[{i}]/bndbox/{tag}: unparsable") from None
        name = obj.findtext("name", DEFAULT_CLASSES[0])
        class_id = DEFAULT_CLASSES.index(name) if name in DEFAULT_CLASSES else 0
        bbox = (coords["xmin"], coords["ymin"], coords["xmax"], coords["ymax"])
        if not (bbox[0] < bbox[2] and bbox[1] < bbox[3]):
            raise DataError(f"{path}: object[{i}]: degenerate box {bbox}")
        _check_in_image(bbox, mapping, f"object[{i}]")
        detections.append(Detection(bbox, 1.0, class_id, "external"))
    return detections


def write_voc_xml(boxes: list[LabeledBox], mapping: PixelMapping, path, filename: str = ""):
    """Write annotations in the LabelImg VOC field set."""
    root = ET.Element("annotation")
    ET.SubElement(root, "filename").text = filename or Path(str(path)).stem + ".png"
    size = ET.SubElement(root, "size")
    ET.SubElement(size, "width").text = str(mapping.image_width)
    ET.SubElement(size, "height").text = str(mapping.image_height)
    ET.SubElement(size, "depth").text = "3"
    for box in boxes:
        _check_in_image(box.bbox, mapping, "labeled box")
        obj = ET.SubElement(root, "object")
        ET.SubElement(obj, "name").text = box.class_name
        bndbox = ET.SubElement(obj, "bndbox")
        ET.SubElement(bndbox, "xmin").text = repr(box.bbox[0])
        ET.SubElement(bndbox, "ymin").text = repr(box.bbox[1])
        ET.SubElement(bndbox, "xmax").text = repr(box.bbox[2])
        ET.SubElement(bndbox, "ymax").text = repr(box.bbox[3])
    ET.indent(root)
    ET.ElementTree(root).write(path, encoding="unicode")


# --- trainer handoff -----------------------------------------------------------

TRAINING_DEFAULTS = {
    "epochs": 150,
    "batch_size": 16,
    "optimizer": "sgd",
    "momentum": 0.937,
    "weight_decay": 0.0005,
    "initial_lr": 0.01,
}


def export_training_config(output_dir, dataset_paths=None, **overrides) -> Path:
    """Write the trainer-agnostic JSON config for an external detector.

    Keyword overrides replace individual hyperparameters; unknown keys are
    rejected so typos do not silently train with defaults.
    """
    unknown = set(overrides) - set(TRAINING_DEFAULTS)
    if unknown:
        raise ArgumentError(f"unknown training config keys: {sorted(unknown)}")
    config = dict(TRAINING_DEFAULTS)
    config.update(overrides)
    config["classes"] = list(DEFAULT_CLASSES)
    config["dataset"] = dataset_paths or {
        "train": "dataset/train",
        "val": "dataset/val",
        "inference": "dataset/inference",
    }
    out = Path(output_dir) / "training_config.json"
    out.parent.mkdir(parents=True, exist_ok=True)
    with open(out, "w", encoding="utf-8") as fh:
        json.dump(config, fh, indent=2, sort_keys=True)
        fh.write("\n")
    return out
