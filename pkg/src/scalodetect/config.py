"""Pipeline configuration: defaults, JSON loading, strict validation.

Every knob the stages consume lives here. Unknown keys are rejected with the
dotted field path so a typo cannot silently fall back to a default, and the
same path appears in the CLI's machine-readable error output.
"""

from __future__ import annotations

import json
from dataclasses import asdict, dataclass, field, replace

from .errors import ConfigError

#: Confidence thresholds swept in the standard benchmark report.
SWEEP_THRESHOLDS = (0.40, 0.60, 0.75)


@dataclass(frozen=True)
class CwtConfig:
    f_min: float = 0.0272
    f_max: float = 6.951
    voices: int = 12
    omega0: float = 6.0


@dataclass(frozen=True)
class MappingConfig:
    px_per_second: float = 102.4
    height: int = 512


@dataclass(frozen=True)
class FilterConfig:
    # No default band ships: calibrate or configure explicitly.
    c1: float | None = None
    c2: float | None = None


@dataclass(frozen=True)
class DetectorConfig:
    mode: str = "builtin"
    cs_threshold: float = 0.40
    nms_iou: float = 0.5
    min_area: int = 64
    # Optional [low_hz, high_hz] gate; events entirely outside it are dropped.
    freq_gate: tuple[float, float] | None = None


@dataclass(frozen=True)
class EvalConfig:
    overlap_threshold: float = 0.3


@dataclass(frozen=True)
class SegmentConfig:
    max_s: float = 40.0


@dataclass(frozen=True)
class IoConfig:
    output_dir: str = "."


@dataclass(frozen=True)
class PipelineConfig:
    cwt: CwtConfig = field(default_factory=CwtConfig)
    mapping: MappingConfig = field(default_factory=MappingConfig)
    filter: FilterConfig = field(default_factory=FilterConfig)
    detector: DetectorConfig = field(default_factory=DetectorConfig)
    eval: EvalConfig = field(default_factory=EvalConfig)
    segment: SegmentConfig = field(default_factory=SegmentConfig)
    io: IoConfig = field(default_factory=IoConfig)

    def to_dict(self) -> dict:
        return asdict(self)

    def require_band(self):
        if self.filter.c1 is None or self.filter.c2 is None:
            raise ConfigError("filter.c1", "no filter band configured; run calibrate or set filter.c1/c2")


_SECTIONS = {
    "cwt": CwtConfig,
    "mapping": MappingConfig,
    "filter": FilterConfig,
    "detector": DetectorConfig,
    "eval": EvalConfig,
    "segment": SegmentConfig,
    "io": IoConfig,
}


def _check_number(path: str, value, lo=None, hi=None, lo_open=False, integer=False):
    if isinstance(value, bool) or not isinstance(value, (int, float)):
        raise ConfigError(path, f"expected a number, got {value!r}")
    if integer and int(value) != value:
        raise ConfigError(path, f"expected an integer, got {value!r}")
    if lo is not None and (value <= lo if lo_open else value < lo):
        raise ConfigError(path, f"must be {'>' if lo_open else '>='} {lo}, got {value}")
    if hi is not None and value > hi:
        raise ConfigError(path, f"must be <= {hi}, got {value}")


def validate_config(cfg: PipelineConfig) -> PipelineConfig:
    """Check all cross-field constraints; returns the config for chaining."""
    _check_number("cwt.f_min", cfg.cwt.f_min, lo=0, lo_open=True)
    _check_number("cwt.f_max", cfg.cwt.f_max, lo=0, lo_open=True)
    if not cfg.cwt.f_min < cfg.cwt.f_max:
        raise ConfigError("cwt.f_max", f"must exceed cwt.f_min, got {cfg.cwt.f_max}")
    _check_number("cwt.voices", cfg.cwt.voices, lo=1, integer=True)
    _check_number("cwt.omega0", cfg.cwt.omega0, lo=0, lo_open=True)
    _check_number("mapping.px_per_second", cfg.mapping.px_per_second, lo=0, lo_open=True)
    _check_number("mapping.height", cfg.mapping.height, lo=1, integer=True)
    if cfg.filter.c1 is not None or cfg.filter.c2 is not None:
        if cfg.filter.c1 is None or cfg.filter.c2 is None:
            raise ConfigError("filter.c2", "c1 and c2 must be set together")
        _check_number("filter.c1", cfg.filter.c1, lo=0)
        _check_number("filter.c2", cfg.filter.c2, lo=0, lo_open=True)
        if not cfg.filter.c1 < cfg.filter.c2:
            raise ConfigError("filter.c2", f"must exceed filter.c1, got {cfg.filter.c2}")
    if cfg.detector.mode not in ("builtin", "external"):
        raise ConfigError("detector.mode", f"must be 'builtin' or 'external', got {cfg.detector.mode!r}")
    _check_number("detector.cs_threshold", cfg.detector.cs_threshold, lo=0, hi=1)
    _check_number("detector.nms_iou", cfg.detector.nms_iou, lo=0, hi=1)
    _check_number("detector.min_area", cfg.detector.min_area, lo=1, integer=True)
    if cfg.detector.freq_gate is not None:
        gate = cfg.detector.freq_gate
        if len(gate) != 2:
            raise ConfigError("detector.freq_gate", f"expected [low_hz, high_hz], got {gate!r}")
        _check_number("detector.freq_gate", gate[0], lo=0)
        _check_number("detector.freq_gate", gate[1], lo=0, lo_open=True)
        if not gate[0] < gate[1]:
            raise ConfigError("detector.freq_gate", f"low must be below high, got {gate!r}")
    _check_number("eval.overlap_threshold", cfg.eval.overlap_threshold, lo=0, hi=1, lo_open=True)
    _check_number("segment.max_s", cfg.segment.max_s, lo=0, lo_open=True)
    if not isinstance(cfg.io.output_dir, str):
        raise ConfigError("io.output_dir", "expected a string path")
    return cfg


def _merge_section(section_name: str, current, updates: dict):
    cls = _SECTIONS[section_name]
    known = set(cls.__dataclass_fields__)
    for key, value in updates.items():
        if key not in known:
            raise ConfigError(f"{section_name}.{key}", "unknown key")
        if key == "freq_gate" and value is not None:
            if not isinstance(value, (list, tuple)):
                raise ConfigError(f"{section_name}.{key}", f"expected a pair, got {value!r}")
            value = tuple(value)
        current = replace(current, **{key: value})
    return current


def config_from_dict(data: dict, base: PipelineConfig | None = None) -> PipelineConfig:
    """Build a config from nested dicts, rejecting unknown keys."""
    cfg = base or PipelineConfig()
    if not isinstance(data, dict):
        raise ConfigError("", f"expected a JSON object, got {type(data).__name__}")
    for section, updates in data.items():
        if section not in _SECTIONS:
            raise ConfigError(section, "unknown section")
        if not isinstance(updates, dict):
            raise ConfigError(section, f"expected an object, got {updates!r}")
        cfg = replace(cfg, **{section: _merge_section(section, getattr(cfg, section), updates)})
    return validate_config(cfg)


def load_config(path=None, overrides: dict | None = None) -> PipelineConfig:
    """Load a JSON config file (optional) and apply dotted-path overrides.

    Overrides are {"section.key": value} pairs, applied after the file.
    """
    cfg = PipelineConfig()
    if path is not None:
        with open(path, encoding="utf-8") as fh:
            try:
                data = json.load(fh)
            except json.JSONDecodeError as exc:
                raise ConfigError("", f"{path}: invalid JSON ({exc})") from None
        cfg = config_from_dict(data, cfg)
    if overrides:
        nested: dict[str, dict] = {}
        for dotted, value in overrides.items():
            if "." not in dotted:
                raise ConfigError(dotted, "override keys use section.key form")
            section, key = dotted.split(".", 1)
            nested.setdefault(section, {})[key] = value
        cfg = config_from_dict(nested, cfg)
    return validate_config(cfg)


def save_config(cfg: PipelineConfig, path):
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(cfg.to_dict(), fh, indent=2, sort_keys=True)
        fh.write("\n")


def corpus_benchmark_config(c1: float, c2: float) -> PipelineConfig:
    """The configuration used for the synthetic benchmark corpus.

    Standard analysis defaults plus the calibrated band and a low-frequency
    gate that keeps slow background drift from posing as events.
    """
    return validate_config(
        PipelineConfig(
            filter=FilterConfig(c1=c1, c2=c2),
            detector=DetectorConfig(freq_gate=(2.0, 6.951)),
        )
    )
