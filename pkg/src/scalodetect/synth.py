"""Synthetic vibration-test recordings with known ground truth.

Each generated test is slow background drift plus white noise plus zero or
more vibration bursts: a sinusoidal carrier under a trapezoid envelope whose
support defines the true event interval. Everything derives deterministically
from the spec's seed, and corpus generation seeds each test from (corpus
seed, test index), so parallel generation order can never change the output.

The corpus preset mirrors the population shape of the real dataset this
stands in for: 518 tests carrying 304 events of 0.64-1.10 s, with in-band
SNR far above the 6 dB observability floor.
"""

from __future__ import annotations

import json
import math
from dataclasses import asdict, dataclass

import numpy as np

from .bandfilter import LabeledRegion
from .errors import ArgumentError
from .metrics import GroundTruth
from .timeseries import TimeSeries

DEFAULT_SAMPLE_RATE = 100.0
DEFAULT_SPLIT_FRACTIONS = (0.55, 0.15, 0.30)

CORPUS_SIZE = 518
CORPUS_EVENTS = 304
CORPUS_SEED = 20318


@dataclass(frozen=True)
class EventSpec:
    """One vibration burst: carrier sinusoid under a trapezoid envelope."""

    start: float
    duration: float
    carrier_freq: float
    amplitude: float
    rise_s: float = 0.05
    fall_s: float = 0.05

    def __post_init__(self):
        if not self.duration > 0:
            raise ArgumentError(f"event duration must be > 0, got {self.duration}")
        if self.rise_s < 0 or self.fall_s < 0 or self.rise_s + self.fall_s > self.duration:
            raise ArgumentError("envelope ramps must be >= 0 and fit inside the event")
        if not self.carrier_freq > 0:
            raise ArgumentError(f"carrier_freq must be > 0, got {self.carrier_freq}")

    @property
    def end(self) -> float:
        return self.start + self.duration


@dataclass(frozen=True)
class SynthSpec:
    """Recipe for one deterministic synthetic test."""

    duration: float
    sample_rate: float = DEFAULT_SAMPLE_RATE
    noise_std: float = 0.0
    drift: tuple[tuple[float, float], ...] = ()  # (freq_hz, amplitude) pairs
    events: tuple[EventSpec, ...] = ()
    seed: int = 0
    source_id: str = ""

    def __post_init__(self):
        if not self.duration > 0:
            raise ArgumentError(f"duration must be > 0, got {self.duration}")
        if not self.sample_rate > 0:
            raise ArgumentError(f"sample_rate must be > 0, got {self.sample_rate}")
        if self.noise_std < 0:
            raise ArgumentError(f"noise_std must be >= 0, got {self.noise_std}")
        events = tuple(
            ev if isinstance(ev, EventSpec) else EventSpec(**ev) for ev in self.events
        )
        prev_end = -math.inf
        for ev in sorted(events, key=lambda e: e.start):
            if ev.start < 0 or ev.end > self.duration:
                raise ArgumentError(f"event ({ev.start}, {ev.end}) outside [0, {self.duration}]")
            if ev.start < prev_end:
                raise ArgumentError("events must not overlap")
            prev_end = ev.end
            if ev.carrier_freq >= self.sample_rate / 2:
                raise ArgumentError(
                    f"carrier {ev.carrier_freq} Hz at or above Nyquist ({self.sample_rate / 2})"
                )
        object.__setattr__(self, "events", events)
        object.__setattr__(
            self, "drift", tuple((float(f), float(a)) for f, a in self.drift)
        )

    def to_dict(self) -> dict:
        return asdict(self)

    @classmethod
    def from_dict(cls, d: dict) -> "SynthSpec":
        d = dict(d)
        d["events"] = tuple(EventSpec(**ev) for ev in d.get("events", ()))
        d["drift"] = tuple(tuple(pair) for pair in d.get("drift", ()))
        return cls(**d)


def _trapezoid(t: np.ndarray, ev: EventSpec) -> np.ndarray:
    env = np.zeros_like(t)
    inside = (t >= ev.start) & (t <= ev.end)
    env[inside] = 1.0
    if ev.rise_s > 0:
        ramp = (t - ev.start) / ev.rise_s
        rising = inside & (ramp < 1.0)
        env[rising] = ramp[rising]
    if ev.fall_s > 0:
        ramp = (ev.end - t) / ev.fall_s
        falling = inside & (ramp < 1.0)
        env[falling] = np.minimum(env[falling], ramp[falling])
    return env


def generate_test(spec: SynthSpec) -> tuple[TimeSeries, GroundTruth]:
    """Render a spec to samples plus its exact ground-truth intervals."""
    n = int(round(spec.duration * spec.sample_rate))
    if n < 1:
        raise ArgumentError("spec duration shorter than one sample")
    t = np.arange(n) / spec.sample_rate
    signal = np.zeros(n)
    for freq, amp in spec.drift:
        signal += amp * np.sin(2.0 * np.pi * freq * t)
    if spec.noise_std > 0:
        rng = np.random.default_rng(np.random.SeedSequence(spec.seed))
        signal += rng.normal(0.0, spec.noise_std, n)
    for ev in spec.events:
        signal += ev.amplitude * np.sin(2.0 * np.pi * ev.carrier_freq * t) * _trapezoid(t, ev)
    series = TimeSeries(0.0, spec.sample_rate, signal, spec.source_id or "synthetic")
    truth = GroundTruth(
        spec.source_id,
        tuple(sorted((ev.start, ev.end) for ev in spec.events)),
    )
    return series, truth


def band_snr_db(ev: EventSpec, spec: SynthSpec, f_min: float, f_max: float) -> float:
    """Event power over in-band white-noise power, in dB.

    White noise of std sigma at rate fs spreads sigma^2 over [0, fs/2]; only
    the slice inside the analysis band competes with the event carrier.
    """
    if spec.noise_std == 0:
        return math.inf
    in_band_noise = spec.noise_std**2 * (f_max - f_min) / (spec.sample_rate / 2.0)
    return 10.0 * math.log10((ev.amplitude**2 / 2.0) / in_band_noise)


def calibration_regions(spec: SynthSpec, voice_margin: float = 2.0) -> list[LabeledRegion]:
    """Time/frequency boxes around a spec's events, for band calibration.

    The frequency extent spans voice_margin twelfth-octaves either side of
    the carrier, which keeps the pooled magnitudes dominated by event core
    cells rather than faint surroundings.
    """
    factor = 2.0 ** (voice_margin / 12.0)
    return [
        LabeledRegion(ev.start, ev.end, ev.carrier_freq / factor, ev.carrier_freq * factor)
        for ev in spec.events
    ]


def dataset_split(
    ids: list,
    fractions: tuple[float, float, float] = DEFAULT_SPLIT_FRACTIONS,
    seed: int = 0,
) -> dict[str, list]:
    """Deterministically shuffle and partition ids into train/val/inference.

    Validation and inference sizes round to the nearest integer; the
    remainder goes to train, so the partition is exact.
    """
    if not ids:
        raise ArgumentError("cannot split an empty id list")
    if any(f < 0 for f in fractions) or abs(sum(fractions) - 1.0) > 1e-9:
        raise ArgumentError(f"fractions must be >= 0 and sum to 1, got {fractions}")
    n = len(ids)
    n_val = int(math.floor(n * fractions[1] + 0.5))
    n_inf = int(math.floor(n * fractions[2] + 0.5))
    n_train = n - n_val - n_inf
    if n_train < 0:
        raise ArgumentError(f"fractions {fractions} leave no room for a train split")
    order = np.random.default_rng(np.random.SeedSequence(seed)).permutation(n)
    shuffled = [ids[i] for i in order]
    return {
        "train": shuffled[:n_train],
        "val": shuffled[n_train : n_train + n_val],
        "inference": shuffled[n_train + n_val :],
    }


# --- corpus preset ------------------------------------------------------------

# Event amplitudes scale with sqrt(carrier) so the scalogram magnitude of
# every event lands in one narrow band: the transform's 1/sqrt(a) weighting
# would otherwise make low-carrier events systematically brighter.
_CARRIER_RANGE = (4.0, 6.0)
_AMPLITUDE_BASE = 1.5
_AMPLITUDE_REF_HZ = math.sqrt(_CARRIER_RANGE[0] * _CARRIER_RANGE[1])
_NOISE_STD = 0.20
_TEST_DURATION_RANGE = (30.0, 40.0)
_EVENT_DURATION_RANGE = (0.64, 1.10)
_EDGE_MARGIN_S = 2.0
_EVENT_GAP_S = 2.0


def _corpus_event(rng: np.random.Generator, start: float) -> EventSpec:
    carrier = rng.uniform(*_CARRIER_RANGE)
    amplitude = _AMPLITUDE_BASE * math.sqrt(carrier / _AMPLITUDE_REF_HZ) * rng.uniform(0.95, 1.1)
    return EventSpec(
        start=round(start, 2),
        duration=round(rng.uniform(*_EVENT_DURATION_RANGE), 2),
        carrier_freq=carrier,
        amplitude=amplitude,
    )


def corpus_preset(seed: int = CORPUS_SEED) -> list[SynthSpec]:
    """The 518-test benchmark corpus with 304 events in total.

    Event counts per test (zero, one, or two) are shuffled deterministically;
    every event's in-band SNR clears 6 dB by an order of magnitude. Each
    test's randomness is derived from (seed, test index), so any subset can
    be regenerated independently.
    """
    # 250 one-event and 27 two-event tests give 304 events over 518 tests.
    counts = [1] * 250 + [2] * 27 + [0] * (CORPUS_SIZE - 277)
    assert sum(counts) == CORPUS_EVENTS and len(counts) == CORPUS_SIZE
    master = np.random.default_rng(np.random.SeedSequence([seed, 0]))
    counts = [counts[i] for i in master.permutation(CORPUS_SIZE)]

    specs = []
    for idx, n_events in enumerate(counts):
        rng = np.random.default_rng(np.random.SeedSequence([seed, 1 + idx]))
        duration = round(rng.uniform(*_TEST_DURATION_RANGE), 1)
        events = []
        cursor = _EDGE_MARGIN_S
        for k in range(n_events):
            remaining = (n_events - 1 - k) * (_EVENT_DURATION_RANGE[1] + _EVENT_GAP_S)
            latest = duration - _EDGE_MARGIN_S - _EVENT_DURATION_RANGE[1] - remaining
            start = rng.uniform(cursor, max(cursor, latest))
            ev = _corpus_event(rng, start)
            events.append(ev)
            cursor = ev.end + _EVENT_GAP_S
        drift = tuple(
            (rng.uniform(0.02, 0.2), rng.uniform(0.02, 0.06)) for _ in range(2)
        )
        specs.append(
            SynthSpec(
                duration=duration,
                sample_rate=DEFAULT_SAMPLE_RATE,
                noise_std=_NOISE_STD,
                drift=drift,
                events=tuple(events),
                seed=seed * 100003 + idx,
                source_id=f"test_{idx:04d}",
            )
        )
    return specs


def save_manifest(specs: list[SynthSpec], path):
    with open(path, "w", encoding="utf-8") as fh:
        json.dump([s.to_dict() for s in specs], fh, indent=2)
        fh.write("\n")


def load_manifest(path) -> list[SynthSpec]:
    with open(path, encoding="utf-8") as fh:
        payload = json.load(fh)
    return [SynthSpec.from_dict(d) for d in payload]
