"""Synthetic ECG/PPG sessions following the rest/activity recording protocol.

A session alternates ``rest_duration`` seconds of clean signal with
``activity_duration`` seconds in which one artifact class is injected:

    1  motion          low-frequency baseline drift (random walk, < 1 Hz)
    2  EMG             additive band-limited noise (default 30-450 Hz)
    3  sensor failure  flatline at the last value, or saturation at a rail

Every stage is a pure function of its inputs and seed.
"""
from __future__ import annotations

import json
from dataclasses import asdict, dataclass, field, replace

import numpy as np
from scipy import signal

from .ingest import SignalRecord

MOTION, EMG, SENSOR_FAILURE = 1, 2, 3
DEFAULT_AMPLITUDE = {MOTION: 2.0, EMG: 1.0, SENSOR_FAILURE: 1.0}

BEAT_JITTER = 0.03
MOTION_CUTOFF_HZ = 1.0

# (offset from R peak [s], amplitude, width [s]) at 60 bpm; P and T offsets
# scale with sqrt(RR)
ECG_WAVES = (
    (-0.20, 0.15, 0.025),  # P
    (-0.035, -0.15, 0.010),  # Q
    (0.0, 1.00, 0.012),  # R
    (0.035, -0.25, 0.010),  # S
    (0.30, 0.30, 0.060),  # T
)


@dataclass(frozen=True)
class NoiseSpec:
    artifact_class: int
    amplitude_ratio: float | None = None
    band: tuple[float, float] = (30.0, 450.0)
    failure_mode: str = "flatline"
    rail: float | None = None

    def __post_init__(self):
        if self.artifact_class not in (MOTION, EMG, SENSOR_FAILURE):
            raise ValueError(f"artifact_class must be 1, 2 or 3, got {self.artifact_class}")
        if self.amplitude_ratio is None:
            object.__setattr__(self, "amplitude_ratio", DEFAULT_AMPLITUDE[self.artifact_class])
        if self.amplitude_ratio < 0:
            raise ValueError("amplitude_ratio must be >= 0")
        lo, hi = self.band
        if self.artifact_class == EMG and not (30.0 <= lo < hi):
            raise ValueError(f"EMG band must satisfy 30 <= low < high, got {self.band}")
        if self.failure_mode not in ("flatline", "saturation"):
            raise ValueError(f"unknown failure_mode {self.failure_mode!r}")


@dataclass
class ProtocolConfig:
    """Session schedule. Field names double as the JSON keys."""

    total_duration: float = 900.0
    rest_duration: float = 120.0
    activity_duration: float = 60.0
    activity_sequence: list[int] = field(default_factory=lambda: [1, 2, 3, 1, 2])
    sampling_rate: float = 1000.0
    heart_rate: float = 72.0
    seed: int = 0
    motion_amplitude: float = DEFAULT_AMPLITUDE[MOTION]
    emg_amplitude: float = DEFAULT_AMPLITUDE[EMG]
    failure_mode: str = "flatline"

    def __post_init__(self):
        self.activity_sequence = [int(c) for c in self.activity_sequence]
        if self.sampling_rate <= 0:
            raise ValueError("sampling_rate must be positive")
        if not 30 <= self.heart_rate <= 220:
            raise ValueError("heart_rate must lie in [30, 220]")
        if self.rest_duration < 0 or self.activity_duration <= 0:
            raise ValueError("rest_duration must be >= 0 and activity_duration > 0")
        cycle = self.rest_duration + self.activity_duration
        slots = self.total_duration / cycle
        if self.total_duration <= 0 or abs(slots - round(slots)) > 1e-9:
            raise ValueError("total_duration must be a positive multiple of rest + activity")
        if len(self.activity_sequence) != self.n_slots:
            raise ValueError(f"activity_sequence needs {self.n_slots} entries, "
                             f"got {len(self.activity_sequence)}")
        if any(c not in (MOTION, EMG, SENSOR_FAILURE) for c in self.activity_sequence):
            raise ValueError("activity_sequence entries must be 1, 2 or 3")

    @property
    def n_slots(self) -> int:
        return int(round(self.total_duration / (self.rest_duration + self.activity_duration)))

    def activity_slots(self) -> list[tuple[float, float, int]]:
        """(start_s, end_s, artifact_class) for every activity slot."""
        cycle = self.rest_duration + self.activity_duration
        return [(i * cycle + self.rest_duration, (i + 1) * cycle, cls)
                for i, cls in enumerate(self.activity_sequence)]

    def noise_spec(self, artifact_class: int) -> NoiseSpec:
        if artifact_class == MOTION:
            return NoiseSpec(MOTION, self.motion_amplitude)
        if artifact_class == EMG:
            return NoiseSpec(EMG, self.emg_amplitude, band=(30.0, min(450.0, 0.45 * self.sampling_rate)))
        return NoiseSpec(SENSOR_FAILURE, failure_mode=self.failure_mode)

    def to_json(self) -> str:
        return json.dumps(asdict(self), indent=2, sort_keys=True)

    @classmethod
    def from_json(cls, text: str) -> "ProtocolConfig":
        return cls(**json.loads(text))


def _check_positive(**kwargs):
    for name, value in kwargs.items():
        if not value > 0:
            raise ValueError(f"{name} must be positive, got {value}")


def _beat_times(duration, heart_rate, rng):
    rr = 60.0 / heart_rate
    n = int(np.ceil(duration / (rr * (1 - BEAT_JITTER)))) + 2
    intervals = rr * (1 + rng.uniform(-BEAT_JITTER, BEAT_JITTER, size=n))
    start = rng.uniform(0.1, 0.9) * rr
    return start + np.concatenate(([0.0], np.cumsum(intervals)))


def _add_gaussians(out, fs, centers, amplitude, width):
    half = int(np.ceil(5 * width * fs))
    offsets = np.arange(-half, half + 1)
    for c in centers:
        idx = int(round(c * fs)) + offsets
        keep = (idx >= 0) & (idx < out.size)
        t = idx[keep] / fs - c
        out[idx[keep]] += amplitude * np.exp(-0.5 * (t / width) ** 2)


def generate_clean_ecg(duration: float, fs: float = 1000.0, heart_rate: float = 72.0,
                       seed: int = 0, noise_level: float = 0.01,
                       source_id: str = "synthetic-ecg") -> SignalRecord:
    """Quasi-periodic PQRST train built from five Gaussians per beat."""
    _check_positive(duration=duration, fs=fs, heart_rate=heart_rate)
    rng = np.random.default_rng(seed)
    n = int(round(duration * fs))
    out = np.zeros(n)
    beats = _beat_times(duration, heart_rate, rng)
    stretch = np.sqrt(60.0 / heart_rate)
    for offset, amplitude, width in ECG_WAVES:
        if abs(offset) > 0.1:
            offset *= stretch
        _add_gaussians(out, fs, beats + offset, amplitude, width)
    out += noise_level * rng.standard_normal(n)
    return SignalRecord(out, fs, np.zeros(n, dtype=np.int64), "ecg", source_id)


def generate_clean_ppg(duration: float, fs: float = 1000.0, heart_rate: float = 72.0,
                       seed: int = 0, noise_level: float = 0.005,
                       source_id: str = "synthetic-ppg") -> SignalRecord:
    """Pulse train of asymmetric raised-cosine beats with a dicrotic bump."""
    _check_positive(duration=duration, fs=fs, heart_rate=heart_rate)
    rng = np.random.default_rng(seed)
    n = int(round(duration * fs))
    out = np.zeros(n)
    beats = _beat_times(duration, heart_rate, rng)
    t = np.arange(n) / fs
    # phase within the current beat, in [0, 1)
    k = np.clip(np.searchsorted(beats, t, side="right") - 1, 0, beats.size - 2)
    before = t < beats[0]
    period = np.where(before, beats[1] - beats[0], beats[k + 1] - beats[k])
    start = np.where(before, beats[0] - period, beats[k])
    phase = (t - start) / period
    rise = 0.3
    up = 0.5 * (1 - np.cos(np.pi * phase / rise))
    down = 0.5 * (1 + np.cos(np.pi * (phase - rise) / (1 - rise)))
    out = np.where(phase < rise, up, down)
    out += 0.25 * np.exp(-0.5 * ((phase - 0.6) / 0.06) ** 2)
    out += noise_level * rng.standard_normal(n)
    return SignalRecord(out, fs, np.zeros(n, dtype=np.int64), "ppg", source_id)


def _span_indices(record, span):
    start_s, end_s = span
    start = int(round(start_s * record.fs))
    end = int(round(end_s * record.fs))
    if not (0 <= start < end <= len(record)):
        raise IndexError(f"span [{start_s}, {end_s}) s lies outside the "
                         f"{record.duration:g} s record")
    return start, end


def _scaled(noise, target_rms):
    rms = np.sqrt(np.mean(noise ** 2))
    return noise * (target_rms / rms) if rms > 0 else noise


def inject_artifact(record: SignalRecord, span, spec: NoiseSpec, seed: int = 0) -> SignalRecord:
    """Return a copy of ``record`` with one artifact written into ``span`` (seconds).

    The artifact scale is ``spec.amplitude_ratio`` times the standard deviation
    of the span before injection. Refuses spans that already carry a label.
    """
    start, end = _span_indices(record, span)
    if np.any(record.labels[start:end] != 0):
        raise ValueError(f"span [{span[0]}, {span[1]}) overlaps an existing artifact")
    rng = np.random.default_rng(seed)
    samples = record.samples.copy()
    labels = record.labels.copy()
    segment = samples[start:end]
    n = end - start
    clean_rms = float(np.std(segment))
    fs = record.fs

    if spec.artifact_class == MOTION:
        walk = np.cumsum(rng.standard_normal(n))
        sos = signal.butter(2, MOTION_CUTOFF_HZ, btype="lowpass", fs=fs, output="sos")
        drift = signal.sosfiltfilt(sos, walk)
        drift -= drift.mean()
        segment += _scaled(drift, spec.amplitude_ratio * clean_rms)
    elif spec.artifact_class == EMG:
        lo, hi = spec.band
        if hi < fs / 2:
            sos = signal.butter(4, [lo, hi], btype="bandpass", fs=fs, output="sos")
        else:
            sos = signal.butter(4, lo, btype="highpass", fs=fs, output="sos")
        burst = signal.sosfiltfilt(sos, rng.standard_normal(n))
        segment += _scaled(burst, spec.amplitude_ratio * clean_rms)
    elif spec.failure_mode == "flatline":
        segment[:] = samples[start - 1] if start > 0 else segment[0]
    else:
        rail = spec.rail
        if rail is None:
            lo, hi = float(np.min(record.samples)), float(np.max(record.samples))
            rail = hi + 0.5 * (hi - lo)
        segment[:] = rail

    samples[start:end] = segment
    labels[start:end] = spec.artifact_class
    return replace(record, samples=samples, labels=labels)


def generate_protocol_recording(config: ProtocolConfig, modality: str = "ecg") -> SignalRecord:
    """Clean base signal with one artifact per activity slot."""
    make = {"ecg": generate_clean_ecg, "ppg": generate_clean_ppg}[modality]
    seeds = np.random.SeedSequence(config.seed).generate_state(config.n_slots + 1)
    record = make(config.total_duration, config.sampling_rate, config.heart_rate,
                  seed=int(seeds[0]), source_id=f"synth-{modality}-seed{config.seed}")
    for (start, end, cls), slot_seed in zip(config.activity_slots(), seeds[1:]):
        record = inject_artifact(record, (start, end), config.noise_spec(cls), seed=int(slot_seed))
    return record


def slot_manifest(config: ProtocolConfig) -> dict:
    """Schedule description written next to synthesized CSVs."""
    cycle = config.rest_duration + config.activity_duration
    slots = []
    for i, (start, end, cls) in enumerate(config.activity_slots()):
        slots.append({"kind": "rest", "start_s": i * cycle, "end_s": start, "label": 0})
        slots.append({"kind": "activity", "start_s": start, "end_s": end, "label": cls})
    return {"config": asdict(config), "slots": slots}
