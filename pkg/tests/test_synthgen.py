import json

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from scipy.signal import find_peaks

from bioclust.features import extract_features
from bioclust.synthgen import (
    NoiseSpec,
    ProtocolConfig,
    generate_clean_ecg,
    generate_clean_ppg,
    generate_protocol_recording,
    inject_artifact,
    slot_manifest,
)


def count_r_peaks(x, fs):
    # tall peaks at least 250 ms apart
    peaks, _ = find_peaks(x, height=0.5 * x.max(), distance=int(0.25 * fs))
    return len(peaks)


def test_clean_ecg_length_and_labels():
    rec = generate_clean_ecg(900, 1000, 72, seed=1)
    assert len(rec) == 900_000
    assert not rec.labels.any()


def test_ecg_beat_count_matches_heart_rate():
    rec = generate_clean_ecg(10, 1000, 60, seed=5)
    peaks = count_r_peaks(rec.samples, 1000)
    assert 9 <= peaks <= 11


def test_ecg_is_deterministic():
    a = generate_clean_ecg(20, 500, 80, seed=9)
    b = generate_clean_ecg(20, 500, 80, seed=9)
    assert np.array_equal(a.samples, b.samples)
    c = generate_clean_ecg(20, 500, 80, seed=10)
    assert not np.array_equal(a.samples, c.samples)


@pytest.mark.parametrize("kwargs", [dict(duration=0), dict(fs=-1), dict(heart_rate=0)])
def test_clean_generators_reject_nonpositive(kwargs):
    base = dict(duration=5, fs=100, heart_rate=60)
    with pytest.raises(ValueError):
        generate_clean_ecg(**{**base, **kwargs})
    with pytest.raises(ValueError):
        generate_clean_ppg(**{**base, **kwargs})


def test_ppg_basic_shape():
    rec = generate_clean_ppg(60, 1000, 72, seed=2)
    assert len(rec) == 60_000
    assert not rec.labels.any()
    assert np.isfinite(rec.samples).all()
    assert rec.samples.var() > 0


def test_ppg_dominant_frequency_is_heart_rate():
    rec = generate_clean_ppg(60, 1000, 72, seed=4)
    x = rec.samples - rec.samples.mean()
    spec = np.abs(np.fft.rfft(x)) ** 2
    freqs = np.fft.rfftfreq(x.size, 1 / 1000)
    band = (freqs > 0.3) & (freqs < 10)
    peak = freqs[band][np.argmax(spec[band])]
    assert abs(peak - 1.2) < 0.06


def test_flatline_failure():
    rec = generate_clean_ecg(30, 1000, 70, seed=0)
    out = inject_artifact(rec, (10, 20), NoiseSpec(3, failure_mode="flatline"))
    span = out.samples[10_000:20_000]
    assert span.var() == 0
    assert (out.labels[10_000:20_000] == 3).all()
    assert span[0] == rec.samples[9_999]
    assert np.array_equal(out.samples[:10_000], rec.samples[:10_000])
    assert np.array_equal(out.samples[20_000:], rec.samples[20_000:])
    assert not out.labels[:10_000].any() and not out.labels[20_000:].any()


def test_saturation_failure_sits_on_rail():
    rec = generate_clean_ecg(30, 1000, 70, seed=0)
    out = inject_artifact(rec, (5, 8), NoiseSpec(3, failure_mode="saturation", rail=4.5))
    assert (out.samples[5000:8000] == 4.5).all()
    auto = inject_artifact(rec, (5, 8), NoiseSpec(3, failure_mode="saturation"))
    rail = auto.samples[5000]
    assert (auto.samples[5000:8000] == rail).all() and rail > rec.samples.max()


def test_emg_raises_highband_power():
    rec = generate_clean_ecg(60, 1000, 72, seed=8)
    out = inject_artifact(rec, (30, 50), NoiseSpec(2, amplitude_ratio=1.0, band=(30, 450)), seed=3)
    noisy = extract_features(out.samples[30_000:50_000], 1000)
    clean = extract_features(out.samples[5_000:25_000], 1000)
    assert noisy.highband_power / noisy.total_power > clean.highband_power / clean.total_power
    assert noisy.highband_power > clean.highband_power


def test_motion_drift_is_low_frequency():
    rec = generate_clean_ecg(60, 1000, 72, seed=8)
    out = inject_artifact(rec, (0, 40), NoiseSpec(1, amplitude_ratio=2.0), seed=3)
    drift = out.samples[:40_000] - rec.samples[:40_000]
    spec = np.abs(np.fft.rfft(drift)) ** 2
    freqs = np.fft.rfftfreq(drift.size, 1e-3)
    assert spec[freqs < 1].sum() > 0.9 * spec.sum()
    assert spec[freqs > 2].sum() < 0.02 * spec.sum()
    clean_std = rec.samples[:40_000].std()
    assert np.sqrt(np.mean(drift ** 2)) == pytest.approx(2.0 * clean_std, rel=1e-9)


def test_zero_amplitude_only_relabels():
    rec = generate_clean_ecg(20, 1000, 72, seed=1)
    for cls in (1, 2):
        out = inject_artifact(rec, (2, 6), NoiseSpec(cls, amplitude_ratio=0.0))
        assert np.array_equal(out.samples, rec.samples)
        assert (out.labels[2000:6000] == cls).all()


def test_span_errors():
    rec = generate_clean_ecg(10, 100, 72, seed=1)
    with pytest.raises(IndexError):
        inject_artifact(rec, (8, 12), NoiseSpec(2))
    with pytest.raises(IndexError):
        inject_artifact(rec, (-1, 2), NoiseSpec(2))
    once = inject_artifact(rec, (2, 5), NoiseSpec(2))
    with pytest.raises(ValueError, match="overlaps"):
        inject_artifact(once, (4, 6), NoiseSpec(1))


def test_noise_spec_validation():
    with pytest.raises(ValueError):
        NoiseSpec(2, band=(10, 100))
    with pytest.raises(ValueError):
        NoiseSpec(1, amplitude_ratio=-1)
    with pytest.raises(ValueError):
        NoiseSpec(4)
    assert NoiseSpec(1).amplitude_ratio == 2.0
    assert NoiseSpec(2).amplitude_ratio == 1.0


def test_protocol_schedule_counts():
    cfg = ProtocolConfig(total_duration=900, rest_duration=120, activity_duration=60,
                         activity_sequence=[1, 2, 3, 1, 2], sampling_rate=100, seed=2)
    rec = generate_protocol_recording(cfg, "ecg")
    counts = np.bincount(rec.labels, minlength=4)
    fs = 100
    assert counts[0] == 600 * fs
    assert counts[1] == 120 * fs and counts[2] == 120 * fs and counts[3] == 60 * fs
    assert len(cfg.activity_slots()) == 5
    for start, end, cls in cfg.activity_slots():
        assert (rec.labels[int(start * fs):int(end * fs)] == cls).all()


def test_protocol_default_is_fifteen_minutes():
    cfg = ProtocolConfig()
    assert cfg.total_duration == 15 * 60
    assert cfg.sampling_rate == 1000
    assert cfg.n_slots == 5


@pytest.mark.parametrize("bad", [
    dict(total_duration=1000),
    dict(activity_sequence=[1, 2]),
    dict(heart_rate=250),
    dict(sampling_rate=0),
    dict(activity_sequence=[1, 2, 3, 4, 1]),
])
def test_protocol_config_validation(bad):
    with pytest.raises(ValueError):
        ProtocolConfig(**bad)


def test_protocol_json_round_trip():
    cfg = ProtocolConfig(seed=11, heart_rate=65, activity_sequence=[3, 3, 2, 1, 1])
    text = cfg.to_json()
    assert set(json.loads(text)) >= {"total_duration", "rest_duration", "activity_duration",
                                     "activity_sequence", "sampling_rate", "heart_rate", "seed"}
    assert ProtocolConfig.from_json(text) == cfg


def test_manifest_lists_slots():
    manifest = slot_manifest(ProtocolConfig())
    activity = [s for s in manifest["slots"] if s["kind"] == "activity"]
    assert [s["label"] for s in activity] == [1, 2, 3, 1, 2]


@settings(max_examples=15, deadline=None)
@given(seed=st.integers(0, 2**31 - 1),
       sequence=st.lists(st.sampled_from([1, 2, 3]), min_size=3, max_size=3),
       modality=st.sampled_from(["ecg", "ppg"]))
def test_protocol_labels_partition_and_determinism(seed, sequence, modality):
    cfg = ProtocolConfig(total_duration=90, rest_duration=20, activity_duration=10,
                         activity_sequence=sequence, sampling_rate=200, seed=seed)
    a = generate_protocol_recording(cfg, modality)
    b = generate_protocol_recording(cfg, modality)
    assert np.array_equal(a.samples, b.samples) and np.array_equal(a.labels, b.labels)
    assert np.isin(a.labels, [0, 1, 2, 3]).all()
    assert np.sum(a.labels == 0) == 60 * 200
    for start, end, cls in cfg.activity_slots():
        span = a.samples[int(start * 200):int(end * 200)]
        if cls == 3:
            assert np.ptp(span) == 0


@settings(max_examples=10, deadline=None)
@given(seed=st.integers(0, 10_000), ratio=st.floats(1.0, 4.0))
def test_emg_span_beats_every_clean_span(seed, ratio):
    fs = 1000
    rec = generate_clean_ecg(60, fs, 72, seed=seed)
    out = inject_artifact(rec, (20, 30), NoiseSpec(2, amplitude_ratio=ratio), seed=seed)
    noisy = extract_features(out.samples[20_000:30_000], fs).highband_power
    for start in (0, 10, 30, 40, 50):
        clean = extract_features(out.samples[start * fs:(start + 10) * fs], fs).highband_power
        assert noisy > clean
