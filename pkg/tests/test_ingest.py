import numpy as np
import pytest
from hypothesis import HealthCheck, given, settings, strategies as st

from bioclust.ingest import (
    EmptyRecordError,
    ParseError,
    SignalRecord,
    drop_invalid,
    load_recording,
    write_recording,
)
from bioclust.synthgen import ProtocolConfig, generate_protocol_recording


def write(tmp_path, text, name="rec.csv"):
    path = tmp_path / name
    path.write_text(text, encoding="utf-8")
    return path


def test_load_small_file(tmp_path):
    path = write(tmp_path, "sample_index,value,label\n0,0.5,0\n1,-1.25,2\n2,3,3\n")
    rec = load_recording(path, fs=250, modality="ppg")
    assert len(rec) == 3
    assert rec.samples.tolist() == [0.5, -1.25, 3.0]
    assert rec.labels.tolist() == [0, 2, 3]
    assert rec.fs == 250 and rec.modality == "ppg"
    assert rec.source_id == "rec"


def test_bad_label_names_row(tmp_path):
    path = write(tmp_path, "sample_index,value,label\n0,0.5,0\n1,0.7,7\n2,0.1,0\n")
    with pytest.raises(ParseError, match="row 2"):
        load_recording(path)


def test_non_numeric_value_names_row(tmp_path):
    path = write(tmp_path, "sample_index,value,label\n0,0.5,0\n1,0.7,0\n2,abc,0\n")
    with pytest.raises(ParseError, match="row 3"):
        load_recording(path)
    with pytest.raises(ParseError, match="row 3"):
        load_recording(path, permissive=True)


def test_missing_column(tmp_path):
    path = write(tmp_path, "sample_index,value\n0,0.5\n")
    with pytest.raises(ParseError, match="label"):
        load_recording(path)


def test_sample_index_must_count_from_zero(tmp_path):
    path = write(tmp_path, "sample_index,value,label\n0,0.5,0\n2,0.7,0\n")
    with pytest.raises(ParseError, match="row 2"):
        load_recording(path)


def test_strict_mode_rejects_nan_permissive_keeps_it(tmp_path):
    path = write(tmp_path, "sample_index,value,label\n0,0.5,0\n1,nan,0\n2,,1\n3,1.0,1\n")
    with pytest.raises(ParseError, match="row 2"):
        load_recording(path)
    rec = load_recording(path, permissive=True)
    assert np.isnan(rec.samples[1]) and np.isnan(rec.samples[2])


def test_timestamp_gap_marks_invalid(tmp_path):
    rows = ["sample_index,value,label,timestamp_s"]
    stamps = [0.0, 0.01, 0.02, 0.05, 0.06]
    for i, t in enumerate(stamps):
        rows.append(f"{i},{i * 0.1},0,{t}")
    path = write(tmp_path, "\n".join(rows) + "\n")
    rec = load_recording(path, fs=100)
    assert rec.valid.tolist() == [True, True, True, False, True]


def test_timestamp_jitter_within_tolerance_is_fine(tmp_path):
    rows = ["sample_index,value,label,timestamp_s"]
    for i, t in enumerate([0.0, 0.0105, 0.0196, 0.0300]):
        rows.append(f"{i},1.0,0,{t}")
    rec = load_recording(write(tmp_path, "\n".join(rows) + "\n"), fs=100)
    assert rec.valid.all()


def test_empty_file(tmp_path):
    with pytest.raises((ParseError, EmptyRecordError)):
        load_recording(write(tmp_path, ""))
    with pytest.raises(EmptyRecordError):
        load_recording(write(tmp_path, "sample_index,value,label\n", "b.csv"))


def test_drop_invalid_identity():
    rec = SignalRecord(np.arange(10.0), 10, np.zeros(10, int))
    out = drop_invalid(rec)
    assert out.valid.all()
    assert np.array_equal(out.samples, rec.samples)


def test_drop_invalid_marks_single_nan():
    x = np.arange(10.0)
    x[5] = np.nan
    out = drop_invalid(SignalRecord(x, 10, np.zeros(10, int)))
    assert out.valid.tolist() == [i != 5 for i in range(10)]


def test_drop_invalid_all_nan():
    with pytest.raises(EmptyRecordError):
        drop_invalid(SignalRecord(np.full(4, np.nan), 10, np.zeros(4, int)))


@given(st.lists(st.one_of(st.floats(-1e6, 1e6), st.just(float("nan")), st.just(float("inf"))),
                min_size=1, max_size=50))
def test_drop_invalid_never_alters_finite_values(values):
    x = np.array(values)
    rec = SignalRecord(x, 100, np.zeros(len(x), int))
    if not np.isfinite(x).any():
        with pytest.raises(EmptyRecordError):
            drop_invalid(rec)
        return
    out = drop_invalid(rec)
    finite = np.isfinite(x)
    assert np.array_equal(out.samples[finite], x[finite])
    assert np.array_equal(out.valid, finite)


def test_record_invariants():
    with pytest.raises(ValueError):
        SignalRecord(np.zeros(3), 100, np.zeros(2, int))
    with pytest.raises(ValueError):
        SignalRecord(np.zeros(3), 0, np.zeros(3, int))
    with pytest.raises(ValueError):
        SignalRecord(np.zeros(3), 100, np.array([0, 4, 0]))
    with pytest.raises(EmptyRecordError):
        SignalRecord(np.zeros(0), 100, np.zeros(0, int))


@settings(max_examples=10, deadline=None, suppress_health_check=[HealthCheck.function_scoped_fixture])
@given(seed=st.integers(0, 2**32 - 1), modality=st.sampled_from(["ecg", "ppg"]),
       sequence=st.lists(st.sampled_from([1, 2, 3]), min_size=2, max_size=2),
       timestamps=st.booleans())
def test_write_load_round_trip(tmp_path, seed, modality, sequence, timestamps):
    cfg = ProtocolConfig(total_duration=30, rest_duration=10, activity_duration=5,
                         activity_sequence=sequence, sampling_rate=250, seed=seed)
    rec = generate_protocol_recording(cfg, modality)
    path = tmp_path / "round.csv"
    write_recording(rec, path, with_timestamps=timestamps)
    back = load_recording(path, fs=250, modality=modality)
    assert np.array_equal(back.samples, rec.samples)
    assert np.array_equal(back.labels, rec.labels)
    assert back.fs == rec.fs
    assert back.valid.all()
