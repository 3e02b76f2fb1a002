"""Loading, validating and writing labeled single-channel recordings.

CSV layout (UTF-8, header required)::

    sample_index,value,label[,timestamp_s]

``sample_index`` counts up from 0, ``label`` is one of 0 (clean), 1 (motion),
2 (EMG) or 3 (sensor failure). The sampling rate is not stored in the file.
"""
from __future__ import annotations

import os
import tempfile
from dataclasses import dataclass, field, replace

import numpy as np
import pandas as pd

LABELS = (0, 1, 2, 3)
LABEL_NAMES = {0: "clean", 1: "motion", 2: "emg", 3: "sensor_failure"}
MODALITIES = ("ecg", "ppg")
REQUIRED_COLUMNS = ("sample_index", "value", "label")

# allowed relative deviation of a timestamp step from 1/fs
TIMESTAMP_TOLERANCE = 0.10


class ParseError(ValueError):
    """Raised when a recording file violates the CSV schema."""


class EmptyRecordError(ValueError):
    """Raised when no valid samples remain in a record."""


@dataclass(frozen=True, eq=False)
class SignalRecord:
    """A uniformly sampled channel with per-sample ground-truth labels.

    ``valid`` marks samples usable downstream; windows touching a ``False``
    sample are skipped by :func:`bioclust.windowing.slide_windows`.
    """

    samples: np.ndarray
    fs: float
    labels: np.ndarray
    modality: str = "ecg"
    source_id: str = ""
    valid: np.ndarray | None = field(default=None)

    def __post_init__(self):
        samples = np.asarray(self.samples, dtype=float)
        labels = np.asarray(self.labels, dtype=np.int64)
        if samples.ndim != 1 or labels.shape != samples.shape:
            raise ValueError("samples and labels must be 1-D arrays of equal length")
        if samples.size == 0:
            raise EmptyRecordError("record has no samples")
        if not self.fs > 0:
            raise ValueError(f"fs must be positive, got {self.fs}")
        if not np.isin(labels, LABELS).all():
            raise ValueError("labels must lie in {0,1,2,3}")
        if self.modality not in MODALITIES:
            raise ValueError(f"unknown modality {self.modality!r}")
        valid = self.valid
        if valid is None:
            valid = np.ones(samples.shape, dtype=bool)
        else:
            valid = np.asarray(valid, dtype=bool)
            if valid.shape != samples.shape:
                raise ValueError("valid mask must match samples")
        object.__setattr__(self, "samples", samples)
        object.__setattr__(self, "labels", labels)
        object.__setattr__(self, "valid", valid)
        object.__setattr__(self, "fs", float(self.fs))

    def __len__(self):
        return self.samples.size

    @property
    def duration(self) -> float:
        return self.samples.size / self.fs


def _row_error(row: int, message: str) -> ParseError:
    # row is the 1-based data row; the header is line 1 of the file
    return ParseError(f"row {row} (line {row + 1}): {message}")


def _numeric_column(frame: pd.DataFrame, name: str, allow_missing: bool) -> np.ndarray:
    raw = frame[name]
    try:
        # numpy's str->float conversion is correctly rounded, so repr'd values reload bit-exact
        values = np.asarray(raw.to_numpy(), dtype=float)
        if allow_missing or not np.isnan(values).any():
            return values
    except ValueError:
        pass
    values = pd.to_numeric(raw, errors="coerce")
    bad = values.isna()
    if allow_missing:
        # empty cells and textual nan/inf markers are accepted in permissive mode
        text = raw.fillna("").astype(str).str.strip().str.lower()
        bad &= ~text.isin(["nan", "inf", "-inf", "+inf", ""])
    if bad.any():
        row = int(np.flatnonzero(bad.to_numpy())[0]) + 1
        raise _row_error(row, f"non-numeric {name} {raw.iloc[row - 1]!r}")
    return values.to_numpy(dtype=float)


def load_recording(path, fs: float = 1000.0, modality: str = "ecg",
                   permissive: bool = False) -> SignalRecord:
    """Parse one channel CSV into a :class:`SignalRecord`.

    In strict mode any missing or non-finite ``value`` is a parse error. With
    ``permissive=True`` they are loaded as NaN so :func:`drop_invalid` can mask
    them. A ``timestamp_s`` column, when present, must step by ``1/fs`` within
    10%; the sample after a bad step is marked invalid.
    """
    if not fs > 0:
        raise ValueError(f"fs must be positive, got {fs}")
    try:
        frame = pd.read_csv(path, dtype=str, keep_default_na=False,
                            na_values=[""], encoding="utf-8")
    except pd.errors.EmptyDataError as exc:
        raise ParseError(f"{path}: empty file") from exc
    frame.columns = [c.strip() for c in frame.columns]
    missing = [c for c in REQUIRED_COLUMNS if c not in frame.columns]
    if missing:
        raise ParseError(f"{path}: missing column(s) {', '.join(missing)}")
    if len(frame) == 0:
        raise EmptyRecordError(f"{path}: no data rows")

    index = _numeric_column(frame, "sample_index", allow_missing=False)
    labels = _numeric_column(frame, "label", allow_missing=False)
    values = _numeric_column(frame, "value", allow_missing=True)

    expected = np.arange(len(frame))
    wrong = np.flatnonzero(index != expected)
    if wrong.size:
        row = int(wrong[0]) + 1
        raise _row_error(row, f"sample_index {frame['sample_index'].iloc[row - 1]!r}, expected {row - 1}")
    bad_label = np.flatnonzero(~np.isin(labels, LABELS))
    if bad_label.size:
        row = int(bad_label[0]) + 1
        raise _row_error(row, f"label {frame['label'].iloc[row - 1]!r} not in {{0,1,2,3}}")
    if not permissive:
        nonfinite = np.flatnonzero(~np.isfinite(values))
        if nonfinite.size:
            row = int(nonfinite[0]) + 1
            raise _row_error(row, "non-finite value (load with permissive=True to mask it)")

    valid = np.ones(len(frame), dtype=bool)
    if "timestamp_s" in frame.columns:
        stamps = _numeric_column(frame, "timestamp_s", allow_missing=False)
        step = np.diff(stamps)
        gap = np.abs(step - 1.0 / fs) > TIMESTAMP_TOLERANCE / fs
        valid[1:][gap] = False

    source_id = os.path.splitext(os.path.basename(str(path)))[0]
    return SignalRecord(values, fs, labels.astype(np.int64), modality, source_id, valid)


def drop_invalid(record: SignalRecord) -> SignalRecord:
    """Mask non-finite samples. Finite values are never touched.

    Samples are not deleted, so the time base stays uniform; windows that
    overlap a masked sample are skipped later.
    """
    valid = record.valid & np.isfinite(record.samples)
    if not valid.any():
        raise EmptyRecordError(f"record {record.source_id!r} has no valid samples")
    return replace(record, valid=valid)


def _atomic_write_text(path, text: str) -> None:
    directory = os.path.dirname(os.path.abspath(path))
    fd, tmp = tempfile.mkstemp(dir=directory, prefix=".tmp-", suffix=os.path.basename(path))
    try:
        with os.fdopen(fd, "w", encoding="utf-8", newline="") as handle:
            handle.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def write_recording(record: SignalRecord, path, with_timestamps: bool = False) -> None:
    """Write ``record`` in the CSV layout read by :func:`load_recording`.

    Values are written with ``repr`` so a reload is bit-exact.
    """
    header = "sample_index,value,label" + (",timestamp_s" if with_timestamps else "")
    values = record.samples.tolist()
    labels = record.labels.tolist()
    if with_timestamps:
        stamps = (np.arange(len(record)) / record.fs).tolist()
        rows = [f"{i},{v!r},{lab},{t!r}" for i, (v, lab, t) in enumerate(zip(values, labels, stamps))]
    else:
        rows = [f"{i},{v!r},{lab}" for i, (v, lab) in enumerate(zip(values, labels))]
    _atomic_write_text(path, header + "\n" + "\n".join(rows) + "\n")
