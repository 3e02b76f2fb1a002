"""End-to-end orchestration: records -> windows -> features -> clusters -> reports."""
from __future__ import annotations

import logging
from dataclasses import asdict, dataclass, field

import numpy as np

from . import clustering, evaluation
from .features import FEATURE_NAMES, apply_standardizer, feature_matrix, fit_standardizer
from .ingest import SignalRecord, drop_invalid
from .synthgen import ProtocolConfig, generate_protocol_recording
from .windowing import Window, slide_windows

log = logging.getLogger(__name__)

METHODS = ("kmeans", "agglomerative")


@dataclass
class PipelineConfig:
    inputs: list[str] = field(default_factory=list)
    synth: ProtocolConfig | None = None
    sessions: int = 1
    modality: str = "ecg"
    fs: float = 1000.0
    window_s: float = 120.0
    stride_s: float = 30.0
    k: int = 4
    k_sweep: tuple[int, int] = (2, 10)
    method: str = "kmeans"
    mapping: str = "majority"
    standardize: bool = True
    seed: int = 0
    restarts: int = 10

    def __post_init__(self):
        if bool(self.inputs) == (self.synth is not None):
            raise ValueError("set exactly one of inputs or a synth config")
        if self.k < 2:
            raise ValueError("k must be >= 2")
        if self.method not in METHODS:
            raise ValueError(f"method must be one of {METHODS}")
        if self.mapping not in evaluation.MAPPING_METHODS:
            raise ValueError(f"mapping must be one of {evaluation.MAPPING_METHODS}")
        if self.modality not in ("ecg", "ppg"):
            raise ValueError("modality must be ecg or ppg")
        if self.sessions < 1:
            raise ValueError("sessions must be >= 1")
        lo, hi = self.k_sweep
        if not 2 <= lo <= hi:
            raise ValueError("k sweep needs 2 <= A <= B")

    def describe(self) -> dict:
        """Settings that determine the result (no output paths)."""
        d = asdict(self)
        d["k_sweep"] = list(self.k_sweep)
        return d


@dataclass
class WindowTable:
    """Windows pooled across records with their raw feature rows."""

    windows: list[Window]
    records: dict[str, SignalRecord]
    features: np.ndarray
    fs: float

    @property
    def labels(self) -> np.ndarray:
        return np.array([w.label for w in self.windows], dtype=np.int64)

    @property
    def start_s(self) -> np.ndarray:
        return np.array([w.start / self.fs for w in self.windows])

    def samples(self, i: int) -> np.ndarray:
        w = self.windows[i]
        return self.records[w.parent].samples[w.start:w.stop]


def synth_records(config: ProtocolConfig, modality: str, sessions: int = 1) -> list[SignalRecord]:
    """One record per session; session i uses seed ``config.seed + i``."""
    out = []
    for i in range(sessions):
        cfg = ProtocolConfig(**{**asdict(config), "seed": config.seed + i})
        out.append(generate_protocol_recording(cfg, modality))
    return out


def build_windows(records, window_s: float = 120.0, stride_s: float = 30.0) -> WindowTable:
    records = [drop_invalid(r) for r in records]
    fs_values = {r.fs for r in records}
    if len(fs_values) != 1:
        raise ValueError(f"records disagree on sampling rate: {sorted(fs_values)}")
    fs = fs_values.pop()
    by_id, windows = {}, []
    for i, record in enumerate(records):
        key = record.source_id or f"record{i}"
        if key in by_id:
            key = f"{key}#{i}"
        by_id[key] = record
        windows += [Window(w.start, w.length, w.label, key)
                    for w in slide_windows(record, window_s, stride_s)]
    if not windows:
        raise ValueError("no windows: recordings shorter than the window or fully masked")
    X = feature_matrix((by_id[w.parent].samples[w.start:w.stop] for w in windows), fs)
    return WindowTable(windows, by_id, X, fs)


def cluster_matrix(X, config: PipelineConfig, k: int | None = None):
    """Fit the configured clustering; returns (model, assignment)."""
    k = config.k if k is None else k
    if config.method == "kmeans":
        model = clustering.kmeans_fit(X, k, seed=config.seed, restarts=config.restarts)
        return model, model.labels
    model = clustering.agglomerative_fit(X, k)
    return model, model.labels


def evaluate_pipeline(records, config: PipelineConfig) -> dict:
    """Windows -> features -> (standardize) -> cluster -> map -> reports.

    Returns a dict with ``multiclass`` and ``binary`` report dicts, the
    ``mapping`` used, plus the fitted ``model``, ``standardizer``, ``assignment``
    and ``table`` for further use.
    """
    table = build_windows(records, config.window_s, config.stride_s)
    scaler = fit_standardizer(table.features)
    X = apply_standardizer(scaler, table.features) if config.standardize else table.features
    if config.k > X.shape[0]:
        raise ValueError(f"k={config.k} exceeds the {X.shape[0]} available windows")
    model, assignment = cluster_matrix(X, config)
    result = evaluation.evaluate_assignment(table.labels, assignment, config.mapping)
    result.update(model=model, standardizer=scaler, assignment=assignment, table=table, X=X)
    return result


__all__ = ["PipelineConfig", "WindowTable", "build_windows", "cluster_matrix",
           "evaluate_pipeline", "synth_records", "FEATURE_NAMES"]
