"""Readers and writers for the CSV/JSON artifacts exchanged between subcommands."""
from __future__ import annotations

import csv
import io
import json

import numpy as np

from .clustering import AgglomerativeModel, KMeansModel
from .features import FEATURE_NAMES, Standardizer
from .ingest import LABELS, ParseError, _atomic_write_text

FEATURE_COLUMNS = ("window_start_s", "label") + FEATURE_NAMES


class SchemaError(ValueError):
    """An artifact file does not match the layout this package writes."""


def write_text(path, text: str) -> None:
    _atomic_write_text(path, text)


def write_json(path, obj) -> None:
    write_text(path, json.dumps(obj, indent=2, sort_keys=True) + "\n")


def _csv_text(header, rows) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(header)
    writer.writerows(rows)
    return buf.getvalue()


def _num(v):
    # repr keeps float round trips exact
    return repr(float(v))


def write_features(path, start_s, labels, X) -> None:
    X = np.asarray(X, dtype=float)
    rows = ([_num(s), int(lab)] + [_num(v) for v in row] for s, lab, row in zip(start_s, labels, X))
    write_text(path, _csv_text(FEATURE_COLUMNS, rows))


def read_features(path):
    """Returns (start_s, labels, X)."""
    with open(path, encoding="utf-8", newline="") as handle:
        reader = csv.reader(handle)
        header = next(reader, None)
        if header is None:
            raise SchemaError(f"{path}: empty features file")
        header = [h.strip() for h in header]
        if tuple(header) != FEATURE_COLUMNS:
            raise SchemaError(f"{path}: expected columns {','.join(FEATURE_COLUMNS)}")
        start, labels, rows = [], [], []
        for lineno, row in enumerate(reader, start=2):
            if not row:
                continue
            if len(row) != len(FEATURE_COLUMNS):
                raise SchemaError(f"{path}: line {lineno} has {len(row)} fields")
            try:
                values = [float(v) for v in row]
            except ValueError as exc:
                raise SchemaError(f"{path}: line {lineno}: {exc}") from None
            if values[1] not in LABELS:
                raise SchemaError(f"{path}: line {lineno}: label {row[1]!r} not in 0..3")
            start.append(values[0])
            labels.append(int(values[1]))
            rows.append(values[2:])
    if not rows:
        raise SchemaError(f"{path}: features file has no rows")
    return np.array(start), np.array(labels, dtype=np.int64), np.array(rows)


def write_silhouette(path, k_values, scores) -> None:
    write_text(path, _csv_text(("k", "score"), ([k, _num(s)] for k, s in zip(k_values, scores))))


def read_silhouette(path):
    with open(path, encoding="utf-8", newline="") as handle:
        rows = list(csv.DictReader(handle))
    return [int(r["k"]) for r in rows], [float(r["score"]) for r in rows]


def write_pca_scores(path, scores, labels, clusters) -> None:
    rows = ([_num(s[0]), _num(s[1]), int(lab), int(c)] for s, lab, c in zip(scores, labels, clusters))
    write_text(path, _csv_text(("pc1", "pc2", "label", "cluster"), rows))


def read_pca_scores(path):
    with open(path, encoding="utf-8", newline="") as handle:
        rows = list(csv.DictReader(handle))
    scores = np.array([[float(r["pc1"]), float(r["pc2"])] for r in rows])
    return scores, np.array([int(r["label"]) for r in rows]), np.array([int(r["cluster"]) for r in rows])


def write_confusion(path, counts, classes) -> None:
    rows = ([c] + [int(v) for v in row] for c, row in zip(classes, np.asarray(counts)))
    write_text(path, _csv_text(["true\\predicted"] + list(classes), rows))


def read_confusion(path):
    with open(path, encoding="utf-8", newline="") as handle:
        rows = list(csv.reader(handle))
    classes = [int(c) for c in rows[0][1:]]
    return np.array([[int(v) for v in r[1:]] for r in rows[1:]]), classes


def model_document(model, scaler: Standardizer | None) -> dict:
    """Clustering model JSON: ``k``, ``centroids`` (row-major), ``inertia``, ``seed`` and friends."""
    doc = model.to_dict()
    doc["feature_names"] = list(FEATURE_NAMES)
    doc["standardizer"] = scaler.to_dict() if scaler is not None else None
    return doc


def load_model(path):
    """Returns (model, standardizer or None)."""
    try:
        with open(path, encoding="utf-8") as handle:
            doc = json.load(handle)
    except json.JSONDecodeError as exc:
        raise SchemaError(f"{path}: not valid JSON ({exc})") from None
    method = doc.get("method", "kmeans")
    d = len(FEATURE_NAMES)
    scaler = None
    if doc.get("standardizer") is not None:
        try:
            scaler = Standardizer.from_dict(doc["standardizer"])
        except (KeyError, TypeError, ValueError) as exc:
            raise SchemaError(f"{path}: field 'standardizer' is malformed ({exc})") from None
        if scaler.mean.shape != (d,) or scaler.std.shape != (d,):
            raise SchemaError(f"{path}: field 'standardizer' must hold {d} means and {d} stds")
    if method == "kmeans":
        for key in ("k", "centroids", "inertia", "seed"):
            if key not in doc:
                raise SchemaError(f"{path}: missing field {key!r}")
        try:
            model = KMeansModel.from_dict(doc)
        except (TypeError, ValueError) as exc:
            raise SchemaError(f"{path}: field 'centroids' is malformed ({exc})") from None
        if model.centroids.shape[1] != d:
            raise SchemaError(f"{path}: field 'centroids' has {model.centroids.shape[1]} columns, "
                              f"expected {d}")
        return model, scaler
    if method == "agglomerative":
        for key in ("k", "merges", "assignment"):
            if key not in doc:
                raise SchemaError(f"{path}: missing field {key!r}")
        model = AgglomerativeModel(np.asarray(doc["merges"], dtype=float), int(doc["k"]),
                                   np.asarray(doc["assignment"], dtype=np.int64))
        return model, scaler
    raise SchemaError(f"{path}: unknown field 'method' value {method!r}")


__all__ = ["SchemaError", "ParseError", "FEATURE_COLUMNS", "write_features", "read_features",
           "write_silhouette", "read_silhouette", "write_pca_scores", "read_pca_scores",
           "write_confusion", "read_confusion", "model_document", "load_model",
           "write_json", "write_text"]
