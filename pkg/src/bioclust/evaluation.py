"""Cluster-to-label mapping, confusion matrices and precision/recall/F1 reports."""
from __future__ import annotations

import itertools
from dataclasses import dataclass

import numpy as np

from .ingest import LABEL_NAMES

MAPPING_METHODS = ("majority", "optimal")
MAX_OPTIMAL_CLUSTERS = 8


@dataclass(frozen=True)
class ClusterLabelMap:
    mapping: dict[int, int]
    method: str

    def apply(self, cluster_ids) -> np.ndarray:
        cluster_ids = np.asarray(cluster_ids)
        unknown = set(np.unique(cluster_ids).tolist()) - set(self.mapping)
        if unknown:
            raise ValueError(f"clusters {sorted(unknown)} have no label")
        return np.array([self.mapping[int(c)] for c in cluster_ids], dtype=np.int64)


@dataclass(frozen=True)
class ConfusionMatrix:
    counts: np.ndarray  # rows = true class, columns = predicted class
    classes: tuple[int, ...]

    @property
    def total(self) -> int:
        return int(self.counts.sum())

    def row_percent(self) -> np.ndarray:
        rows = self.counts.sum(axis=1, keepdims=True)
        with np.errstate(invalid="ignore", divide="ignore"):
            pct = 100.0 * self.counts / rows
        return np.where(rows > 0, pct, 0.0)


@dataclass(frozen=True)
class ClassReport:
    classes: tuple[int, ...]
    precision: np.ndarray
    recall: np.ndarray
    f1: np.ndarray
    support: np.ndarray
    accuracy: float
    macro_f1: float
    weighted_f1: float
    # per class: True where precision or recall hit a zero denominator
    zero_division: np.ndarray

    def recall_of(self, label: int) -> float:
        return float(self.recall[self.classes.index(label)])

    def precision_of(self, label: int) -> float:
        return float(self.precision[self.classes.index(label)])


def map_clusters_to_labels(true_labels, cluster_ids, method: str = "majority") -> ClusterLabelMap:
    """Assign every cluster a ground-truth label.

    ``majority``: the modal true label of the cluster's members, smaller label
    on ties. ``optimal``: exhaustive search for the map maximizing matched
    windows, restricted to injective maps when clusters <= classes and to
    surjective maps otherwise.
    """
    true_labels = np.asarray(true_labels, dtype=np.int64)
    cluster_ids = np.asarray(cluster_ids, dtype=np.int64)
    if true_labels.size == 0:
        raise ValueError("no labels to map")
    if true_labels.shape != cluster_ids.shape:
        raise ValueError("true_labels and cluster_ids differ in length")
    if method not in MAPPING_METHODS:
        raise ValueError(f"unknown mapping method {method!r}")
    clusters = np.unique(cluster_ids)
    classes = np.unique(true_labels)
    # overlap[i, j] = members of cluster i whose true label is classes[j]
    overlap = np.array([[np.sum((cluster_ids == c) & (true_labels == t)) for t in classes]
                        for c in clusters])

    if method == "majority":
        best = overlap.argmax(axis=1)  # argmax returns the first, i.e. smallest, label
        return ClusterLabelMap({int(c): int(classes[j]) for c, j in zip(clusters, best)}, method)

    k, c = len(clusters), len(classes)
    if k > MAX_OPTIMAL_CLUSTERS:
        raise ValueError(f"optimal mapping supports at most {MAX_OPTIMAL_CLUSTERS} clusters")
    if k <= c:
        candidates = itertools.permutations(range(c), k)
    else:
        candidates = (m for m in itertools.product(range(c), repeat=k) if len(set(m)) == c)
    best_map, best_score = None, -1
    rows = np.arange(k)
    for assignment in candidates:
        score = int(overlap[rows, assignment].sum())
        if score > best_score:
            best_map, best_score = assignment, score
    return ClusterLabelMap({int(cl): int(classes[j]) for cl, j in zip(clusters, best_map)}, method)


def confusion(true_labels, predicted_labels, classes=None) -> ConfusionMatrix:
    true_labels = np.asarray(true_labels, dtype=np.int64)
    predicted_labels = np.asarray(predicted_labels, dtype=np.int64)
    if true_labels.shape != predicted_labels.shape:
        raise ValueError("true and predicted labels differ in length")
    if classes is None:
        classes = np.union1d(true_labels, predicted_labels)
    classes = tuple(int(c) for c in classes)
    index = {c: i for i, c in enumerate(classes)}
    unknown = (set(np.unique(true_labels).tolist()) | set(np.unique(predicted_labels).tolist())) - set(classes)
    if unknown:
        raise ValueError(f"labels {sorted(unknown)} are not among classes {classes}")
    counts = np.zeros((len(classes), len(classes)), dtype=np.int64)
    if true_labels.size:
        t = np.array([index[v] for v in true_labels.tolist()])
        p = np.array([index[v] for v in predicted_labels.tolist()])
        np.add.at(counts, (t, p), 1)
    return ConfusionMatrix(counts, classes)


def class_report(cm: ConfusionMatrix | np.ndarray, classes=None) -> ClassReport:
    """Per-class precision/recall/F1 with support, accuracy, macro and weighted F1.

    A zero denominator yields a 0 score and sets the class's ``zero_division`` flag.
    """
    if not isinstance(cm, ConfusionMatrix):
        counts = np.asarray(cm, dtype=np.int64)
        cm = ConfusionMatrix(counts, tuple(classes) if classes is not None else tuple(range(len(counts))))
    counts = cm.counts.astype(float)
    if counts.size == 0:
        raise ValueError("empty confusion matrix")
    total = counts.sum()
    if total == 0:
        raise ValueError("confusion matrix has no entries")
    tp = np.diag(counts)
    predicted = counts.sum(axis=0)
    support = counts.sum(axis=1)
    with np.errstate(invalid="ignore", divide="ignore"):
        precision = np.where(predicted > 0, tp / predicted, 0.0)
        recall = np.where(support > 0, tp / support, 0.0)
        denom = precision + recall
        f1 = np.where(denom > 0, 2 * precision * recall / denom, 0.0)
    return ClassReport(
        classes=cm.classes,
        precision=precision,
        recall=recall,
        f1=f1,
        support=support.astype(np.int64),
        accuracy=float(tp.sum() / total),
        macro_f1=float(f1.mean()),
        weighted_f1=float(np.sum(support * f1) / support.sum()),
        zero_division=(predicted == 0) | (support == 0),
    )


def binary_collapse(labels) -> np.ndarray:
    """0 stays clean (0); every noise label becomes 1."""
    return (np.asarray(labels) != 0).astype(np.int64)


def collapse_confusion(cm: ConfusionMatrix) -> ConfusionMatrix:
    """Sum a multi-class matrix into the 2 x 2 clean-vs-noisy matrix."""
    groups = np.array([0 if c == 0 else 1 for c in cm.classes])
    out = np.zeros((2, 2), dtype=np.int64)
    for i, gi in enumerate(groups):
        for j, gj in enumerate(groups):
            out[gi, gj] += cm.counts[i, j]
    return ConfusionMatrix(out, (0, 1))


def report_dict(cm: ConfusionMatrix, report: ClassReport, names=None) -> dict:
    """JSON-ready form of a confusion matrix and its class report."""
    names = names or LABEL_NAMES
    return {
        "classes": list(cm.classes),
        "class_names": [names.get(c, str(c)) for c in cm.classes],
        "confusion_counts": cm.counts.tolist(),
        "confusion_row_pct": cm.row_percent().tolist(),
        "per_class": [
            {"label": c, "precision": float(report.precision[i]), "recall": float(report.recall[i]),
             "f1": float(report.f1[i]), "support": int(report.support[i]),
             "zero_division": bool(report.zero_division[i])}
            for i, c in enumerate(cm.classes)
        ],
        "accuracy": report.accuracy,
        "macro_f1": report.macro_f1,
        "weighted_f1": report.weighted_f1,
    }


BINARY_NAMES = {0: "clean", 1: "noisy"}


def evaluate_assignment(true_labels, cluster_ids, method: str = "majority",
                        classes=(0, 1, 2, 3)) -> dict:
    """Map clusters to labels and build the multi-class and binary reports."""
    label_map = map_clusters_to_labels(true_labels, cluster_ids, method)
    predicted = label_map.apply(cluster_ids)
    multi = confusion(true_labels, predicted, classes)
    binary = confusion(binary_collapse(true_labels), binary_collapse(predicted), (0, 1))
    return {
        "mapping": {"method": method,
                    "cluster_to_label": {str(k): v for k, v in sorted(label_map.mapping.items())}},
        "multiclass": report_dict(multi, class_report(multi)),
        "binary": report_dict(binary, class_report(binary), BINARY_NAMES),
    }
