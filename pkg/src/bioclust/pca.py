"""Principal component analysis through a cyclic Jacobi eigensolver.

The feature space is tiny (9 columns), so the covariance matrix is
diagonalized directly with plane rotations instead of calling LAPACK.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np


@dataclass(frozen=True)
class PcaModel:
    components: np.ndarray  # p x d, orthonormal rows
    explained_variance: np.ndarray
    explained_variance_ratio: np.ndarray
    column_means: np.ndarray

    def to_dict(self) -> dict:
        return {"components": self.components.tolist(),
                "explained_variance": self.explained_variance.tolist(),
                "explained_variance_ratio": self.explained_variance_ratio.tolist(),
                "column_means": self.column_means.tolist()}

    @classmethod
    def from_dict(cls, d) -> "PcaModel":
        return cls(*(np.asarray(d[key], dtype=float) for key in
                     ("components", "explained_variance", "explained_variance_ratio",
                      "column_means")))


def jacobi_eigh(A, tol: float = 1e-12, max_sweeps: int = 100) -> tuple[np.ndarray, np.ndarray]:
    """Eigenvalues and eigenvectors (columns) of a symmetric matrix.

    Cyclic sweeps over all off-diagonal pairs until the off-diagonal Frobenius
    norm drops below ``tol * max(1, ||A||_F)``. Results are unsorted.
    """
    A = np.array(A, dtype=float)
    if A.ndim != 2 or A.shape[0] != A.shape[1]:
        raise ValueError("matrix must be square")
    if not np.allclose(A, A.T, rtol=1e-10, atol=1e-12):
        raise ValueError("matrix must be symmetric")
    A = 0.5 * (A + A.T)
    d = A.shape[0]
    V = np.eye(d)
    scale = max(np.linalg.norm(A), 1.0)

    def off(M):
        return np.sqrt(np.sum(np.triu(M, 1) ** 2) * 2)

    for _ in range(max_sweeps):
        if off(A) <= tol * scale:
            break
        for p in range(d - 1):
            for q in range(p + 1, d):
                apq = A[p, q]
                if apq == 0.0:
                    continue
                theta = (A[q, q] - A[p, p]) / (2.0 * apq)
                # smaller root of t^2 + 2 t theta - 1 = 0 keeps the rotation below 45 degrees
                if theta == 0:
                    t = 1.0
                elif abs(theta) > 1e100:
                    t = 0.5 / theta
                else:
                    t = np.sign(theta) / (abs(theta) + np.sqrt(theta ** 2 + 1.0))
                c = 1.0 / np.sqrt(t ** 2 + 1.0)
                s = t * c
                J = np.eye(d)
                J[p, p] = J[q, q] = c
                J[p, q] = s
                J[q, p] = -s
                A = J.T @ A @ J
                A[p, q] = A[q, p] = 0.0
                V = V @ J
    else:
        raise RuntimeError("Jacobi iteration did not converge")
    return np.diag(A).copy(), V


def _orient(vectors):
    # flip each column so its largest-magnitude entry is positive
    idx = np.argmax(np.abs(vectors), axis=0)
    signs = np.sign(vectors[idx, np.arange(vectors.shape[1])])
    signs[signs == 0] = 1.0
    return vectors * signs


def pca_fit(X, p: int = 2) -> PcaModel:
    X = np.asarray(X, dtype=float)
    if X.ndim != 2:
        raise ValueError("X must be a 2-D matrix")
    n, d = X.shape
    if n < 2:
        raise ValueError("PCA needs at least 2 rows")
    if not 1 <= p <= min(n, d):
        raise ValueError(f"p must lie in [1, {min(n, d)}], got {p}")
    means = X.mean(axis=0)
    Xc = X - means
    cov = Xc.T @ Xc / (n - 1)
    values, vectors = jacobi_eigh(cov)
    values = np.maximum(values, 0.0)  # round-off can push null directions slightly negative
    # stable sort so equal eigenvalues keep column order
    order = np.argsort(-values, kind="stable")
    values, vectors = values[order], _orient(vectors[:, order])
    trace = values.sum()
    ratios = values / trace if trace > 0 else np.zeros_like(values)
    return PcaModel(vectors[:, :p].T.copy(), values[:p].copy(), ratios[:p].copy(), means)


def pca_transform(model: PcaModel, X) -> np.ndarray:
    X = np.atleast_2d(np.asarray(X, dtype=float))
    if X.shape[1] != model.column_means.size:
        raise ValueError(f"expected {model.column_means.size} columns, got {X.shape[1]}")
    return (X - model.column_means) @ model.components.T
