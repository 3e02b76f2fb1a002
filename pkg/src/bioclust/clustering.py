"""K-means (k-means++ / Lloyd), Ward agglomerative clustering, silhouette sweeps."""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np


@dataclass
class KMeansModel:
    k: int
    centroids: np.ndarray
    inertia: float
    iterations_run: int
    seed: int
    labels: np.ndarray | None = None
    # inertia after each assignment step of the winning restart
    inertia_history: list[float] = field(default_factory=list)

    def to_dict(self) -> dict:
        return {"method": "kmeans", "k": self.k, "centroids": self.centroids.tolist(),
                "inertia": self.inertia, "seed": self.seed,
                "iterations_run": self.iterations_run}

    @classmethod
    def from_dict(cls, d) -> "KMeansModel":
        centroids = np.asarray(d["centroids"], dtype=float)
        if centroids.ndim != 2 or centroids.shape[0] != int(d["k"]):
            raise ValueError("centroids must be a k x d matrix")
        return cls(int(d["k"]), centroids, float(d["inertia"]),
                   int(d.get("iterations_run", 0)), int(d["seed"]))


@dataclass
class AgglomerativeModel:
    # rows of (node_a, node_b, merge_cost, merged_size); ids >= n are earlier merges
    merge_tree: np.ndarray
    cut_k: int
    labels: np.ndarray

    def to_dict(self) -> dict:
        return {"method": "agglomerative", "k": self.cut_k,
                "merges": self.merge_tree.tolist(), "assignment": self.labels.tolist()}


@dataclass
class SilhouetteSweep:
    k_values: list[int]
    scores: list[float]
    best_k: int
    models: list[KMeansModel] = field(default_factory=list, repr=False)


def _as_matrix(X) -> np.ndarray:
    X = np.asarray(X, dtype=float)
    if X.ndim == 1:
        X = X[:, None]
    if X.ndim != 2:
        raise ValueError("X must be a 2-D matrix")
    if not np.isfinite(X).all():
        raise ValueError("X contains non-finite entries")
    return X


def _sq_dists_exact(X, C):
    # broadcast difference rather than the |x|^2 - 2xc + |c|^2 expansion: no cancellation
    return ((X[:, None, :] - C[None, :, :]) ** 2).sum(-1)


def kmeans_plusplus(X, k, rng) -> np.ndarray:
    """D^2-weighted seeding. Falls back to uniform picks once every point is covered."""
    n = X.shape[0]
    chosen = [int(rng.integers(n))]
    closest = _sq_dists_exact(X, X[chosen]).min(1)
    for _ in range(1, k):
        total = closest.sum()
        if total > 0:
            idx = int(rng.choice(n, p=closest / total))
        else:
            rest = np.setdiff1d(np.arange(n), chosen)
            idx = int(rng.choice(rest))
        chosen.append(idx)
        closest = np.minimum(closest, _sq_dists_exact(X, X[[idx]])[:, 0])
    return X[chosen].copy()


def _fill_empty(X, labels, centroids, d2):
    """Move the points farthest from their centroids into empty clusters."""
    k = centroids.shape[0]
    counts = np.bincount(labels, minlength=k)
    empty = np.flatnonzero(counts == 0)
    if empty.size == 0:
        return labels, centroids
    labels = labels.copy()
    cost = d2[np.arange(X.shape[0]), labels].copy()
    for j in empty:
        donors = counts[labels] > 1
        if not donors.any():
            break
        i = int(np.argmax(np.where(donors, cost, -1.0)))
        counts[labels[i]] -= 1
        counts[j] += 1
        labels[i] = j
        centroids[j] = X[i]
        cost[i] = 0.0
    return labels, centroids


def _lloyd(X, centroids, max_iter, tol):
    history = []
    it = 0
    for it in range(1, max_iter + 1):
        d2 = _sq_dists_exact(X, centroids)
        labels = np.argmin(d2, axis=1)
        history.append(float(d2[np.arange(X.shape[0]), labels].sum()))
        new = centroids.copy()
        for j in range(centroids.shape[0]):
            members = labels == j
            if members.any():
                new[j] = X[members].mean(0)
        labels, new = _fill_empty(X, labels, new, _sq_dists_exact(X, new))
        shift = np.linalg.norm(new - centroids, axis=1) / (1.0 + np.linalg.norm(centroids, axis=1))
        centroids = new
        if shift.max() < tol:
            break
    d2 = _sq_dists_exact(X, centroids)
    labels = np.argmin(d2, axis=1)
    labels, centroids = _fill_empty(X, labels, centroids, d2)
    d2 = _sq_dists_exact(X, centroids)
    inertia = float(d2[np.arange(X.shape[0]), labels].sum())
    history.append(inertia)
    return centroids, labels, inertia, it, history


def kmeans_fit(X, k: int, seed: int = 0, restarts: int = 10, max_iter: int = 300,
               tol: float = 1e-6) -> KMeansModel:
    """Best-of-``restarts`` Lloyd runs from k-means++ seeds (lowest inertia wins).

    Restart ``r`` draws from ``SeedSequence(seed).spawn(restarts)[r]``; ties on
    inertia go to the lower restart index.
    """
    X = _as_matrix(X)
    n = X.shape[0]
    if k <= 0:
        raise ValueError(f"k must be positive, got {k}")
    if k > n:
        raise ValueError(f"k={k} exceeds the number of rows ({n})")
    if restarts < 1:
        raise ValueError("restarts must be >= 1")
    best = None
    for child in np.random.SeedSequence(seed).spawn(restarts):
        rng = np.random.default_rng(child)
        init = kmeans_plusplus(X, k, rng)
        result = _lloyd(X, init, max_iter, tol)
        if best is None or result[2] < best[2]:
            best = result
    centroids, labels, inertia, iterations, history = best
    return KMeansModel(k, centroids, inertia, iterations, seed, labels, history)


def kmeans_assign(model: KMeansModel, X) -> np.ndarray:
    """Nearest centroid, lowest index on ties."""
    X = _as_matrix(X)
    if X.shape[1] != model.centroids.shape[1]:
        raise ValueError(f"X has {X.shape[1]} columns, model expects {model.centroids.shape[1]}")
    return np.argmin(_sq_dists_exact(X, model.centroids), axis=1)


def pairwise_distances(X) -> np.ndarray:
    X = _as_matrix(X)
    return np.sqrt(_sq_dists_exact(X, X))


def silhouette_samples(X, assignment) -> np.ndarray:
    labels = np.asarray(assignment)
    X = _as_matrix(X)
    if labels.shape != (X.shape[0],):
        raise ValueError("assignment length must match the rows of X")
    ids, inverse, sizes = np.unique(labels, return_inverse=True, return_counts=True)
    if ids.size < 2:
        raise ValueError("silhouette needs at least 2 clusters")
    D = pairwise_distances(X)
    onehot = np.zeros((X.shape[0], ids.size))
    onehot[np.arange(X.shape[0]), inverse] = 1.0
    sums = D @ onehot  # total distance from each point to each cluster
    own = sizes[inverse]
    with np.errstate(invalid="ignore", divide="ignore"):
        a = sums[np.arange(X.shape[0]), inverse] / (own - 1)
        mean_to = sums / sizes[None, :]
    mean_to[np.arange(X.shape[0]), inverse] = np.inf
    b = mean_to.min(1)
    denom = np.maximum(a, b)
    s = np.where(denom > 0, (b - a) / np.where(denom > 0, denom, 1.0), 0.0)
    s[own == 1] = 0.0
    return s


def silhouette_score(X, assignment) -> float:
    """Mean silhouette; members of singleton clusters score 0."""
    return float(np.mean(silhouette_samples(X, assignment)))


def silhouette_sweep(X, k_min: int = 2, k_max: int = 10, seed: int = 0,
                     restarts: int = 10) -> SilhouetteSweep:
    """Fit K-means for each k in [k_min, k_max]; best_k maximizes silhouette (smaller k on ties)."""
    X = _as_matrix(X)
    if k_min < 2:
        raise ValueError("k_min must be >= 2")
    if k_max < k_min:
        raise ValueError("k_max must be >= k_min")
    if k_max > X.shape[0] - 1:
        raise ValueError(f"k_max={k_max} exceeds n - 1 = {X.shape[0] - 1}")
    k_values, scores, models = [], [], []
    for k in range(k_min, k_max + 1):
        model = kmeans_fit(X, k, seed=seed, restarts=restarts)
        k_values.append(k)
        scores.append(silhouette_score(X, model.labels))
        models.append(model)
    best_k = k_values[int(np.argmax(scores))]
    return SilhouetteSweep(k_values, scores, best_k, models)


def ward_linkage(X) -> np.ndarray:
    """Ward merge tree via Lance-Williams updates on squared merge distances.

    Returns an (n-1) x 4 array in the usual linkage layout: the two merged node
    ids, the merge cost ``sqrt(2 n_a n_b / (n_a + n_b)) * ||c_a - c_b||`` and
    the size of the new node. Ties go to the lowest (row, column) pair.
    """
    X = _as_matrix(X)
    n = X.shape[0]
    D = _sq_dists_exact(X, X)
    np.fill_diagonal(D, np.inf)
    size = np.ones(n)
    node = np.arange(n)
    active = np.ones(n, dtype=bool)
    tree = np.zeros((max(n - 1, 0), 4))
    for step in range(n - 1):
        masked = np.where(active[:, None] & active[None, :], D, np.inf)
        flat = int(np.argmin(masked))
        i, j = divmod(flat, n)
        if i > j:
            i, j = j, i
        ni, nj = size[i], size[j]
        a, b = sorted((node[i], node[j]))
        tree[step] = (a, b, np.sqrt(D[i, j]), ni + nj)
        nk = size
        with np.errstate(invalid="ignore"):
            updated = ((ni + nk) * D[i] + (nj + nk) * D[j] - nk * D[i, j]) / (ni + nj + nk)
        D[i, :] = updated
        D[:, i] = updated
        D[i, i] = np.inf
        active[j] = False
        D[j, :] = np.inf
        D[:, j] = np.inf
        size[i] = ni + nj
        node[i] = n + step
    return tree


def cut_tree(tree: np.ndarray, n: int, k: int) -> np.ndarray:
    """Flat labels after the first n - k merges, numbered by lowest member index."""
    parent = np.arange(2 * n - 1)

    def find(x):
        while parent[x] != x:
            parent[x] = parent[parent[x]]
            x = parent[x]
        return x

    for step in range(n - k):
        a, b = int(tree[step, 0]), int(tree[step, 1])
        parent[find(a)] = n + step
        parent[find(b)] = n + step
    roots = np.array([find(i) for i in range(n)])
    _, first = np.unique(roots, return_index=True)
    order = {roots[i]: rank for rank, i in enumerate(sorted(first))}
    return np.array([order[r] for r in roots])


def agglomerative_fit(X, k: int) -> AgglomerativeModel:
    X = _as_matrix(X)
    n = X.shape[0]
    if k <= 0:
        raise ValueError(f"k must be positive, got {k}")
    if k > n:
        raise ValueError(f"k={k} exceeds the number of rows ({n})")
    tree = ward_linkage(X)
    return AgglomerativeModel(tree, k, cut_tree(tree, n, k))


def cluster_centroids(X, labels, k: int) -> np.ndarray:
    X = _as_matrix(X)
    return np.vstack([X[labels == j].mean(0) for j in range(k)])
