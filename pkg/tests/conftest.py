import itertools
import math

import numpy as np
import pytest


def brute_force_min_inertia(X, k=2):
    """Minimum within-cluster sum of squares over every partition into k non-empty groups."""
    X = np.asarray(X, dtype=float)
    if X.ndim == 1:
        X = X[:, None]
    n = X.shape[0]
    best = math.inf
    for rest in itertools.product(range(k), repeat=n - 1):
        labels = (0,) + rest
        if len(set(labels)) != k:
            continue
        total = 0.0
        for j in range(k):
            members = [X[i] for i in range(n) if labels[i] == j]
            centre = sum(members) / len(members)
            total += sum(float(((m - centre) ** 2).sum()) for m in members)
        best = min(best, total)
    return best


def reference_silhouette(X, labels):
    """Point-by-point silhouette with explicit loops."""
    X = np.asarray(X, dtype=float)
    n = len(labels)
    dist = lambda i, j: math.sqrt(sum((a - b) ** 2 for a, b in zip(X[i], X[j])))  # noqa: E731
    clusters = sorted(set(labels))
    total = 0.0
    for i in range(n):
        own = [j for j in range(n) if labels[j] == labels[i] and j != i]
        if not own:
            continue
        a = sum(dist(i, j) for j in own) / len(own)
        b = min(
            sum(dist(i, j) for j in range(n) if labels[j] == c) / sum(1 for j in range(n) if labels[j] == c)
            for c in clusters if c != labels[i]
        )
        if max(a, b) > 0:
            total += (b - a) / max(a, b)
    return total / n


def periodogram_power(x, fs, above=None):
    """Total (or > ``above`` Hz) power from a single full-length one-sided periodogram."""
    x = np.asarray(x, dtype=float) - np.mean(x)
    n = x.size
    spec = np.abs(np.fft.rfft(x)) ** 2 / (fs * n)
    spec[1:] *= 2
    if n % 2 == 0:
        spec[-1] /= 2
    freqs = np.fft.rfftfreq(n, 1 / fs)
    df = fs / n
    if above is not None:
        spec = spec[freqs > above]
    return float(spec.sum() * df)


@pytest.fixture(scope="session")
def default_ecg():
    from bioclust.synthgen import ProtocolConfig, generate_protocol_recording
    return generate_protocol_recording(ProtocolConfig(seed=3), "ecg")
