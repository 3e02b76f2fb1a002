"""Per-window statistical and spectral features, plus column standardization.

The feature vector has nine entries, in this order::

    mean, variance, median, skewness, kurtosis, zcr, rms, total_power, highband_power

``kurtosis`` is excess kurtosis (a Gaussian scores 0). Signal energy, if
wanted, is ``n * rms**2``.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy import signal

FEATURE_NAMES = ("mean", "variance", "median", "skewness", "kurtosis",
                 "zcr", "rms", "total_power", "highband_power")
N_FEATURES = len(FEATURE_NAMES)

HIGHBAND_EDGE_HZ = 30.0
WELCH_SEGMENT_S = 4.0


@dataclass(frozen=True)
class FeatureVector:
    mean: float
    variance: float
    median: float
    skewness: float
    kurtosis: float
    zcr: float
    rms: float
    total_power: float
    highband_power: float

    def as_array(self) -> np.ndarray:
        return np.array([getattr(self, name) for name in FEATURE_NAMES])


def welch_psd(x: np.ndarray, fs: float) -> tuple[np.ndarray, np.ndarray]:
    """One-sided Welch PSD: Hann, 4 s segments, 50% overlap, mean of segments."""
    nperseg = min(x.size, max(1, int(round(WELCH_SEGMENT_S * fs))))
    return signal.welch(x, fs=fs, window="hann", nperseg=nperseg, noverlap=nperseg // 2,
                        detrend="constant", scaling="density", average="mean")


def zero_crossings(x: np.ndarray) -> int:
    """Strict sign changes of the mean-centred signal; exact zeros are skipped."""
    s = np.sign(x - np.mean(x))
    s = s[s != 0]
    return int(np.count_nonzero(s[1:] != s[:-1]))


def extract_features(x, fs: float) -> FeatureVector:
    x = np.asarray(x, dtype=float)
    if x.ndim != 1 or x.size == 0:
        raise ValueError("window must be a non-empty 1-D array")
    if not fs > 0:
        raise ValueError("fs must be positive")
    if not np.isfinite(x).all():
        raise ValueError("window contains non-finite samples")

    mean = float(np.mean(x))
    if np.ptp(x) == 0:
        # exactly constant: centred moments are 0 by definition, skip rounding noise
        variance = skewness = kurtosis = 0.0
        zcr = 0
    else:
        c = x - mean
        variance = float(np.mean(c ** 2))
        # shape moments are scale free; rescale first so tiny inputs do not underflow
        scale = np.max(np.abs(c))
        u = c / scale if scale > 0 else c
        m2 = float(np.mean(u ** 2))
        if m2 > 0:
            skewness = float(np.mean(u ** 3) / m2 ** 1.5)
            kurtosis = float(np.mean(u ** 4) / m2 ** 2 - 3.0)
        else:
            skewness = kurtosis = 0.0
        zcr = zero_crossings(x)

    freqs, psd = welch_psd(x, fs)
    df = freqs[1] - freqs[0] if freqs.size > 1 else fs
    total = float(np.sum(psd) * df)
    high = float(np.sum(psd[freqs > HIGHBAND_EDGE_HZ]) * df)
    return FeatureVector(
        mean=mean,
        variance=variance,
        median=float(np.median(x)),
        skewness=skewness,
        kurtosis=kurtosis,
        zcr=float(zcr),
        rms=float(np.sqrt(np.mean(x ** 2))),
        total_power=total,
        highband_power=min(high, total),
    )


def feature_matrix(windows, fs: float) -> np.ndarray:
    """Stack feature vectors of an iterable of sample arrays into an n x 9 matrix."""
    rows = [extract_features(w, fs).as_array() for w in windows]
    if not rows:
        return np.empty((0, N_FEATURES))
    return np.vstack(rows)


@dataclass(frozen=True)
class Standardizer:
    mean: np.ndarray
    std: np.ndarray

    def transform(self, X) -> np.ndarray:
        return apply_standardizer(self, X)

    def to_dict(self) -> dict:
        return {"mean": self.mean.tolist(), "std": self.std.tolist()}

    @classmethod
    def from_dict(cls, d) -> "Standardizer":
        return cls(np.asarray(d["mean"], dtype=float), np.asarray(d["std"], dtype=float))


def fit_standardizer(X) -> Standardizer:
    X = np.atleast_2d(np.asarray(X, dtype=float))
    if X.shape[0] == 0:
        raise ValueError("cannot fit a standardizer on an empty matrix")
    std = X.std(axis=0)
    std[np.ptp(X, axis=0) == 0] = 0.0
    return Standardizer(X.mean(axis=0), std)


def apply_standardizer(S: Standardizer, X) -> np.ndarray:
    X = np.atleast_2d(np.asarray(X, dtype=float))
    if X.shape[1] != S.mean.size:
        raise ValueError(f"expected {S.mean.size} columns, got {X.shape[1]}")
    out = np.zeros_like(X)
    ok = S.std > 0
    out[:, ok] = (X[:, ok] - S.mean[ok]) / S.std[ok]
    return out
