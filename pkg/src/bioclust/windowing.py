"""Fixed-length sliding windows over a :class:`SignalRecord`."""
from __future__ import annotations

import logging
from dataclasses import dataclass

import numpy as np

from .ingest import LABELS, SignalRecord

log = logging.getLogger(__name__)


@dataclass(frozen=True)
class Window:
    start: int
    length: int
    label: int
    parent: str = ""

    @property
    def stop(self) -> int:
        return self.start + self.length

    def samples(self, record: SignalRecord) -> np.ndarray:
        return record.samples[self.start:self.stop]


def assign_window_label(record: SignalRecord, window: Window | tuple[int, int]) -> int:
    """Modal sample label inside the window; ties go to the larger (noisier) label."""
    start, length = (window.start, window.length) if isinstance(window, Window) else window
    counts = np.bincount(record.labels[start:start + length], minlength=len(LABELS))
    # reversed argmax picks the largest label among the tied maxima
    return int(len(counts) - 1 - np.argmax(counts[::-1]))


def slide_windows(record: SignalRecord, window_seconds: float = 120.0,
                  stride_seconds: float = 30.0) -> list[Window]:
    """Windows starting at 0, stride, 2*stride, ...

    A trailing partial window is dropped, as is any window overlapping a sample
    that the record's validity mask rejects.
    """
    if not stride_seconds > 0:
        raise ValueError("stride_seconds must be positive")
    if not window_seconds > 0:
        raise ValueError("window_seconds must be positive")
    length = int(round(window_seconds * record.fs))
    stride = int(round(stride_seconds * record.fs))
    if stride < 1:
        raise ValueError("stride shorter than one sample")
    n = len(record)
    if length > n:
        log.warning("window of %g s is longer than record %r (%g s); no windows",
                    window_seconds, record.source_id, record.duration)
        return []

    starts = np.arange(0, n - length + 1, stride)
    # invalid-sample count inside [start, start + length) via prefix sums
    bad = np.concatenate(([0], np.cumsum(~record.valid)))
    clean = bad[starts + length] - bad[starts] == 0
    if not clean.all():
        log.info("excluding %d window(s) of %r that overlap invalid samples",
                 int((~clean).sum()), record.source_id)
    return [Window(int(s), length, assign_window_label(record, (int(s), length)), record.source_id)
            for s in starts[clean]]
