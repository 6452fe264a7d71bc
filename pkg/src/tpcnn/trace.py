"""Core domain types for digitized pad signals.

A trace is one 512-bucket digital signal read from a single pad. Everything
downstream (baseline removal, deconvolution, peak extraction) consumes and
produces these types. All values are stored as float64 even though raw ADC
samples are 12-bit integers; the processing chain is real-valued throughout.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

TRACE_LENGTH = 512
ADC_MAX = 4095.0


def _as_samples(values, length: int = TRACE_LENGTH) -> np.ndarray:
    arr = np.asarray(values, dtype=np.float64)
    if arr.ndim != 1 or arr.shape[0] != length:
        raise ValueError(
            f"trace must have exactly {length} samples, got shape {arr.shape}"
        )
    if not np.all(np.isfinite(arr)):
        raise ValueError("trace samples must be finite")
    arr = arr.copy()
    arr.flags.writeable = False
    return arr


@dataclass(frozen=True, eq=False)
class Trace:
    """One digitized pad signal: 512 time buckets plus channel identity."""

    event_id: int
    pad_id: int
    samples: np.ndarray

    def __post_init__(self):
        if self.event_id < 0 or self.pad_id < 0:
            raise ValueError("event_id and pad_id must be non-negative")
        object.__setattr__(self, "samples", _as_samples(self.samples))

    def with_samples(self, samples) -> "Trace":
        return Trace(self.event_id, self.pad_id, samples)


@dataclass(frozen=True, eq=False)
class ScoreMap:
    """Per-bucket peak-membership scores in [0, 1]."""

    scores: np.ndarray

    def __post_init__(self):
        arr = _as_samples(self.scores)
        if arr.min() < 0.0 or arr.max() > 1.0:
            raise ValueError("scores must lie in [0, 1]")
        object.__setattr__(self, "scores", arr)


@dataclass(frozen=True)
class PeakWindow:
    """A contiguous bucket range holding one peak, with centroid and integral."""

    lo: int
    hi: int
    centroid: float
    charge: float

    def __post_init__(self):
        if not (0 <= self.lo <= self.centroid <= self.hi <= TRACE_LENGTH - 1):
            raise ValueError(
                f"window must satisfy 0 <= lo <= centroid <= hi <= 511, "
                f"got lo={self.lo} centroid={self.centroid} hi={self.hi}"
            )
        if self.charge < 0:
            raise ValueError("window charge must be >= 0")


@dataclass(frozen=True)
class Hit:
    """One reconstructed particle hit on a pad: drift time and charge."""

    pad_id: int
    time: float
    charge: float

    def __post_init__(self):
        if not 0.0 <= self.time <= TRACE_LENGTH - 1:
            raise ValueError(f"hit time {self.time} outside [0, 511]")
        if self.charge <= 0:
            raise ValueError("hit charge must be > 0")


def subtract(a: Trace, b: Trace) -> Trace:
    """Sample-wise difference a - b, preserving the channel identity.

    Both traces must describe the same pad in the same event.
    """
    if a.samples.shape != b.samples.shape:
        raise ValueError("trace length mismatch")
    if a.pad_id != b.pad_id or a.event_id != b.event_id:
        raise ValueError(
            f"trace identity mismatch: ({a.event_id},{a.pad_id}) vs "
            f"({b.event_id},{b.pad_id})"
        )
    return Trace(a.event_id, a.pad_id, a.samples - b.samples)


def integrate(t: Trace, w: PeakWindow) -> float:
    """Sum of samples over the window's inclusive bucket range."""
    if not (0 <= w.lo <= w.hi < t.samples.shape[0]):
        raise ValueError(f"window [{w.lo}, {w.hi}] outside trace range")
    return float(np.sum(t.samples[w.lo : w.hi + 1]))
