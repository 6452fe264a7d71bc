"""Binary trace dataset format: magic "TPCD", versioned, CRC-checked.

Little-endian layout:

    magic    4s  = b"TPCD"
    version  u32 = 1
    count    u64
    flags    u32 (bit 0: truth blocks present, bit 1: label blocks present)
    per record:
        event_id u32, pad_id u32, samples u16[512]
        truth block (if flagged):  baseline f32[512], n_hits u32,
                                   then (time f32, charge f32, sigma f32) per hit
        label block (if flagged):  teacher baseline f32[512],
                                   teacher deconvolved f32[512], scores u8[512]
    crc32    u32 over all record bytes

Raw samples are quantized to the 12-bit ADC scale on write; truth and label
arrays keep f32 precision.
"""

from __future__ import annotations

import struct
import zlib
from dataclasses import dataclass
from pathlib import Path
from typing import Iterable, Iterator

import numpy as np

from .synth import HitTruth, TruthRecord
from .trace import ADC_MAX, TRACE_LENGTH, Trace

MAGIC = b"TPCD"
FORMAT_VERSION = 1
FLAG_TRUTH = 1
FLAG_LABELS = 2

_HEADER = struct.Struct("<4sIQI")


class DatasetFormatError(ValueError):
    """File is not a readable dataset (bad magic, truncated, CRC mismatch...)."""


class DatasetVersionError(DatasetFormatError):
    def __init__(self, found: int):
        super().__init__(
            f"dataset format version {found} not supported (expected {FORMAT_VERSION})"
        )
        self.found = found
        self.expected = FORMAT_VERSION


@dataclass(frozen=True, eq=False)
class Record:
    """One stored trace with optional truth and teacher-label blocks."""

    event_id: int
    pad_id: int
    samples: np.ndarray
    truth: TruthRecord | None = None
    label_baseline: np.ndarray | None = None
    label_deconv: np.ndarray | None = None
    label_scores: np.ndarray | None = None


@dataclass(eq=False)
class Dataset:
    """Column-oriented in-memory view of a dataset file."""

    event_ids: np.ndarray
    pad_ids: np.ndarray
    samples: np.ndarray
    truth_baseline: np.ndarray | None = None
    truth_hits: list[tuple[HitTruth, ...]] | None = None
    label_baseline: np.ndarray | None = None
    label_deconv: np.ndarray | None = None
    label_scores: np.ndarray | None = None

    def __len__(self) -> int:
        return self.samples.shape[0]

    @property
    def has_truth(self) -> bool:
        return self.truth_baseline is not None

    @property
    def has_labels(self) -> bool:
        return self.label_baseline is not None

    def trace(self, i: int) -> Trace:
        return Trace(int(self.event_ids[i]), int(self.pad_ids[i]), self.samples[i])

    def records(self) -> Iterator[Record]:
        for i in range(len(self)):
            truth = None
            if self.has_truth:
                truth = TruthRecord(self.truth_baseline[i], self.truth_hits[i])
            yield Record(
                int(self.event_ids[i]),
                int(self.pad_ids[i]),
                self.samples[i],
                truth,
                self.label_baseline[i] if self.has_labels else None,
                self.label_deconv[i] if self.has_labels else None,
                self.label_scores[i] if self.has_labels else None,
            )


def _quantize(samples: np.ndarray) -> np.ndarray:
    return np.clip(np.round(samples), 0, ADC_MAX).astype("<u2")


def _record_bytes(rec: Record, has_truth: bool, has_labels: bool) -> bytes:
    parts = [struct.pack("<II", rec.event_id, rec.pad_id), _quantize(rec.samples).tobytes()]
    if has_truth:
        if rec.truth is None:
            raise ValueError("dataset flagged with truth but record has none")
        parts.append(np.asarray(rec.truth.baseline, dtype="<f4").tobytes())
        parts.append(struct.pack("<I", len(rec.truth.hits)))
        for h in rec.truth.hits:
            parts.append(struct.pack("<fff", h.time, h.charge, h.width_sigma))
    if has_labels:
        if rec.label_baseline is None or rec.label_deconv is None or rec.label_scores is None:
            raise ValueError("dataset flagged with labels but record has none")
        parts.append(np.asarray(rec.label_baseline, dtype="<f4").tobytes())
        parts.append(np.asarray(rec.label_deconv, dtype="<f4").tobytes())
        parts.append(np.asarray(rec.label_scores, dtype=np.float64).round().astype("u1").tobytes())
    return b"".join(parts)


def write_dataset(
    path,
    records: Iterable,
    count: int,
    has_truth: bool = False,
    has_labels: bool = False,
) -> int:
    """Stream records to a dataset file; returns the number written.

    Records may be Record instances or (Trace, TruthRecord) pairs as produced
    by the generator.
    """
    flags = (FLAG_TRUTH if has_truth else 0) | (FLAG_LABELS if has_labels else 0)
    crc = 0
    written = 0
    with open(path, "wb") as fh:
        fh.write(_HEADER.pack(MAGIC, FORMAT_VERSION, count, flags))
        for rec in records:
            if isinstance(rec, tuple):
                trace, truth = rec
                rec = Record(trace.event_id, trace.pad_id, trace.samples, truth)
            blob = _record_bytes(rec, has_truth, has_labels)
            crc = zlib.crc32(blob, crc)
            fh.write(blob)
            written += 1
        fh.write(struct.pack("<I", crc & 0xFFFFFFFF))
    if written != count:
        raise ValueError(f"wrote {written} records but header promised {count}")
    return written


class _Cursor:
    def __init__(self, data: bytes):
        self.data = data
        self.pos = 0

    def take(self, n: int) -> bytes:
        if self.pos + n > len(self.data):
            raise DatasetFormatError("dataset file truncated")
        out = self.data[self.pos : self.pos + n]
        self.pos += n
        return out


def read_dataset(path) -> Dataset:
    """Load a dataset file into arrays, validating CRC and structure."""
    data = Path(path).read_bytes()
    if len(data) < _HEADER.size + 4:
        raise DatasetFormatError("dataset file truncated")
    magic, version, count, flags = _HEADER.unpack_from(data, 0)
    if magic != MAGIC:
        raise DatasetFormatError("bad magic: not a dataset file")
    if version != FORMAT_VERSION:
        raise DatasetVersionError(version)
    has_truth = bool(flags & FLAG_TRUTH)
    has_labels = bool(flags & FLAG_LABELS)

    payload = data[_HEADER.size : -4]
    (crc_stored,) = struct.unpack("<I", data[-4:])
    if zlib.crc32(payload) & 0xFFFFFFFF != crc_stored:
        raise DatasetFormatError("dataset CRC mismatch")

    cur = _Cursor(payload)
    n = TRACE_LENGTH
    event_ids = np.empty(count, dtype=np.int64)
    pad_ids = np.empty(count, dtype=np.int64)
    samples = np.empty((count, n))
    truth_baseline = np.empty((count, n)) if has_truth else None
    truth_hits: list[tuple[HitTruth, ...]] | None = [] if has_truth else None
    label_baseline = np.empty((count, n)) if has_labels else None
    label_deconv = np.empty((count, n)) if has_labels else None
    label_scores = np.empty((count, n)) if has_labels else None

    for i in range(count):
        event_ids[i], pad_ids[i] = struct.unpack("<II", cur.take(8))
        samples[i] = np.frombuffer(cur.take(2 * n), dtype="<u2")
        if has_truth:
            truth_baseline[i] = np.frombuffer(cur.take(4 * n), dtype="<f4")
            (n_hits,) = struct.unpack("<I", cur.take(4))
            hits = []
            for _ in range(n_hits):
                t, q, s = struct.unpack("<fff", cur.take(12))
                hits.append(HitTruth(t, q, s))
            truth_hits.append(tuple(hits))
        if has_labels:
            label_baseline[i] = np.frombuffer(cur.take(4 * n), dtype="<f4")
            label_deconv[i] = np.frombuffer(cur.take(4 * n), dtype="<f4")
            label_scores[i] = np.frombuffer(cur.take(n), dtype="u1")
    if cur.pos != len(payload):
        raise DatasetFormatError("trailing bytes after last record")

    return Dataset(
        event_ids,
        pad_ids,
        samples,
        truth_baseline,
        truth_hits,
        label_baseline,
        label_deconv,
        label_scores,
    )
