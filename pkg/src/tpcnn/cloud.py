"""Point-cloud assembly: pad hits to 3D space points.

A pad plane maps pad ids to (x, y) positions in mm; each hit contributes one
point at (x, y, drift time, charge). Drift time stays in buckets — converting
to mm is a single multiplication by drift velocity that calibration-aware
consumers apply themselves.
"""

from __future__ import annotations

import csv
import json
import math
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .trace import Hit


@dataclass(frozen=True)
class PadPlane:
    """Lookup from pad id to padplane position."""

    positions: dict[int, tuple[float, float]]

    @property
    def pad_count(self) -> int:
        return len(self.positions)

    def __contains__(self, pad_id: int) -> bool:
        return pad_id in self.positions


@dataclass(frozen=True)
class CloudPoint:
    x: float
    y: float
    t: float
    q: float
    pad_id: int
    event_id: int


@dataclass(frozen=True)
class PointCloudEvent:
    event_id: int
    points: tuple[CloudPoint, ...]

    def __post_init__(self):
        for p in self.points:
            if p.event_id != self.event_id:
                raise ValueError(
                    f"point from event {p.event_id} in cloud for event {self.event_id}"
                )


def load_padplane(path) -> PadPlane:
    """Read a pad geometry CSV with header pad_id,x,y."""
    positions: dict[int, tuple[float, float]] = {}
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        header = next(reader, None)
        if header is None or [c.strip() for c in header[:3]] != ["pad_id", "x", "y"]:
            raise ValueError(f"padplane CSV must have columns pad_id,x,y, got {header}")
        isfinite = math.isfinite
        for row in reader:
            if not row:
                continue
            pad = int(row[0])
            if pad in positions:
                raise ValueError(f"duplicate pad_id {pad} in padplane file")
            x, y = float(row[1]), float(row[2])
            if not (isfinite(x) and isfinite(y)):
                raise ValueError(f"non-finite coordinates for pad_id {pad}")
            positions[pad] = (x, y)
    return PadPlane(positions)


def write_padplane(plane: PadPlane, path) -> None:
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["pad_id", "x", "y"])
        for pad in sorted(plane.positions):
            x, y = plane.positions[pad]
            writer.writerow([pad, f"{x:.6g}", f"{y:.6g}"])


def grid_padplane(nx: int, ny: int, pitch: float = 4.0) -> PadPlane:
    """Synthetic rectangular pad grid centered on the origin, row-major ids."""
    if nx < 1 or ny < 1 or pitch <= 0:
        raise ValueError("grid needs nx, ny >= 1 and pitch > 0")
    positions = {}
    x0 = -(nx - 1) * pitch / 2.0
    y0 = -(ny - 1) * pitch / 2.0
    for j in range(ny):
        for i in range(nx):
            positions[j * nx + i] = (x0 + i * pitch, y0 + j * pitch)
    return PadPlane(positions)


def assemble(hits: list[Hit], plane: PadPlane, event_id: int = 0) -> PointCloudEvent:
    """One CloudPoint per hit; every hit keeps its charge and drift time."""
    points = []
    for h in hits:
        if h.pad_id not in plane:
            raise KeyError(f"pad_id {h.pad_id} not present in padplane")
        x, y = plane.positions[h.pad_id]
        points.append(CloudPoint(x, y, h.time, h.charge, h.pad_id, event_id))
    return PointCloudEvent(event_id, tuple(points))


CLOUD_COLUMNS = ["event_id", "pad_id", "x", "y", "t", "q"]


def export_cloud(clouds, path, fmt: str | None = None) -> None:
    """Write events to CSV (default) or JSON; fmt inferred from the suffix.

    Values are emitted with 6 significant digits in both formats.
    """
    if isinstance(clouds, PointCloudEvent):
        clouds = [clouds]
    if fmt is None:
        fmt = "json" if str(path).endswith(".json") else "csv"
    points = [p for cloud in clouds for p in cloud.points]
    if fmt == "json":
        rows = [
            {
                "event_id": p.event_id,
                "pad_id": p.pad_id,
                "x": float(f"{p.x:.6g}"),
                "y": float(f"{p.y:.6g}"),
                "t": float(f"{p.t:.6g}"),
                "q": float(f"{p.q:.6g}"),
            }
            for p in points
        ]
        Path(path).write_text(json.dumps(rows, indent=1) + "\n")
        return
    if fmt != "csv":
        raise ValueError(f"unknown cloud format {fmt!r}")
    lines = [",".join(CLOUD_COLUMNS)]
    lines.extend(
        f"{p.event_id},{p.pad_id},{p.x:.6g},{p.y:.6g},{p.t:.6g},{p.q:.6g}"
        for p in points
    )
    Path(path).write_text("\n".join(lines) + "\n")


def read_cloud(path) -> list[PointCloudEvent]:
    """Read back an exported cloud file (either format) grouped by event."""
    if str(path).endswith(".json"):
        rows = json.loads(Path(path).read_text())
    else:
        with open(path, newline="") as fh:
            rows = [
                {k: (int(v) if k in ("event_id", "pad_id") else float(v)) for k, v in row.items()}
                for row in csv.DictReader(fh)
            ]
    by_event: dict[int, list[CloudPoint]] = {}
    for r in rows:
        p = CloudPoint(r["x"], r["y"], r["t"], r["q"], int(r["pad_id"]), int(r["event_id"]))
        by_event.setdefault(p.event_id, []).append(p)
    return [PointCloudEvent(ev, tuple(pts)) for ev, pts in sorted(by_event.items())]
