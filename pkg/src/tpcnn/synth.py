"""Synthetic GET-like trace generator with recorded ground truth.

Produces 512-bucket pad signals built from a slowly oscillating baseline,
shaped particle hits (with optional pileup) and white Gaussian noise. The
exact baseline curve and hit list are kept as a truth record so that every
downstream stage can be tested against known inputs.

Determinism: every trace derives its own RNG stream from
``PCG64(SeedSequence((seed, index)))``, so serial and parallel generation of
the same dataset produce identical bytes.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .trace import ADC_MAX, TRACE_LENGTH, Trace

MAX_OSC_FREQUENCY = 4.0  # cycles per record; baseline stays low-frequency


@dataclass(frozen=True)
class EdgeJump:
    """Linear ramp riding on one record edge (circular-buffer artifact stand-in)."""

    side: str  # "first" or "last"
    width: int
    height: float

    def __post_init__(self):
        if self.side not in ("first", "last"):
            raise ValueError(f"edge jump side must be 'first' or 'last', got {self.side!r}")
        if not 1 <= self.width <= TRACE_LENGTH:
            raise ValueError("edge jump width must be in [1, 512]")


@dataclass(frozen=True)
class BaselineModel:
    """Deterministic description of one baseline curve.

    oscillations is a sequence of (amplitude, frequency, phase) triples with
    frequency in cycles per 512-bucket record.
    """

    offset: float
    oscillations: tuple[tuple[float, float, float], ...] = ()
    edge_jump: EdgeJump | None = None

    def __post_init__(self):
        for amp, freq, _phase in self.oscillations:
            if amp < 0:
                raise ValueError("oscillation amplitude must be >= 0")
            if not 0 < freq <= MAX_OSC_FREQUENCY:
                raise ValueError(
                    f"oscillation frequency {freq} outside (0, {MAX_OSC_FREQUENCY}] cycles/record"
                )


@dataclass(frozen=True)
class HitTruth:
    """Ground truth for one injected hit: apex time, charge, intrinsic width."""

    time: float
    charge: float
    width_sigma: float

    def __post_init__(self):
        if not 0.0 <= self.time <= TRACE_LENGTH - 1:
            raise ValueError("hit time outside record")
        if self.charge <= 0:
            raise ValueError("hit charge must be > 0")
        if self.width_sigma <= 0:
            raise ValueError("hit width must be > 0")


@dataclass(frozen=True, eq=False)
class TruthRecord:
    """Generator-side truth for one trace: baseline curve plus hit list."""

    baseline: np.ndarray
    hits: tuple[HitTruth, ...]


@dataclass(frozen=True)
class BaselineRanges:
    """Per-trace randomization ranges for the baseline shape."""

    offset: tuple[float, float] = (200.0, 300.0)
    n_oscillations: tuple[int, int] = (1, 2)
    amplitude: tuple[float, float] = (3.0, 10.0)
    frequency: tuple[float, float] = (0.3, 1.5)
    edge_jump_probability: float = 0.3
    edge_jump_width: tuple[int, int] = (10, 30)
    edge_jump_height: tuple[float, float] = (-40.0, 40.0)


@dataclass(frozen=True)
class GenConfig:
    """Knobs for the synthetic trace generator."""

    noise_sigma: float = 5.0
    hits_min: int = 1
    hits_max: int = 3
    pileup_probability: float = 0.3
    shaping_tau: float = 4.0
    width_sigma: tuple[float, float] = (3.0, 3.5)
    charge: tuple[float, float] = (5000.0, 12000.0)
    min_separation: float = 40.0
    edge_margin: float = 30.0
    pileup_gap: tuple[float, float] = (4.0, 12.0)
    traces_per_event: int = 64
    rng_seed: int = 0
    baseline: BaselineRanges = field(default_factory=BaselineRanges)

    def __post_init__(self):
        if self.noise_sigma < 0:
            raise ValueError("noise_sigma must be >= 0")
        if not 0.0 <= self.pileup_probability <= 1.0:
            raise ValueError("pileup_probability must be a probability")
        if self.hits_min < 0 or self.hits_max < self.hits_min:
            raise ValueError("invalid hits_per_trace range")


def trace_rng(seed: int, index: int) -> np.random.Generator:
    """Independent per-trace stream: PCG64 keyed on (seed, trace index)."""
    return np.random.Generator(np.random.PCG64(np.random.SeedSequence((seed, index))))


def gen_baseline(model: BaselineModel) -> np.ndarray:
    """Evaluate the deterministic baseline curve of a model on 512 buckets."""
    i = np.arange(TRACE_LENGTH, dtype=np.float64)
    b = np.full(TRACE_LENGTH, model.offset, dtype=np.float64)
    for amp, freq, phase in model.oscillations:
        b += amp * np.sin(2.0 * np.pi * freq * i / TRACE_LENGTH + phase)
    ej = model.edge_jump
    if ej is not None:
        ramp = ej.height * (1.0 - np.arange(ej.width, dtype=np.float64) / ej.width)
        if ej.side == "first":
            b[: ej.width] += ramp
        else:
            b[TRACE_LENGTH - ej.width :] += ramp[::-1]
    return b


class PulseShape:
    """Discrete unit-area pulse: gamma-like shaper convolved with a Gaussian.

    The shaper is s(t) = (t/tau)^3 * exp(3*(1 - t/tau)) for t >= 0, which
    peaks at t = tau. Convolving with the hit's intrinsic Gaussian width and
    renormalizing gives the bucket-sampled pulse; the apex offset is located
    once (with sub-bucket parabolic refinement) so that hits can be placed
    with their pulse maximum exactly at the requested time.
    """

    def __init__(self, tau: float, width_sigma: float):
        if tau <= 0 or width_sigma <= 0:
            raise ValueError("tau and width_sigma must be > 0")
        t = np.arange(int(math.ceil(10 * tau)) + 1, dtype=np.float64)
        shaper = (t / tau) ** 3 * np.exp(3.0 * (1.0 - t / tau))
        half = int(math.ceil(4 * width_sigma))
        g = np.arange(-half, half + 1, dtype=np.float64)
        gauss = np.exp(-0.5 * (g / width_sigma) ** 2)
        kernel = np.convolve(shaper, gauss)
        kernel /= kernel.sum()
        self.kernel = kernel
        self.apex = _parabolic_apex(kernel)

    def add_to(self, out: np.ndarray, time: float, charge: float) -> None:
        """Accumulate charge * pulse into out with the apex at `time`.

        Linear interpolation between kernel samples keeps the deposited sum
        exactly equal to `charge` whenever the pulse fits inside the record
        (the interpolated tents form a partition of unity).
        """
        n = out.shape[0]
        m = self.kernel.shape[0]
        # kernel coordinate of bucket i is u = i - start; interpolated support
        # is the open interval (-1, m) around the sampled kernel
        start = time - self.apex
        i0 = max(0, int(math.floor(start)))
        i1 = min(n - 1, int(math.ceil(start + m)) - 1)
        if i1 < i0:
            return
        u = np.arange(i0, i1 + 1, dtype=np.float64) - start
        j = np.floor(u).astype(np.intp)
        frac = u - j
        jc = np.clip(j, 0, m - 1)
        lo = np.where((j >= 0) & (j < m), self.kernel[jc], 0.0)
        jn = np.clip(j + 1, 0, m - 1)
        hi = np.where((j + 1 >= 0) & (j + 1 < m), self.kernel[jn], 0.0)
        out[i0 : i1 + 1] += charge * ((1.0 - frac) * lo + frac * hi)


def _parabolic_apex(kernel: np.ndarray) -> float:
    k = int(np.argmax(kernel))
    if 0 < k < kernel.shape[0] - 1:
        left, mid, right = kernel[k - 1], kernel[k], kernel[k + 1]
        denom = left + right - 2.0 * mid
        if denom < 0:
            return k + 0.5 * (left - right) / denom
    return float(k)


def _draw_baseline_model(ranges: BaselineRanges, rng: np.random.Generator) -> BaselineModel:
    offset = rng.uniform(*ranges.offset)
    n_osc = int(rng.integers(ranges.n_oscillations[0], ranges.n_oscillations[1] + 1))
    osc = tuple(
        (
            rng.uniform(*ranges.amplitude),
            rng.uniform(*ranges.frequency),
            rng.uniform(0.0, 2.0 * np.pi),
        )
        for _ in range(n_osc)
    )
    jump = None
    if rng.uniform() < ranges.edge_jump_probability:
        side = "first" if rng.uniform() < 0.5 else "last"
        width = int(rng.integers(ranges.edge_jump_width[0], ranges.edge_jump_width[1] + 1))
        jump = EdgeJump(side, width, rng.uniform(*ranges.edge_jump_height))
    return BaselineModel(offset, osc, jump)


def _draw_hit_times(cfg: GenConfig, rng: np.random.Generator) -> list[float]:
    n = int(rng.integers(cfg.hits_min, cfg.hits_max + 1))
    lo, hi = cfg.edge_margin, TRACE_LENGTH - 1 - cfg.edge_margin
    times: list[float] = []
    for k in range(n):
        if k > 0 and rng.uniform() < cfg.pileup_probability:
            t = times[-1] + rng.uniform(*cfg.pileup_gap)
            times.append(min(max(t, lo), hi))
            continue
        t = rng.uniform(lo, hi)
        for _ in range(100):
            if all(abs(t - s) >= cfg.min_separation for s in times):
                break
            t = rng.uniform(lo, hi)
        times.append(t)
    return times


def gen_trace(
    cfg: GenConfig,
    rng: np.random.Generator,
    event_id: int = 0,
    pad_id: int = 0,
) -> tuple[Trace, TruthRecord]:
    """Generate one trace and its truth record.

    The trace is baseline + shaped hits + Gaussian noise, clamped to the ADC
    range [0, 4095]. Truth (baseline curve and hit list) is recorded before
    clamping.
    """
    model = _draw_baseline_model(cfg.baseline, rng)
    baseline = gen_baseline(model)
    samples = baseline.copy()

    hits = []
    for t in _draw_hit_times(cfg, rng):
        charge = rng.uniform(*cfg.charge)
        width = rng.uniform(*cfg.width_sigma)
        PulseShape(cfg.shaping_tau, width).add_to(samples, t, charge)
        hits.append(HitTruth(t, charge, width))
    hits.sort(key=lambda h: h.time)

    if cfg.noise_sigma > 0:
        samples += rng.normal(0.0, cfg.noise_sigma, TRACE_LENGTH)
    np.clip(samples, 0.0, ADC_MAX, out=samples)

    return Trace(event_id, pad_id, samples), TruthRecord(baseline, tuple(hits))


def gen_records(n: int, cfg: GenConfig):
    """Yield n (Trace, TruthRecord) pairs with per-index RNG streams."""
    if n < 1:
        raise ValueError("n must be >= 1")
    per_event = max(1, cfg.traces_per_event)
    for index in range(n):
        rng = trace_rng(cfg.rng_seed, index)
        yield gen_trace(cfg, rng, event_id=index // per_event, pad_id=index % per_event)


def gen_dataset(n: int, cfg: GenConfig, path) -> int:
    """Stream n generated records (with truth) into a dataset file."""
    from .datafile import write_dataset

    return write_dataset(path, gen_records(n, cfg), count=n, has_truth=True)
