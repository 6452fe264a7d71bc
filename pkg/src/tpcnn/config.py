"""Single JSON configuration with one section per pipeline area.

Every tunable that the toolkit uses has an explicit default here, so a dumped
config file shows the full parameter surface; a user file only needs the keys
it overrides.
"""

from __future__ import annotations

import dataclasses
import json
from dataclasses import dataclass, field
from pathlib import Path

from .classical import GoldParams, ResponseMatrix, SnipParams
from .stages import TrainConfig
from .synth import BaselineRanges, GenConfig


@dataclass(frozen=True)
class GoldConfig:
    """Response width plus the deconvolution iteration settings."""

    sigma: float = 2.2
    iterations: int = 100
    boosting_rounds: int = 0
    boost_power: float = 2.0
    threshold: float = 150.0

    @property
    def params(self) -> GoldParams:
        return GoldParams(self.iterations, self.boosting_rounds, self.boost_power, self.threshold)

    def response(self, length: int = 512) -> ResponseMatrix:
        return ResponseMatrix(self.sigma, length)


@dataclass(frozen=True)
class PeaksConfig:
    min_separation: float = 4.0
    half_width: int = 5
    score_cut: float = 0.5


@dataclass(frozen=True)
class BenchConfig:
    repeat: int = 3
    batch_size: int = 256
    single_thread: bool = True


@dataclass
class Config:
    gen: GenConfig = field(default_factory=GenConfig)
    snip: SnipParams = field(default_factory=SnipParams)
    gold: GoldConfig = field(default_factory=GoldConfig)
    peaks: PeaksConfig = field(default_factory=PeaksConfig)
    train: TrainConfig = field(default_factory=TrainConfig)
    bench: BenchConfig = field(default_factory=BenchConfig)

    def to_dict(self) -> dict:
        return dataclasses.asdict(self)


def _tuplify(d: dict) -> dict:
    return {k: tuple(v) if isinstance(v, list) else v for k, v in d.items()}


def _merge(cls, defaults, overrides: dict | None):
    base = dataclasses.asdict(defaults)
    base.update(overrides or {})
    return cls(**_tuplify(base))


def config_from_dict(data: dict) -> Config:
    unknown = set(data) - {"gen", "snip", "gold", "peaks", "train", "bench"}
    if unknown:
        raise ValueError(f"unknown config sections: {sorted(unknown)}")
    gen_data = dict(data.get("gen") or {})
    baseline = _merge(BaselineRanges, BaselineRanges(), gen_data.pop("baseline", None))
    gen_defaults = dataclasses.asdict(GenConfig())
    gen_defaults.pop("baseline")
    gen_defaults.update(gen_data)
    gen = GenConfig(baseline=baseline, **_tuplify(gen_defaults))
    return Config(
        gen=gen,
        snip=_merge(SnipParams, SnipParams(), data.get("snip")),
        gold=_merge(GoldConfig, GoldConfig(), data.get("gold")),
        peaks=_merge(PeaksConfig, PeaksConfig(), data.get("peaks")),
        train=_merge(TrainConfig, TrainConfig(), data.get("train")),
        bench=_merge(BenchConfig, BenchConfig(), data.get("bench")),
    )


def load_config(path=None) -> Config:
    """Defaults, or defaults overlaid with the sections found in a JSON file."""
    if path is None:
        return Config()
    data = json.loads(Path(path).read_text())
    return config_from_dict(data)


def dump_config(cfg: Config, path=None) -> str:
    text = json.dumps(cfg.to_dict(), indent=2, sort_keys=True) + "\n"
    if path is not None:
        Path(path).write_text(text)
    return text
