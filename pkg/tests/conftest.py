import numpy as np
import pytest

from tpcnn.synth import GenConfig, gen_trace, trace_rng
from tpcnn.trace import Trace


@pytest.fixture
def flat_trace():
    return Trace(0, 0, np.full(512, 250.0))


def make_traces(cfg: GenConfig, n: int, seed: int = 0):
    """Generate n (Trace, TruthRecord) pairs with per-index streams."""
    out = []
    for i in range(n):
        out.append(gen_trace(cfg, trace_rng(seed, i), event_id=0, pad_id=i))
    return out
