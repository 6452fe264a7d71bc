import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from hypothesis.extra import numpy as hnp

from tpcnn.classical import to_peak_window
from tpcnn.synth import GenConfig, gen_trace, trace_rng
from tpcnn.trace import Hit, PeakWindow, ScoreMap, Trace, integrate, subtract

samples_512 = hnp.arrays(
    np.float64,
    (512,),
    elements=st.floats(-1e6, 1e6, allow_nan=False, allow_infinity=False),
)


class TestTraceType:
    def test_valid_construction(self):
        t = Trace(3, 7, np.zeros(512))
        assert t.event_id == 3 and t.pad_id == 7
        assert t.samples.shape == (512,)

    def test_wrong_length_rejected(self):
        with pytest.raises(ValueError, match="512"):
            Trace(0, 0, np.array([10.0, 12.0]))

    def test_non_finite_rejected(self):
        bad = np.zeros(512)
        bad[100] = np.nan
        with pytest.raises(ValueError, match="finite"):
            Trace(0, 0, bad)

    def test_negative_ids_rejected(self):
        with pytest.raises(ValueError):
            Trace(-1, 0, np.zeros(512))

    def test_samples_immutable(self):
        t = Trace(0, 0, np.zeros(512))
        with pytest.raises(ValueError):
            t.samples[0] = 1.0


class TestScoreMap:
    def test_range_enforced(self):
        with pytest.raises(ValueError, match="0, 1"):
            ScoreMap(np.full(512, 1.5))

    def test_binary_ok(self):
        m = ScoreMap((np.arange(512) % 2).astype(float))
        assert m.scores.max() == 1.0


class TestPeakWindow:
    def test_ordering_enforced(self):
        with pytest.raises(ValueError):
            PeakWindow(10, 5, 7.0, 1.0)
        with pytest.raises(ValueError):
            PeakWindow(5, 10, 12.0, 1.0)

    def test_negative_charge_rejected(self):
        with pytest.raises(ValueError):
            PeakWindow(5, 10, 7.0, -1.0)


class TestHit:
    def test_invariants(self):
        with pytest.raises(ValueError):
            Hit(0, 600.0, 5.0)
        with pytest.raises(ValueError):
            Hit(0, 100.0, 0.0)


class TestSubtract:
    def test_identity_case(self):
        a = Trace(0, 0, np.full(512, 5.0))
        assert np.all(subtract(a, a).samples == 0.0)

    def test_identity_metadata_preserved(self):
        a = Trace(2, 9, np.full(512, 10.0))
        b = Trace(2, 9, np.full(512, 3.0))
        out = subtract(a, b)
        assert (out.event_id, out.pad_id) == (2, 9)
        assert np.all(out.samples == 7.0)

    def test_identity_mismatch_rejected(self):
        a = Trace(0, 1, np.zeros(512))
        b = Trace(0, 2, np.zeros(512))
        with pytest.raises(ValueError, match="identity"):
            subtract(a, b)

    def test_short_traces_unconstructible(self):
        # the length-2 toy case fails at the type boundary already
        with pytest.raises(ValueError):
            Trace(0, 0, [10.0, 12.0])

    def test_residual_rms_matches_noise(self):
        # raw minus its true baseline leaves shaped hits plus noise; away from
        # the hits the residual RMS is the generator's noise sigma
        cfg = GenConfig(noise_sigma=5.0, hits_min=0, hits_max=0)
        rms = []
        for i in range(30):
            tr, truth = gen_trace(cfg, trace_rng(1, i))
            baseline = Trace(tr.event_id, tr.pad_id, truth.baseline)
            rms.append(np.sqrt(np.mean(subtract(tr, baseline).samples ** 2)))
        assert abs(np.mean(rms) - cfg.noise_sigma) < 0.5

    @given(samples_512)
    @settings(deadline=None, max_examples=25)
    def test_self_subtraction_is_zero(self, samples):
        t = Trace(0, 0, samples)
        assert np.all(subtract(t, t).samples == 0.0)


class TestIntegrate:
    def test_simple_run(self):
        s = np.zeros(512)
        s[100:103] = [1.0, 2.0, 3.0]
        t = Trace(0, 0, s)
        assert integrate(t, PeakWindow(100, 102, 101.0, 6.0)) == 6.0

    def test_width_one(self):
        s = np.zeros(512)
        s[50] = 4.25
        t = Trace(0, 0, s)
        assert integrate(t, PeakWindow(50, 50, 50.0, 4.25)) == 4.25

    def test_gaussian_three_sigma_fraction(self):
        # oracle: sum the sampled unit-area Gaussian inside centroid +- 3 sigma
        sigma, center = 5.0, 256
        i = np.arange(512)
        g = np.exp(-0.5 * ((i - center) / sigma) ** 2)
        g /= g.sum()
        t = Trace(0, 0, g * 1000.0)
        lo, hi = center - 15, center + 15
        expected = g[lo : hi + 1].sum() * 1000.0
        w = PeakWindow(lo, hi, float(center), expected)
        assert integrate(t, w) == pytest.approx(expected)
        # discrete buckets integrate half a bucket beyond +-3 sigma on each
        # side, so the captured fraction is 0.998, a touch above erf(3/sqrt(2))
        assert integrate(t, w) == pytest.approx(998.1, abs=0.2)

    @given(samples_512, st.integers(0, 511), st.integers(0, 511), st.integers(0, 511))
    @settings(deadline=None, max_examples=50)
    def test_additive_over_adjacent_windows(self, samples, a, b, c):
        lo, hi = min(a, b, c), max(a, b, c)
        mid = sorted((a, b, c))[1]
        if mid == hi:
            return
        t = Trace(0, 0, samples)
        whole = integrate(t, PeakWindow(lo, hi, float(lo), 0.0))
        left = integrate(t, PeakWindow(lo, mid, float(lo), 0.0))
        right = integrate(t, PeakWindow(mid + 1, hi, float(mid + 1), 0.0))
        assert whole == pytest.approx(left + right, rel=1e-12, abs=1e-9)


def test_peak_window_from_run_respects_bounds():
    s = np.zeros(512)
    s[10:15] = [1.0, 5.0, 2.0, 0.5, 0.25]
    w = to_peak_window(s, 10, 14)
    assert w is not None and 10 <= w.centroid <= 14
    assert w.charge == pytest.approx(8.75)
