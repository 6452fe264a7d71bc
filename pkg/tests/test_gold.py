import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from hypothesis.extra import numpy as hnp

from tpcnn.classical import GoldParams, ResponseMatrix, gold_deconvolve, gold_deconvolve_array
from tpcnn.synth import PulseShape
from tpcnn.trace import Trace


def brute_force_gold(y, sigma, iterations, length):
    """Independent oracle: explicit matrices and pure-python loops."""
    import math

    half = int(math.ceil(4.0 * sigma))
    kernel = [math.exp(-0.5 * (d / sigma) ** 2) for d in range(-half, half + 1)]
    s = sum(kernel)
    kernel = [k / s for k in kernel]

    a = [[0.0] * length for _ in range(length)]
    for i in range(length):
        for d in range(-half, half + 1):
            j = min(max(i + d, 0), length - 1)
            a[i][j] += kernel[d + half]

    ata = [
        [sum(a[k][i] * a[k][j] for k in range(length)) for j in range(length)]
        for i in range(length)
    ]

    y = [max(v, 0.0) for v in y]
    aty = [sum(a[k][i] * y[k] for k in range(length)) for i in range(length)]
    x = [max(v, 1e-10) for v in aty]
    for _ in range(iterations):
        denom = [sum(ata[i][j] * x[j] for j in range(length)) for i in range(length)]
        x = [xi * (n / max(d, 1e-10)) for xi, n, d in zip(x, aty, denom)]
    return np.array(x)


class TestResponseMatrix:
    def test_kernel_unit_area(self):
        r = ResponseMatrix(4.0)
        assert abs(r.kernel.sum() - 1.0) < 1e-12

    def test_delta_reproduces_kernel(self):
        r = ResponseMatrix(3.0)
        delta = np.zeros(512)
        delta[200] = 1.0
        out = r.apply(delta)
        half = r.half_width
        np.testing.assert_allclose(out[200 - half : 200 + half + 1], r.kernel, atol=1e-15)

    def test_rows_sum_to_one(self):
        r = ResponseMatrix(2.0, length=64)
        np.testing.assert_allclose(r.matrix.sum(axis=1), 1.0, atol=1e-12)

    def test_invalid_sigma(self):
        with pytest.raises(ValueError):
            ResponseMatrix(0.0)


class TestGoldBasics:
    def test_zero_input_zero_output(self):
        r = ResponseMatrix(4.0)
        t = Trace(0, 0, np.zeros(512))
        out = gold_deconvolve(t, r, GoldParams(iterations=50))
        np.testing.assert_allclose(out.samples, 0.0, atol=1e-12)

    def test_non_finite_rejected(self):
        r = ResponseMatrix(4.0, length=16)
        y = np.zeros(16)
        y[3] = np.inf
        with pytest.raises(ValueError, match="non-finite"):
            gold_deconvolve_array(y, r, GoldParams(iterations=1))

    def test_length_mismatch_rejected(self):
        r = ResponseMatrix(4.0, length=16)
        with pytest.raises(ValueError, match="length"):
            gold_deconvolve_array(np.zeros(32), r, GoldParams(iterations=1))

    def test_delta_recovery(self):
        # narrow response converges quickly: after 200 iterations at least
        # 95% of the mass sits within one bucket of the true position
        r = ResponseMatrix(2.0)
        y = np.zeros(512)
        y[256] = 1.0
        y = r.apply(y)
        x = gold_deconvolve_array(y, r, GoldParams(iterations=200))
        assert x[255:258].sum() / x.sum() >= 0.95
        assert np.argmax(x) == 256

    def test_two_close_pulses_split_with_boosting(self):
        # pileup twin 6 buckets apart, unresolved in y, splits into two maxima
        p = PulseShape(4.0, 3.0)
        y = np.zeros(512)
        p.add_to(y, 250.0, 500.0)
        p.add_to(y, 256.0, 400.0)
        assert _count_local_maxima(y, 50.0) == 1  # unresolved before deconvolution
        r = ResponseMatrix(4.0)
        x = gold_deconvolve_array(y, r, GoldParams(iterations=200, boosting_rounds=2))
        from tpcnn.classical import find_peaks

        peaks = find_peaks(x, 40.0, 3.0)
        assert len(peaks) == 2
        assert abs(peaks[0] - 250.0) <= 1.0
        assert abs(peaks[1] - 256.0) <= 1.0


def _count_local_maxima(x, threshold):
    inner = (x[1:-1] > x[:-2]) & (x[1:-1] >= x[2:]) & (x[1:-1] > threshold)
    return int(inner.sum())


class TestGoldProperties:
    @given(
        hnp.arrays(
            np.float64,
            (16,),
            elements=st.floats(-50.0, 1000.0, allow_nan=False, allow_infinity=False),
        ),
        st.integers(1, 60),
    )
    @settings(deadline=None, max_examples=30)
    def test_positivity(self, y, iterations):
        r = ResponseMatrix(1.5, length=16)
        x = gold_deconvolve_array(y, r, GoldParams(iterations=iterations))
        assert np.all(x >= 0.0)

    def test_integral_conservation_in_column_space(self):
        # noiseless y built from a smooth non-negative source converges with
        # Sum(x) equal to Sum(y) well below the 1e-3 level
        rng = np.random.default_rng(7)
        r = ResponseMatrix(2.0)
        i = np.arange(512.0)
        src = np.zeros(512)
        for c, a, w in ((100.0, 50.0, 3.0), (300.0, 80.0, 4.0), (420.5, 30.0, 5.0)):
            src += a * np.exp(-0.5 * ((i - c) / w) ** 2)
        y = r.apply(src)
        x = gold_deconvolve_array(y, r, GoldParams(iterations=200))
        assert abs(x.sum() - y.sum()) / y.sum() < 1e-3

    def test_reconvolution_residual_decreases(self):
        p = PulseShape(4.0, 3.0)
        y = np.zeros(512)
        p.add_to(y, 200.0, 800.0)
        p.add_to(y, 330.0, 400.0)
        r = ResponseMatrix(3.0)
        norms = []
        x = None
        for k in range(1, 80, 4):
            x = gold_deconvolve_array(y, r, GoldParams(iterations=k))
            norms.append(np.linalg.norm(r.apply(x) - y) / np.linalg.norm(y))
        assert all(b <= a * (1.0 + 1e-9) for a, b in zip(norms, norms[1:]))

    def test_boosting_sharpens(self):
        p = PulseShape(4.0, 3.0)
        y = np.zeros(512)
        p.add_to(y, 256.0, 1000.0)
        r = ResponseMatrix(4.0)
        plain = gold_deconvolve_array(y, r, GoldParams(iterations=100))
        boosted = gold_deconvolve_array(y, r, GoldParams(iterations=100, boosting_rounds=2))
        assert boosted.max() > plain.max()


class TestGoldOracle:
    def test_matches_brute_force_on_toys(self):
        rng = np.random.default_rng(11)
        r = ResponseMatrix(1.5, length=16)
        worst = 0.0
        for _ in range(20):
            y = rng.uniform(0.0, 100.0, 16)
            fast = gold_deconvolve_array(y, r, GoldParams(iterations=40))
            slow = brute_force_gold(y, 1.5, 40, 16)
            worst = max(worst, np.abs(fast - slow).max())
        assert worst < 1e-10
