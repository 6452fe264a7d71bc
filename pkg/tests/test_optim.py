import numpy as np
import pytest

from tpcnn.nn import Adamax


class TestAdamaxSingleStep:
    def test_first_step_moves_by_lr_exactly(self):
        # with one positive scalar gradient: m/(1-b1) = g and u = |g|, so the
        # first update is exactly -lr regardless of the gradient magnitude
        for g in (0.5, 3.0, 1e-6):
            p = np.array([1.0])
            opt = Adamax([p], lr=5e-4)
            opt.step([np.array([g])])
            assert p[0] == pytest.approx(1.0 - 5e-4, abs=1e-18)

    def test_zero_gradient_zero_state_no_move(self):
        p = np.array([2.0, -3.0])
        opt = Adamax([p])
        opt.step([np.zeros(2)])
        np.testing.assert_array_equal(p, [2.0, -3.0])

    def test_state_fields(self):
        p = np.array([1.0])
        opt = Adamax([p], lr=5e-4, beta1=0.9, beta2=0.999)
        assert opt.t == 0
        opt.step([np.array([1.0])])
        assert opt.t == 1
        assert opt.m[0][0] == pytest.approx(0.1)
        assert opt.u[0][0] == pytest.approx(1.0)
        assert np.all(opt.u[0] >= 0.0)

    def test_mismatched_grads_rejected(self):
        opt = Adamax([np.zeros(3)])
        with pytest.raises(ValueError):
            opt.step([np.zeros(3), np.zeros(2)])

    def test_invalid_hyperparams(self):
        with pytest.raises(ValueError):
            Adamax([np.zeros(1)], lr=0.0)
        with pytest.raises(ValueError):
            Adamax([np.zeros(1)], beta1=1.0)


def scripted_recurrence(g_seq, lr=5e-4, b1=0.9, b2=0.999, theta0=1.0):
    """Independent scalar transcription of the update rule."""
    theta, m, u = theta0, 0.0, 0.0
    out = []
    for t, g in enumerate(g_seq, start=1):
        m = b1 * m + (1 - b1) * g
        u = max(b2 * u, abs(g))
        theta = theta - lr / (1 - b1**t) * m / max(u, 1e-12)
        out.append(theta)
    return out


def test_quadratic_trajectory_matches_recurrence():
    # minimize f(x) = (x - 3)^2 / 2, gradient x - 3
    lr = 0.05
    theta = np.array([1.0])
    opt = Adamax([theta], lr=lr)
    mine = []
    gs = []
    x = 1.0
    for _ in range(100):
        g = x - 3.0
        gs.append(g)
        opt.step([np.array([g])])
        x = theta[0]
        mine.append(x)
    oracle = scripted_recurrence(gs, lr=lr)
    np.testing.assert_allclose(mine, oracle, atol=1e-12)
    assert abs(x - 3.0) < abs(1.0 - 3.0)  # made progress toward the minimum


def test_u_floor_prevents_division_blowup():
    p = np.array([1.0])
    opt = Adamax([p], lr=1e-3)
    opt.step([np.array([1e-300])])
    assert np.isfinite(p[0])
