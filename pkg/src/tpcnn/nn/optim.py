"""Adamax: Adam variant with an infinity-norm second moment."""

from __future__ import annotations

import numpy as np

U_FLOOR = 1e-12


class Adamax:
    """Per-parameter state for the infinity-norm Adam update.

    Update rule, applied elementwise with step count t:
        m <- beta1 * m + (1 - beta1) * g
        u <- max(beta2 * u, |g|)
        theta <- theta - lr / (1 - beta1**t) * m / max(u, floor)
    """

    def __init__(
        self,
        params: list[np.ndarray],
        lr: float = 5e-4,
        beta1: float = 0.9,
        beta2: float = 0.999,
    ):
        if lr <= 0:
            raise ValueError("lr must be > 0")
        if not (0.0 <= beta1 < 1.0 and 0.0 <= beta2 < 1.0):
            raise ValueError("betas must lie in [0, 1)")
        self.params = params
        self.lr = lr
        self.beta1 = beta1
        self.beta2 = beta2
        self.t = 0
        self.m = [np.zeros_like(p) for p in params]
        self.u = [np.zeros_like(p) for p in params]
        self._scratch = [np.empty_like(p) for p in params]

    def step(self, grads: list[np.ndarray]) -> None:
        if len(grads) != len(self.params):
            raise ValueError("gradient list does not match parameter list")
        self.t += 1
        scale = self.lr / (1.0 - self.beta1**self.t)
        for p, g, m, u, s in zip(self.params, grads, self.m, self.u, self._scratch):
            m *= self.beta1
            np.multiply(g, 1.0 - self.beta1, out=s)
            m += s
            u *= self.beta2
            np.abs(g, out=s)
            np.maximum(u, s, out=u)
            np.maximum(u, U_FLOOR, out=s)
            np.divide(m, s, out=s)
            s *= scale
            p -= s
