"""Training losses and their gradients with respect to the prediction."""

from __future__ import annotations

import numpy as np

BCE_EPS = 1e-7


def mse_loss(y: np.ndarray, yhat: np.ndarray) -> float:
    """Mean squared error over all elements."""
    y = np.asarray(y, dtype=np.float64)
    yhat = np.asarray(yhat, dtype=np.float64)
    return float(np.mean((y - yhat) ** 2))


def mse_grad(y: np.ndarray, yhat: np.ndarray) -> np.ndarray:
    return 2.0 * (yhat - y) / y.size


def bce_loss(y: np.ndarray, p: np.ndarray) -> float:
    """Binary cross-entropy with predictions clamped to [eps, 1 - eps]."""
    y = np.asarray(y, dtype=np.float64)
    p = np.clip(np.asarray(p, dtype=np.float64), BCE_EPS, 1.0 - BCE_EPS)
    return float(-np.mean(y * np.log(p) + (1.0 - y) * np.log(1.0 - p)))


def bce_grad(y: np.ndarray, p: np.ndarray) -> np.ndarray:
    y = np.asarray(y, dtype=np.float64)
    p = np.clip(np.asarray(p, dtype=np.float64), BCE_EPS, 1.0 - BCE_EPS)
    return (-y / p + (1.0 - y) / (1.0 - p)) / y.size


LOSSES = {
    "mse": (mse_loss, mse_grad),
    "bce": (bce_loss, bce_grad),
}
