"""Layer stack with reverse-mode differentiation."""

from __future__ import annotations

import numpy as np

from .layers import Conv1D, Layer, NumericError
from .losses import LOSSES


class Network:
    """An ordered stack of layers trained end to end."""

    def __init__(self, layers: list[Layer]):
        self.layers = list(layers)

    def forward(self, x: np.ndarray, check: bool = True) -> np.ndarray:
        x = np.asarray(x, dtype=np.float64)
        if self.layers and isinstance(self.layers[0], Conv1D) and x.ndim == 2:
            x = x[:, None, :]
        for i, layer in enumerate(self.layers):
            x = layer.forward(x)
            # a finite sum implies every element is finite (inf/nan propagate)
            if check and not np.isfinite(x.sum()):
                raise NumericError(
                    f"non-finite values after layer {i} ({type(layer).__name__})"
                )
        return x

    def backward(self, gy: np.ndarray) -> np.ndarray:
        for layer in reversed(self.layers):
            gy = layer.backward(gy)
        return gy

    def params(self) -> list[np.ndarray]:
        return [p for layer in self.layers for p in layer.params()]

    def grads(self) -> list[np.ndarray]:
        return [g for layer in self.layers for g in layer.grads()]

    def zero_grads(self) -> None:
        for g in self.grads():
            g[...] = 0.0

    def param_count(self) -> int:
        return sum(p.size for p in self.params())

    def get_state(self) -> list[np.ndarray]:
        return [p.copy() for p in self.params()]

    def set_state(self, state: list[np.ndarray]) -> None:
        for p, s in zip(self.params(), state, strict=True):
            p[...] = s


def loss_and_grads(
    net: Network, x: np.ndarray, target: np.ndarray, loss_kind: str = "mse"
) -> tuple[float, list[np.ndarray]]:
    """One forward/backward pass; returns the loss and fresh parameter grads."""
    loss_fn, grad_fn = LOSSES[loss_kind]
    net.zero_grads()
    out = net.forward(x)
    loss = loss_fn(target, out)
    net.backward(grad_fn(target, out))
    return loss, net.grads()
