"""Neural-network layers with hand-written forward and backward passes.

Everything is batched numpy in double precision. Convolutional inputs are
(batch, channels, length) grids; dense inputs are (batch, features) matrices.
Each layer caches what its backward pass needs during forward and accumulates
parameter gradients in-place on `grads` arrays aligned with `params`.
"""

from __future__ import annotations

import numpy as np
from numpy.lib.stride_tricks import sliding_window_view


class NumericError(RuntimeError):
    """Non-finite values appeared in a forward pass; message names the layer."""


def he_uniform(rng: np.random.Generator, shape, fan_in: int) -> np.ndarray:
    limit = np.sqrt(6.0 / fan_in)
    return rng.uniform(-limit, limit, size=shape)


def glorot_uniform(rng: np.random.Generator, shape, fan_in: int, fan_out: int) -> np.ndarray:
    limit = np.sqrt(6.0 / (fan_in + fan_out))
    return rng.uniform(-limit, limit, size=shape)


class Layer:
    """Base layer: parameter-free unless overridden."""

    def params(self) -> list[np.ndarray]:
        return []

    def grads(self) -> list[np.ndarray]:
        return []

    def forward(self, x: np.ndarray) -> np.ndarray:
        raise NotImplementedError

    def backward(self, gy: np.ndarray) -> np.ndarray:
        raise NotImplementedError


class Conv1D(Layer):
    """Cross-correlation of a (B, C, L) grid with `filters` kernels plus bias.

    padding="same" zero-pads (kernel_size - 1) / 2 on each side and preserves
    length; padding="valid" shrinks the output to L - kernel_size + 1.
    """

    def __init__(
        self,
        in_channels: int,
        filters: int,
        kernel_size: int,
        padding: str = "same",
        *,
        rng: np.random.Generator | None = None,
        init: str = "he",
    ):
        if kernel_size % 2 != 1 or not 1 <= kernel_size <= 31:
            raise ValueError("kernel_size must be odd and in [1, 31]")
        if padding not in ("same", "valid"):
            raise ValueError(f"unknown padding {padding!r}")
        self.in_channels = in_channels
        self.filters = filters
        self.kernel_size = kernel_size
        self.padding = padding
        shape = (filters, in_channels, kernel_size)
        fan_in = in_channels * kernel_size
        if rng is None:
            self.weights = np.zeros(shape)
        elif init == "he":
            self.weights = he_uniform(rng, shape, fan_in)
        else:
            self.weights = glorot_uniform(rng, shape, fan_in, filters)
        self.bias = np.zeros(filters)
        self.dweights = np.zeros_like(self.weights)
        self.dbias = np.zeros_like(self.bias)
        self._windows = None

    def params(self):
        return [self.weights, self.bias]

    def grads(self):
        return [self.dweights, self.dbias]

    def forward(self, x: np.ndarray) -> np.ndarray:
        if x.ndim != 3 or x.shape[1] != self.in_channels:
            raise ValueError(
                f"conv1d expected (batch, {self.in_channels}, length) input, got {x.shape}"
            )
        k = self.kernel_size
        if self.padding == "same":
            pad = (k - 1) // 2
            x = np.pad(x, ((0, 0), (0, 0), (pad, pad)))
        windows = sliding_window_view(x, k, axis=2)  # (B, C, L', k)
        self._windows = windows
        y = np.tensordot(windows, self.weights, axes=((1, 3), (1, 2)))  # (B, L', F)
        return np.ascontiguousarray(y.transpose(0, 2, 1)) + self.bias[None, :, None]

    def backward(self, gy: np.ndarray) -> np.ndarray:
        windows = self._windows
        k = self.kernel_size
        self.dweights += np.tensordot(gy, windows, axes=((0, 2), (0, 2)))
        self.dbias += gy.sum(axis=(0, 2))
        # input gradient: dx[b,c,i] = sum_{f,j} gy[b,f,i-j] W[f,c,j] on the
        # padded coordinates; accumulating one kernel tap at a time keeps the
        # work in small batched matmuls instead of a large windowed copy
        out_len = gy.shape[2]
        dxp = np.zeros((gy.shape[0], self.in_channels, out_len + k - 1))
        for j in range(k):
            wt = self.weights[:, :, j].T  # (C, F)
            dxp[:, :, j : j + out_len] += wt @ gy
        if self.padding == "same":
            pad = (k - 1) // 2
            return np.ascontiguousarray(dxp[:, :, pad : dxp.shape[2] - pad])
        return dxp

    def output_length(self, length: int) -> int:
        return length if self.padding == "same" else length - self.kernel_size + 1


class _MaxPool(Layer):
    """Shared machinery for pooling over one axis in non-overlapping windows.

    A partial window at the tail pools over the remaining entries. Gradients
    route to the argmax (numpy argmax: lowest index on ties); the argmax is
    computed lazily in backward so inference pays only for the max itself.
    """

    axis: int

    def __init__(self, pool: int):
        if pool < 1:
            raise ValueError("pool size must be >= 1")
        self.pool = pool
        self._x = None

    def forward(self, x: np.ndarray) -> np.ndarray:
        if x.ndim != 3:
            raise ValueError(f"maxpool expected (batch, channels, length), got {x.shape}")
        self._x = x
        size = x.shape[self.axis]
        pieces = [
            _take_range(x, self.axis, s, min(s + self.pool, size)).max(
                axis=self.axis, keepdims=True
            )
            for s in range(0, size, self.pool)
        ]
        return np.concatenate(pieces, axis=self.axis)

    def backward(self, gy: np.ndarray) -> np.ndarray:
        x = self._x
        gx = np.zeros(x.shape)
        size = x.shape[self.axis]
        for g, start in enumerate(range(0, size, self.pool)):
            seg = _take_range(x, self.axis, start, min(start + self.pool, size))
            idx = np.argmax(seg, axis=self.axis) + start
            piece = _take_range(gy, self.axis, g, g + 1)
            np.put_along_axis(gx, np.expand_dims(idx, self.axis), piece, self.axis)
        return gx


def _take_range(x: np.ndarray, axis: int, start: int, stop: int) -> np.ndarray:
    sl = [slice(None)] * x.ndim
    sl[axis] = slice(start, stop)
    return x[tuple(sl)]


class MaxPoolChannel(_MaxPool):
    axis = 1


class MaxPoolTime(_MaxPool):
    axis = 2


class Flatten(Layer):
    """(B, C, L) -> (B, C*L), channel-major."""

    def __init__(self):
        self._in_shape = None

    def forward(self, x: np.ndarray) -> np.ndarray:
        self._in_shape = x.shape
        return x.reshape(x.shape[0], -1)

    def backward(self, gy: np.ndarray) -> np.ndarray:
        return gy.reshape(self._in_shape)


class Dense(Layer):
    """Affine map y = x W^T + b on (B, features) input."""

    def __init__(
        self,
        in_features: int,
        out_features: int,
        *,
        rng: np.random.Generator | None = None,
        init: str = "glorot",
    ):
        self.in_features = in_features
        self.out_features = out_features
        shape = (out_features, in_features)
        if rng is None:
            self.weights = np.zeros(shape)
        elif init == "he":
            self.weights = he_uniform(rng, shape, in_features)
        else:
            self.weights = glorot_uniform(rng, shape, in_features, out_features)
        self.bias = np.zeros(out_features)
        self.dweights = np.zeros_like(self.weights)
        self.dbias = np.zeros_like(self.bias)
        self._x = None

    def params(self):
        return [self.weights, self.bias]

    def grads(self):
        return [self.dweights, self.dbias]

    def forward(self, x: np.ndarray) -> np.ndarray:
        if x.ndim != 2 or x.shape[1] != self.in_features:
            raise ValueError(
                f"dense expected (batch, {self.in_features}) input, got {x.shape}"
            )
        self._x = x
        return x @ self.weights.T + self.bias

    def backward(self, gy: np.ndarray) -> np.ndarray:
        self.dweights += gy.T @ self._x
        self.dbias += gy.sum(axis=0)
        return gy @ self.weights


class ReLU(Layer):
    def __init__(self):
        self._mask = None

    def forward(self, x: np.ndarray) -> np.ndarray:
        self._mask = x > 0
        return np.where(self._mask, x, 0.0)

    def backward(self, gy: np.ndarray) -> np.ndarray:
        return np.where(self._mask, gy, 0.0)


def sigmoid(x: np.ndarray) -> np.ndarray:
    """Numerically stable logistic function, exact to the last ulp at |x|>36."""
    x = np.asarray(x, dtype=np.float64)
    z = np.exp(-np.abs(x))
    return np.where(x >= 0, 1.0 / (1.0 + z), z / (1.0 + z))


def relu(x: np.ndarray) -> np.ndarray:
    return np.maximum(x, 0.0)


class Sigmoid(Layer):
    def __init__(self):
        self._out = None

    def forward(self, x: np.ndarray) -> np.ndarray:
        self._out = sigmoid(x)
        return self._out

    def backward(self, gy: np.ndarray) -> np.ndarray:
        return gy * self._out * (1.0 - self._out)
