"""Binary model format: magic "TPNN", versioned, CRC-checked.

Little-endian layout:

    magic        4s   = b"TPNN"
    version      u32  = 1
    stage        u32  (0 = untagged, 1 = baseline, 2 = deconvolution, 3 = peaks)
    layer_count  u32
    per layer:   kind u8, then kind-specific shape words (u32) and f64
                 weight/bias arrays in row-major order
    crc32        u32  over every preceding byte
"""

from __future__ import annotations

import struct
import zlib
from pathlib import Path

import numpy as np

from .layers import Conv1D, Dense, Flatten, MaxPoolChannel, MaxPoolTime, ReLU, Sigmoid
from .network import Network

MAGIC = b"TPNN"
FORMAT_VERSION = 1

KIND_CONV = 1
KIND_POOL_TIME = 2
KIND_POOL_CHANNEL = 3
KIND_FLATTEN = 4
KIND_DENSE = 5
KIND_RELU = 6
KIND_SIGMOID = 7

_PADDING_CODE = {"same": 0, "valid": 1}
_PADDING_NAME = {0: "same", 1: "valid"}


class ModelFormatError(ValueError):
    """File is not a readable model (bad magic, truncated, CRC mismatch...)."""


class ModelVersionError(ModelFormatError):
    def __init__(self, found: int):
        super().__init__(
            f"model format version {found} not supported (expected {FORMAT_VERSION})"
        )
        self.found = found
        self.expected = FORMAT_VERSION


def _layer_bytes(layer) -> bytes:
    if isinstance(layer, Conv1D):
        head = struct.pack(
            "<BIIII",
            KIND_CONV,
            layer.in_channels,
            layer.filters,
            layer.kernel_size,
            _PADDING_CODE[layer.padding],
        )
        return head + layer.weights.astype("<f8").tobytes() + layer.bias.astype("<f8").tobytes()
    if isinstance(layer, MaxPoolTime):
        return struct.pack("<BI", KIND_POOL_TIME, layer.pool)
    if isinstance(layer, MaxPoolChannel):
        return struct.pack("<BI", KIND_POOL_CHANNEL, layer.pool)
    if isinstance(layer, Flatten):
        return struct.pack("<B", KIND_FLATTEN)
    if isinstance(layer, Dense):
        head = struct.pack("<BII", KIND_DENSE, layer.in_features, layer.out_features)
        return head + layer.weights.astype("<f8").tobytes() + layer.bias.astype("<f8").tobytes()
    if isinstance(layer, ReLU):
        return struct.pack("<B", KIND_RELU)
    if isinstance(layer, Sigmoid):
        return struct.pack("<B", KIND_SIGMOID)
    raise TypeError(f"cannot serialize layer of type {type(layer).__name__}")


def save_model(net: Network, path, stage: int = 0) -> None:
    """Write the network to path; weights round-trip bit-exactly."""
    blob = MAGIC + struct.pack("<III", FORMAT_VERSION, stage, len(net.layers))
    blob += b"".join(_layer_bytes(layer) for layer in net.layers)
    blob += struct.pack("<I", zlib.crc32(blob) & 0xFFFFFFFF)
    Path(path).write_bytes(blob)


class _Reader:
    def __init__(self, data: bytes):
        self.data = data
        self.pos = 0

    def take(self, n: int) -> bytes:
        if self.pos + n > len(self.data):
            raise ModelFormatError("model file truncated")
        out = self.data[self.pos : self.pos + n]
        self.pos += n
        return out

    def u8(self) -> int:
        return self.take(1)[0]

    def u32(self) -> int:
        return struct.unpack("<I", self.take(4))[0]

    def f64(self, count: int) -> np.ndarray:
        raw = self.take(8 * count)
        return np.frombuffer(raw, dtype="<f8").astype(np.float64)


def load_model(path) -> tuple[Network, int]:
    """Read a model file; returns (network, stage tag)."""
    data = Path(path).read_bytes()
    if len(data) < 20:
        raise ModelFormatError("model file truncated")
    payload, (crc,) = data[:-4], struct.unpack("<I", data[-4:])
    if zlib.crc32(payload) & 0xFFFFFFFF != crc:
        raise ModelFormatError("model file CRC mismatch")

    r = _Reader(payload)
    if r.take(4) != MAGIC:
        raise ModelFormatError("bad magic: not a model file")
    version = r.u32()
    if version != FORMAT_VERSION:
        raise ModelVersionError(version)
    stage = r.u32()
    n_layers = r.u32()

    layers = []
    for _ in range(n_layers):
        kind = r.u8()
        if kind == KIND_CONV:
            in_ch, filters, k, pad_code = (r.u32() for _ in range(4))
            if pad_code not in _PADDING_NAME:
                raise ModelFormatError(f"unknown padding code {pad_code}")
            layer = Conv1D(in_ch, filters, k, _PADDING_NAME[pad_code])
            layer.weights = r.f64(filters * in_ch * k).reshape(filters, in_ch, k)
            layer.bias = r.f64(filters)
            layer.dweights = np.zeros_like(layer.weights)
            layer.dbias = np.zeros_like(layer.bias)
        elif kind == KIND_POOL_TIME:
            layer = MaxPoolTime(r.u32())
        elif kind == KIND_POOL_CHANNEL:
            layer = MaxPoolChannel(r.u32())
        elif kind == KIND_FLATTEN:
            layer = Flatten()
        elif kind == KIND_DENSE:
            n_in, n_out = r.u32(), r.u32()
            layer = Dense(n_in, n_out)
            layer.weights = r.f64(n_out * n_in).reshape(n_out, n_in)
            layer.bias = r.f64(n_out)
            layer.dweights = np.zeros_like(layer.weights)
            layer.dbias = np.zeros_like(layer.bias)
        elif kind == KIND_RELU:
            layer = ReLU()
        elif kind == KIND_SIGMOID:
            layer = Sigmoid()
        else:
            raise ModelFormatError(f"unknown layer kind {kind}")
        layers.append(layer)
    if r.pos != len(payload):
        raise ModelFormatError("trailing bytes after last layer")
    return Network(layers), stage
