"""
BMNN model container.

Layout (little-endian):

    magic        4 bytes  b"BMNN"
    version      u16      1
    seed         u64
    input rank   u8, then one u32 per input dimension
    layer count  u32
    layers       tag u8 followed by the layer body
        1 Linear      in u32, out u32, W (in*out f64, row-major), b (out f64)
        2 Activation  kind u8 (1 sign, 2 threshold, 3 sigmoid, 4 relu, 5 softmax)
        3 Conv2D      k u32, l u32, F (k*l f64, row-major)
        4 MaxPool2D   k u32, l u32
        5 AvgPool2D   k u32, l u32
"""

import hashlib
import struct
from pathlib import Path
from typing import Tuple, Union

import numpy as np

from biomatch.errors import CorruptModel, CorruptReason
from biomatch.learner.layers import Activation, ActivationKind, AvgPool2D, Conv2D, Layer, Linear, MaxPool2D
from biomatch.learner.network import NeuralNetwork

MAGIC = b"BMNN"
VERSION = 1

ACTIVATION_CODES = {
    ActivationKind.SIGN: 1,
    ActivationKind.THRESHOLD: 2,
    ActivationKind.SIGMOID: 3,
    ActivationKind.RELU: 4,
    ActivationKind.SOFTMAX: 5,
}
ACTIVATION_KINDS = {code: kind for kind, code in ACTIVATION_CODES.items()}


def _floats(values: np.ndarray) -> bytes:
    return np.ascontiguousarray(values, dtype="<f8").tobytes()


def encode_model(net: NeuralNetwork) -> bytes:
    parts = [MAGIC, struct.pack("<HQB", VERSION, net.seed, len(net.input_shape))]
    parts.extend(struct.pack("<I", dim) for dim in net.input_shape)
    parts.append(struct.pack("<I", len(net.layers)))
    for layer in net.layers:
        parts.append(struct.pack("<B", layer.tag))
        if isinstance(layer, Linear):
            parts.append(struct.pack("<II", layer.in_features, layer.out_features))
            parts.append(_floats(layer.weights))
            parts.append(_floats(layer.bias))
        elif isinstance(layer, Activation):
            parts.append(struct.pack("<B", ACTIVATION_CODES[layer.kind]))
        elif isinstance(layer, Conv2D):
            parts.append(struct.pack("<II", *layer.filter.shape))
            parts.append(_floats(layer.filter))
        else:
            parts.append(struct.pack("<II", *layer.window))
    return b"".join(parts)


class _Reader:
    def __init__(self, data: bytes):
        self.data = data
        self.offset = 0

    def take(self, size: int) -> bytes:
        end = self.offset + size
        if end > len(self.data):
            raise CorruptModel(CorruptReason.TRUNCATED, f"needed {size} bytes at offset {self.offset}")
        chunk = self.data[self.offset:end]
        self.offset = end
        return chunk

    def unpack(self, fmt: str) -> Tuple:
        return struct.unpack(fmt, self.take(struct.calcsize(fmt)))

    def floats(self, count: int) -> np.ndarray:
        return np.frombuffer(self.take(8 * count), dtype="<f8").astype(np.float64)


def _read_layer(reader: _Reader) -> Layer:
    (tag,) = reader.unpack("<B")
    if tag == Linear.tag:
        fan_in, fan_out = reader.unpack("<II")
        weights = reader.floats(fan_in * fan_out).reshape(fan_in, fan_out)
        return Linear(weights, reader.floats(fan_out))
    if tag == Activation.tag:
        (code,) = reader.unpack("<B")
        if code not in ACTIVATION_KINDS:
            raise CorruptModel(CorruptReason.MALFORMED, f"unknown activation code {code}")
        return Activation(ACTIVATION_KINDS[code])
    if tag == Conv2D.tag:
        k, l = reader.unpack("<II")
        return Conv2D(reader.floats(k * l).reshape(k, l))
    if tag in (MaxPool2D.tag, AvgPool2D.tag):
        window = reader.unpack("<II")
        return (MaxPool2D if tag == MaxPool2D.tag else AvgPool2D)(window)
    raise CorruptModel(CorruptReason.MALFORMED, f"unknown layer tag {tag}")


def decode_model(data: bytes) -> NeuralNetwork:
    """Parse a model file body; any structural fault surfaces as ``CorruptModel``."""
    reader = _Reader(data)
    if reader.take(len(MAGIC)) != MAGIC:
        raise CorruptModel(CorruptReason.BAD_MAGIC)
    version, seed, rank = reader.unpack("<HQB")
    if version != VERSION:
        raise CorruptModel(CorruptReason.BAD_VERSION, f"unsupported version {version}")
    input_shape = reader.unpack(f"<{rank}I")
    (count,) = reader.unpack("<I")
    try:
        layers = tuple(_read_layer(reader) for _ in range(count))
        if reader.offset != len(data):
            raise CorruptModel(CorruptReason.MALFORMED, f"{len(data) - reader.offset} trailing bytes")
        return NeuralNetwork(layers, input_shape, seed)
    except CorruptModel:
        raise
    except ValueError as e:
        # layer constructors reject empty filters and windows
        raise CorruptModel(CorruptReason.MALFORMED, str(e)) from e


def save_model(net: NeuralNetwork, destination: Union[str, Path]) -> str:
    """Write the model file and return its SHA-256 hex digest."""
    data = encode_model(net)
    Path(destination).write_bytes(data)
    return hashlib.sha256(data).hexdigest()


def load_model(source: Union[str, Path]) -> NeuralNetwork:
    return decode_model(Path(source).read_bytes())


def model_digest(source: Union[str, Path]) -> str:
    return hashlib.sha256(Path(source).read_bytes()).hexdigest()
