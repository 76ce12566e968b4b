"""
Layer kernels for the feedforward extractor.

Every layer works on a batch: the leading axis of its input indexes samples.
Layers are immutable; ``forward`` returns the output together with the cache
that ``backward`` needs, so one network can be evaluated from many threads.
"""

from dataclasses import dataclass, field
from enum import Enum
from typing import Dict, Sequence, Tuple

import numpy as np

from biomatch.errors import DimensionMismatch, ShapeMismatch, WindowTooLarge

Params = Dict[str, np.ndarray]


class ActivationKind(str, Enum):
    SIGN = "sign"
    THRESHOLD = "threshold"
    SIGMOID = "sigmoid"
    RELU = "relu"
    SOFTMAX = "softmax"


def _frozen(values, shape=None) -> np.ndarray:
    arr = np.array(values, dtype=np.float64)
    if shape is not None:
        arr = arr.reshape(shape)
    arr.setflags(write=False)
    return arr


def sigmoid(x: np.ndarray) -> np.ndarray:
    # tanh form never overflows and gives sigmoid(0) == 0.5 exactly
    return 0.5 * (1.0 + np.tanh(0.5 * np.asarray(x, dtype=np.float64)))


def relu(x) -> np.ndarray:
    x = np.asarray(x, dtype=np.float64)
    return np.where(x > 0.0, x, 0.0)


def softmax(x) -> np.ndarray:
    """Softmax over the last axis, shifted by the maximum for stability."""
    x = np.asarray(x, dtype=np.float64)
    shifted = x - np.max(x, axis=-1, keepdims=True)
    e = np.exp(shifted)
    return e / np.sum(e, axis=-1, keepdims=True)


def log_softmax(x) -> np.ndarray:
    x = np.asarray(x, dtype=np.float64)
    shifted = x - np.max(x, axis=-1, keepdims=True)
    return shifted - np.log(np.sum(np.exp(shifted), axis=-1, keepdims=True))


def apply_activation(kind: ActivationKind, x) -> np.ndarray:
    kind = ActivationKind(kind)
    x = np.asarray(x, dtype=np.float64)
    if kind == ActivationKind.SIGN:
        return np.sign(x) + 0.0
    if kind == ActivationKind.THRESHOLD:
        return (x > 0.0).astype(np.float64)
    if kind == ActivationKind.SIGMOID:
        return sigmoid(x)
    if kind == ActivationKind.RELU:
        return relu(x)
    return softmax(x)


def activation(kind: ActivationKind, x: float) -> float:
    """Scalar form of the sign, threshold and sigmoid activations (and ReLU)."""
    kind = ActivationKind(kind)
    if kind == ActivationKind.SOFTMAX:
        raise ValueError("softmax is a vector function; use softmax()")
    return float(apply_activation(kind, x))


class Layer:
    """Interface shared by all layer variants."""

    tag: int = 0

    def output_shape(self, input_shape: Tuple[int, ...]) -> Tuple[int, ...]:
        raise NotImplementedError

    def forward(self, x: np.ndarray):
        raise NotImplementedError

    def backward(self, cache, dy: np.ndarray) -> Tuple[np.ndarray, Params]:
        raise NotImplementedError

    def params(self) -> Params:
        return {}

    def with_params(self, params: Params) -> "Layer":
        return self


@dataclass(frozen=True, eq=False)
class Linear(Layer):
    """x -> x^T W + b, with W of shape (in, out)."""

    weights: np.ndarray
    bias: np.ndarray
    tag = 1

    def __post_init__(self):
        w = _frozen(self.weights)
        if w.ndim != 2:
            raise ShapeMismatch(f"linear weights must be a matrix, got shape {w.shape}")
        b = _frozen(self.bias, (-1,))
        if b.shape != (w.shape[1],):
            raise ShapeMismatch(f"bias has {b.size} entries, layer has {w.shape[1]} outputs")
        object.__setattr__(self, "weights", w)
        object.__setattr__(self, "bias", b)

    @classmethod
    def initialized(cls, fan_in: int, fan_out: int, rng: np.random.Generator) -> "Linear":
        bound = 1.0 / np.sqrt(fan_in)
        return cls(rng.uniform(-bound, bound, size=(fan_in, fan_out)), np.zeros(fan_out))

    @property
    def in_features(self) -> int:
        return self.weights.shape[0]

    @property
    def out_features(self) -> int:
        return self.weights.shape[1]

    def output_shape(self, input_shape):
        if int(np.prod(input_shape)) != self.in_features:
            raise DimensionMismatch(f"linear layer expects {self.in_features} inputs, got shape {input_shape}")
        return (self.out_features,)

    def forward(self, x):
        flat = x.reshape(x.shape[0], -1)
        if flat.shape[1] != self.in_features:
            raise DimensionMismatch(f"linear layer expects {self.in_features} inputs, got {flat.shape[1]}")
        return flat @ self.weights + self.bias, (x.shape, flat)

    def backward(self, cache, dy):
        shape, flat = cache
        grads = {"weights": flat.T @ dy, "bias": dy.sum(axis=0)}
        return (dy @ self.weights.T).reshape(shape), grads

    def params(self):
        return {"weights": self.weights, "bias": self.bias}

    def with_params(self, params):
        return Linear(params["weights"], params["bias"])


@dataclass(frozen=True, eq=False)
class Activation(Layer):
    kind: ActivationKind
    tag = 2

    def __post_init__(self):
        object.__setattr__(self, "kind", ActivationKind(self.kind))

    def output_shape(self, input_shape):
        return tuple(input_shape)

    def forward(self, x):
        if self.kind == ActivationKind.SOFTMAX:
            y = softmax(x.reshape(x.shape[0], -1)).reshape(x.shape)
        else:
            y = apply_activation(self.kind, x)
        return y, (x, y)

    def backward(self, cache, dy):
        x, y = cache
        if self.kind in (ActivationKind.SIGN, ActivationKind.THRESHOLD):
            # piecewise constant: zero derivative almost everywhere
            return np.zeros_like(dy), {}
        if self.kind == ActivationKind.SIGMOID:
            return dy * y * (1.0 - y), {}
        if self.kind == ActivationKind.RELU:
            return dy * (x > 0.0), {}
        s = y.reshape(y.shape[0], -1)
        d = dy.reshape(dy.shape[0], -1)
        return (s * (d - np.sum(d * s, axis=1, keepdims=True))).reshape(dy.shape), {}


def _check_window(k: int, l: int, input_shape: Sequence[int]) -> Tuple[int, int]:
    if len(input_shape) != 2:
        raise ShapeMismatch(f"2-d layers need matrix samples, got shape {tuple(input_shape)}")
    n, m = input_shape
    if k > n or l > m:
        raise WindowTooLarge(f"window {k}x{l} does not fit a {n}x{m} input")
    return n, m


@dataclass(frozen=True, eq=False)
class Conv2D(Layer):
    """
    Zero-padded convolution keeping the input shape.

    Y[i, j] = sum_{u, v} F[u, v] * X[i - u - 1, j - v - 1] (0-based), out of
    range X entries contribute nothing.
    """

    filter: np.ndarray
    tag = 3

    def __post_init__(self):
        f = _frozen(self.filter)
        if f.ndim != 2 or 0 in f.shape:
            raise ShapeMismatch(f"filter must be a non-empty matrix, got shape {f.shape}")
        object.__setattr__(self, "filter", f)

    @classmethod
    def initialized(cls, k: int, l: int, rng: np.random.Generator) -> "Conv2D":
        bound = 1.0 / np.sqrt(k * l)
        return cls(rng.uniform(-bound, bound, size=(k, l)))

    def output_shape(self, input_shape):
        _check_window(*self.filter.shape, input_shape)
        return tuple(input_shape)

    def _taps(self, n: int, m: int):
        k, l = self.filter.shape
        for u in range(k):
            for v in range(l):
                s, t = u + 1, v + 1
                if s < n and t < m:
                    yield u, v, s, t

    def forward(self, x):
        n, m = _check_window(*self.filter.shape, x.shape[1:])
        y = np.zeros_like(x)
        for u, v, s, t in self._taps(n, m):
            y[:, s:, t:] += self.filter[u, v] * x[:, : n - s, : m - t]
        return y, x

    def backward(self, cache, dy):
        x = cache
        n, m = x.shape[1:]
        dx = np.zeros_like(x)
        dfilter = np.zeros_like(self.filter)
        for u, v, s, t in self._taps(n, m):
            dx[:, : n - s, : m - t] += self.filter[u, v] * dy[:, s:, t:]
            dfilter[u, v] = np.sum(dy[:, s:, t:] * x[:, : n - s, : m - t])
        return dx, {"filter": dfilter}

    def params(self):
        return {"filter": self.filter}

    def with_params(self, params):
        return Conv2D(params["filter"])


@dataclass(frozen=True, eq=False)
class _Pool2D(Layer):
    """Non-overlapping k x l windows; trailing partial windows are dropped."""

    window: Tuple[int, int] = field(default=(1, 1))

    def __post_init__(self):
        k, l = (int(v) for v in self.window)
        if k < 1 or l < 1:
            raise ShapeMismatch(f"pooling window must be positive, got {self.window}")
        object.__setattr__(self, "window", (k, l))

    def output_shape(self, input_shape):
        n, m = _check_window(*self.window, input_shape)
        k, l = self.window
        return (n // k, m // l)

    def _windows(self, x):
        n, m = _check_window(*self.window, x.shape[1:])
        k, l = self.window
        rows, cols = n // k, m // l
        return x[:, : rows * k, : cols * l].reshape(x.shape[0], rows, k, cols, l)


class MaxPool2D(_Pool2D):
    tag = 4

    def forward(self, x):
        windows = self._windows(x)
        return windows.max(axis=(2, 4)), (x.shape, windows)

    def backward(self, cache, dy):
        shape, windows = cache
        b, rows, k, cols, l = windows.shape
        flat = windows.transpose(0, 1, 3, 2, 4).reshape(b, rows, cols, k * l)
        # the gradient goes to the first maximal entry of each window
        onehot = np.zeros_like(flat)
        np.put_along_axis(onehot, flat.argmax(axis=-1)[..., None], 1.0, axis=-1)
        routed = (onehot * dy[..., None]).reshape(b, rows, cols, k, l).transpose(0, 1, 3, 2, 4)
        dx = np.zeros(shape)
        dx[:, : rows * k, : cols * l] = routed.reshape(b, rows * k, cols * l)
        return dx, {}


class AvgPool2D(_Pool2D):
    tag = 5

    def forward(self, x):
        windows = self._windows(x)
        return windows.mean(axis=(2, 4)), (x.shape, windows.shape)

    def backward(self, cache, dy):
        shape, (b, rows, k, cols, l) = cache
        spread = np.broadcast_to(dy[:, :, None, :, None] / (k * l), (b, rows, k, cols, l))
        dx = np.zeros(shape)
        dx[:, : rows * k, : cols * l] = spread.reshape(b, rows * k, cols * l)
        return dx, {}


def conv2d(filter, x) -> np.ndarray:
    """Convolve a single n x m matrix with a k x l filter."""
    x = np.asarray(x, dtype=np.float64)
    y, _ = Conv2D(filter).forward(x[None])
    return y[0]


def maxpool2d(window: Tuple[int, int], x) -> np.ndarray:
    x = np.asarray(x, dtype=np.float64)
    y, _ = MaxPool2D(window).forward(x[None])
    return y[0]


def avgpool2d(window: Tuple[int, int], x) -> np.ndarray:
    x = np.asarray(x, dtype=np.float64)
    y, _ = AvgPool2D(window).forward(x[None])
    return y[0]
