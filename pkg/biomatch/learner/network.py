"""
Feedforward network container and the inference-side operations:
forward, embed and empirical_error.
"""

from dataclasses import dataclass
from typing import List, Optional, Sequence, Tuple

import numpy as np

from biomatch.errors import DimensionMismatch, LabelOutOfRange, NonFiniteActivation, NonFiniteInput
from biomatch.learner.layers import Activation, ActivationKind, Layer, Linear, Params
from biomatch.spaces import MetricPoint, SpaceDescriptor, SpaceKind


@dataclass(frozen=True)
class LabeledSample:
    """One (x, y) pair. ``target`` overrides the one-hot label for regression."""

    x: np.ndarray
    label: Optional[int] = None
    target: Optional[np.ndarray] = None

    def __post_init__(self):
        object.__setattr__(self, "x", np.asarray(self.x, dtype=np.float64))
        if self.target is not None:
            object.__setattr__(self, "target", np.asarray(self.target, dtype=np.float64).reshape(-1))
        if self.label is None and self.target is None:
            raise ValueError("a sample needs a label or a target")
        if self.label is not None and self.label < 0:
            raise LabelOutOfRange(f"label {self.label} is negative")


@dataclass(frozen=True)
class NeuralNetwork:
    """
    An ordered stack of layers computing g = h o f.

    ``input_shape`` is the per-sample shape: ``(n,)`` for vectors or
    ``(n, m)`` for matrix inputs to convolution layers.
    """

    layers: Tuple[Layer, ...]
    input_shape: Tuple[int, ...]
    seed: int = 0

    def __post_init__(self):
        object.__setattr__(self, "layers", tuple(self.layers))
        object.__setattr__(self, "input_shape", tuple(int(v) for v in self.input_shape))
        shapes = [self.input_shape]
        for layer in self.layers:
            shapes.append(layer.output_shape(shapes[-1]))
        object.__setattr__(self, "_shapes", tuple(shapes))
        for params in self.params():
            for value in params.values():
                if not np.all(np.isfinite(value)):
                    raise NonFiniteInput("network weights must be finite")

    @classmethod
    def mlp(
        cls,
        sizes: Sequence[int],
        hidden: ActivationKind = ActivationKind.RELU,
        head: Optional[ActivationKind] = ActivationKind.SOFTMAX,
        seed: int = 0,
    ) -> "NeuralNetwork":
        """Fully connected network; ``sizes`` lists the width of every layer."""
        if len(sizes) < 2:
            raise ValueError("an MLP needs at least an input and an output size")
        rng = np.random.default_rng(seed)
        layers: List[Layer] = []
        for i, (fan_in, fan_out) in enumerate(zip(sizes[:-1], sizes[1:])):
            layers.append(Linear.initialized(fan_in, fan_out, rng))
            if i < len(sizes) - 2:
                layers.append(Activation(hidden))
        if head is not None:
            layers.append(Activation(head))
        return cls(tuple(layers), (sizes[0],), seed)

    @property
    def input_dim(self) -> int:
        return int(np.prod(self.input_shape))

    @property
    def output_dim(self) -> int:
        return int(np.prod(self._shapes[-1]))

    @property
    def has_softmax_head(self) -> bool:
        last = self.layers[-1] if self.layers else None
        return isinstance(last, Activation) and last.kind == ActivationKind.SOFTMAX

    @property
    def embedding_dim(self) -> int:
        """Width of the representation returned by ``embed``."""
        depth = len(self.layers) - 1 if self.has_softmax_head else len(self.layers)
        return int(np.prod(self._shapes[depth]))

    def params(self) -> List[Params]:
        return [layer.params() for layer in self.layers]

    def with_params(self, params: Sequence[Params]) -> "NeuralNetwork":
        if len(params) != len(self.layers):
            raise DimensionMismatch(f"expected {len(self.layers)} parameter groups, got {len(params)}")
        layers = tuple(layer.with_params(p) if p else layer for layer, p in zip(self.layers, params))
        return NeuralNetwork(layers, self.input_shape, self.seed)

    def batch(self, x) -> np.ndarray:
        """Reshape one sample or a stack of samples to (batch, *input_shape)."""
        x = np.asarray(x, dtype=np.float64)
        if x.size == self.input_dim and x.shape in ((self.input_dim,), self.input_shape):
            return x.reshape((1,) + self.input_shape)
        if x.ndim >= 1 and x.shape[0] > 0 and x[0].size == self.input_dim:
            return x.reshape((x.shape[0],) + self.input_shape)
        raise DimensionMismatch(f"network expects inputs of shape {self.input_shape}, got {x.shape}")


def run_layers(layers: Sequence[Layer], x: np.ndarray, keep_caches: bool = False):
    """Push a batch through ``layers``; optionally return the caches for backprop."""
    caches = []
    with np.errstate(over="ignore", invalid="ignore"):
        for layer in layers:
            x, cache = layer.forward(x)
            if not np.all(np.isfinite(x)):
                raise NonFiniteActivation(f"{type(layer).__name__} produced a non-finite value")
            if keep_caches:
                caches.append(cache)
    return (x, caches) if keep_caches else x


def forward_batch(net: NeuralNetwork, xs) -> np.ndarray:
    out = run_layers(net.layers, net.batch(xs))
    return out.reshape(out.shape[0], -1)


def forward(net: NeuralNetwork, x) -> np.ndarray:
    """Evaluate the network on one input; returns its output vector."""
    return forward_batch(net, x)[0]


def embed(net: NeuralNetwork, x, space: Optional[SpaceDescriptor] = None) -> MetricPoint:
    """
    Map a raw biometric vector into the metric space.

    The forward pass stops before a trailing softmax head. Hamming spaces
    binarize the representation with the threshold activation; Levenshtein
    spaces spell the same bits as a '0'/'1' symbol string.
    """
    layers = net.layers[:-1] if net.has_softmax_head else net.layers
    out = run_layers(layers, net.batch(x))
    if out.shape[0] != 1:
        raise DimensionMismatch("embed takes a single input")
    rep = out.reshape(-1)
    if space is None or space.kind in (SpaceKind.EUCLIDEAN, SpaceKind.CHEBYSHEV, SpaceKind.COSINE):
        point = MetricPoint.vector(rep)
    else:
        bits = (rep > 0.0).astype(np.uint8)
        if space.kind == SpaceKind.HAMMING:
            point = MetricPoint.bits(bits)
        else:
            point = MetricPoint.symbols("".join(str(b) for b in bits))
    return space.conform(point) if space is not None else point


def predict_labels(net: NeuralNetwork, xs) -> np.ndarray:
    # np.argmax returns the first maximum: ties go to the lowest class index
    return np.argmax(forward_batch(net, xs), axis=1)


def stack_inputs(data: Sequence[LabeledSample]) -> np.ndarray:
    return np.stack([sample.x.reshape(-1) for sample in data])


def empirical_error(net: NeuralNetwork, data: Sequence[LabeledSample]) -> float:
    """Fraction of samples whose arg-max output differs from the label."""
    if not data:
        raise ValueError("empirical error needs at least one sample")
    labels = np.array([sample.label for sample in data])
    predicted = predict_labels(net, stack_inputs(data))
    return float(np.count_nonzero(predicted != labels)) / len(data)
