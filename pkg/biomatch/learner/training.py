"""
Empirical risk minimisation by full-batch gradient descent.
"""

import logging
from enum import Enum
from typing import Any, List, Sequence, Tuple

import numpy as np
from pydantic import BaseModel, PositiveFloat, PositiveInt, field_validator

from biomatch.errors import DivergenceDetected, LabelOutOfRange, NonFiniteGradient, ShapeMismatch
from biomatch.learner.layers import Params, log_softmax, softmax
from biomatch.learner.network import LabeledSample, NeuralNetwork, empirical_error, run_layers

logger = logging.getLogger(__name__)

DIVERGENCE_LIMIT = 1e12


class Loss(str, Enum):
    SQUARED_ERROR = "squared_error"
    CROSS_ENTROPY = "cross_entropy"
    ZERO_ONE = "zero_one"


class TrainingConfig(BaseModel):
    learning_rate: PositiveFloat = 0.05
    epochs: PositiveInt = 200
    loss: Loss = Loss.CROSS_ENTROPY
    seed: int = 0

    @field_validator("loss")
    @classmethod
    def _differentiable(cls, value: Loss) -> Loss:
        if value == Loss.ZERO_ONE:
            raise ValueError("the 0-1 loss is for evaluation only and cannot be trained on")
        return value


def _targets(net: NeuralNetwork, data: Sequence[LabeledSample], loss: Loss) -> np.ndarray:
    classes = net.output_dim
    if loss == Loss.SQUARED_ERROR:
        rows = []
        for sample in data:
            if sample.target is not None:
                if sample.target.size != classes:
                    raise ShapeMismatch(f"target has {sample.target.size} entries, network outputs {classes}")
                rows.append(sample.target)
            else:
                rows.append(_one_hot(sample.label, classes))
        return np.stack(rows)
    labels = np.array([sample.label for sample in data])
    if any(label is None for label in labels):
        raise ValueError("cross-entropy needs class labels")
    if np.any(labels >= classes):
        raise LabelOutOfRange(f"labels must be below the class count {classes}")
    return labels.astype(int)


def _one_hot(label: int, classes: int) -> np.ndarray:
    if label >= classes:
        raise LabelOutOfRange(f"label {label} is not below the class count {classes}")
    row = np.zeros(classes)
    row[label] = 1.0
    return row


def _loss_and_gradients(net: NeuralNetwork, xs: np.ndarray, targets: np.ndarray, loss: Loss) -> Tuple[float, List[Params]]:
    batch = xs.shape[0]
    # cross-entropy is taken on the logits feeding a softmax head, so the head is
    # folded into the loss and never differentiated on its own
    fused = loss == Loss.CROSS_ENTROPY and net.has_softmax_head
    layers = net.layers[:-1] if fused else net.layers
    out, caches = run_layers(layers, xs, keep_caches=True)
    flat = out.reshape(batch, -1)

    if loss == Loss.SQUARED_ERROR:
        residual = flat - targets
        value = float(np.mean(np.sum(residual ** 2, axis=1)))
        dflat = 2.0 * residual / batch
    else:
        picked = log_softmax(flat)[np.arange(batch), targets]
        value = float(-np.mean(picked))
        dflat = softmax(flat)
        dflat[np.arange(batch), targets] -= 1.0
        dflat /= batch

    grads: List[Params] = [{} for _ in net.layers]
    dy = dflat.reshape(out.shape)
    for index in range(len(layers) - 1, -1, -1):
        dy, layer_grads = layers[index].backward(caches[index], dy)
        for name, g in layer_grads.items():
            if not np.all(np.isfinite(g)):
                raise NonFiniteGradient(f"gradient of {name} in layer {index} is not finite")
        grads[index] = layer_grads
    return value, grads


def backprop_gradients(net: NeuralNetwork, batch: Sequence[LabeledSample], loss: Loss) -> List[Params]:
    """Gradient of the mean batch loss with respect to every weight and bias."""
    loss = Loss(loss)
    if not batch:
        raise ValueError("backpropagation needs a non-empty batch")
    if loss == Loss.ZERO_ONE:
        raise ValueError("the 0-1 loss is not differentiable")
    xs = net.batch(np.stack([sample.x for sample in batch]))
    _, grads = _loss_and_gradients(net, xs, _targets(net, batch, loss), loss)
    return grads


def loss_value(net: NeuralNetwork, batch: Sequence[LabeledSample], loss: Loss) -> float:
    loss = Loss(loss)
    if loss == Loss.ZERO_ONE:
        return empirical_error(net, batch)
    xs = net.batch(np.stack([sample.x for sample in batch]))
    value, _ = _loss_and_gradients(net, xs, _targets(net, batch, loss), loss)
    return value


def gradient_descent_step(weights: Any, gradients: Any, alpha: float) -> Any:
    """w - alpha * g over matching structures of arrays (dicts, lists, scalars)."""
    if not alpha > 0:
        raise ValueError(f"learning rate must be positive, got {alpha}")
    return _step(weights, gradients, alpha)


def _step(w, g, alpha):
    if isinstance(w, dict):
        if not isinstance(g, dict) or set(w) != set(g):
            raise ShapeMismatch("gradient structure does not match the weights")
        return {key: _step(w[key], g[key], alpha) for key in w}
    if isinstance(w, (list, tuple)):
        if not isinstance(g, (list, tuple)) or len(w) != len(g):
            raise ShapeMismatch("gradient structure does not match the weights")
        return type(w)(_step(wi, gi, alpha) for wi, gi in zip(w, g))
    wa, ga = np.asarray(w, dtype=np.float64), np.asarray(g, dtype=np.float64)
    if wa.shape != ga.shape:
        raise ShapeMismatch(f"weight shape {wa.shape} does not match gradient shape {ga.shape}")
    updated = wa - alpha * ga
    if isinstance(w, np.ndarray) or wa.ndim > 0:
        return updated
    return updated.item()


def train_with_history(
    net: NeuralNetwork, data: Sequence[LabeledSample], cfg: TrainingConfig
) -> Tuple[NeuralNetwork, List[float]]:
    """Train and also return the loss measured before each epoch's update."""
    if not data:
        raise ValueError("training needs at least one sample")
    xs = net.batch(np.stack([sample.x for sample in data]))
    targets = _targets(net, data, cfg.loss)
    history: List[float] = []
    current = net
    for epoch in range(cfg.epochs):
        value, grads = _loss_and_gradients(current, xs, targets, cfg.loss)
        if not np.isfinite(value) or value > DIVERGENCE_LIMIT:
            raise DivergenceDetected(epoch, value)
        history.append(value)
        current = current.with_params(gradient_descent_step(current.params(), grads, cfg.learning_rate))
        if epoch % 50 == 0:
            logger.debug("epoch %d loss %.6g", epoch, value)
    logger.info("trained %d epochs on %d samples: loss %.6g -> %.6g", cfg.epochs, len(data), history[0], history[-1])
    return current, history


def train(net: NeuralNetwork, data: Sequence[LabeledSample], cfg: TrainingConfig) -> NeuralNetwork:
    trained, _ = train_with_history(net, data, cfg)
    return trained


def check_gradients(
    net: NeuralNetwork, batch: Sequence[LabeledSample], loss: Loss, eps: float = 1e-5
) -> Tuple[List[Params], List[Params]]:
    """Backprop gradients next to central finite differences of the same loss."""
    analytic = backprop_gradients(net, batch, loss)
    base = net.params()
    numeric: List[Params] = []
    for index, params in enumerate(base):
        layer_numeric = {}
        for name, value in params.items():
            estimate = np.zeros_like(value)
            for position in np.ndindex(value.shape):
                shifted = []
                for sign in (1.0, -1.0):
                    probe = value.copy()
                    probe[position] += sign * eps
                    trial = [dict(p) for p in base]
                    trial[index][name] = probe
                    shifted.append(loss_value(net.with_params(trial), batch, loss))
                estimate[position] = (shifted[0] - shifted[1]) / (2.0 * eps)
            layer_numeric[name] = estimate
        numeric.append(layer_numeric)
    return analytic, numeric
