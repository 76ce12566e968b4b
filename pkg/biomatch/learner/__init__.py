"""
Feedforward feature extractor: layers, training, circuit compilation and the
model file format.
"""

from biomatch.learner.circuits import BooleanCircuit, Gate, GateKind, circuit_to_mlp, evaluate_circuit
from biomatch.learner.layers import (
    Activation,
    ActivationKind,
    AvgPool2D,
    Conv2D,
    Linear,
    MaxPool2D,
    activation,
    avgpool2d,
    conv2d,
    maxpool2d,
    relu,
    softmax,
)
from biomatch.learner.model_io import load_model, model_digest, save_model
from biomatch.learner.network import LabeledSample, NeuralNetwork, embed, empirical_error, forward
from biomatch.learner.training import (
    Loss,
    TrainingConfig,
    backprop_gradients,
    check_gradients,
    gradient_descent_step,
    loss_value,
    train,
    train_with_history,
)

__all__ = [
    "Activation",
    "ActivationKind",
    "AvgPool2D",
    "BooleanCircuit",
    "Conv2D",
    "Gate",
    "GateKind",
    "LabeledSample",
    "Linear",
    "Loss",
    "MaxPool2D",
    "NeuralNetwork",
    "TrainingConfig",
    "activation",
    "avgpool2d",
    "backprop_gradients",
    "check_gradients",
    "circuit_to_mlp",
    "conv2d",
    "embed",
    "empirical_error",
    "evaluate_circuit",
    "forward",
    "gradient_descent_step",
    "load_model",
    "loss_value",
    "maxpool2d",
    "model_digest",
    "relu",
    "save_model",
    "softmax",
    "train",
    "train_with_history",
]
