import numpy as np
import pytest
from numpy.testing import assert_array_equal

from biomatch.errors import CorruptModel, CorruptReason
from biomatch.learner import (
    Activation,
    ActivationKind,
    AvgPool2D,
    Conv2D,
    Linear,
    MaxPool2D,
    NeuralNetwork,
    forward,
    load_model,
    model_digest,
    save_model,
)
from biomatch.learner.model_io import decode_model, encode_model


def conv_net():
    rng = np.random.default_rng(1)
    layers = (
        Conv2D(rng.normal(size=(2, 2))),
        Activation(ActivationKind.RELU),
        MaxPool2D((2, 2)),
        AvgPool2D((1, 2)),
        Linear(rng.normal(size=(2, 3)), rng.normal(size=3)),
        Activation(ActivationKind.SOFTMAX),
    )
    return NeuralNetwork(layers, (4, 4), seed=17)


def test_model_file_round_trip(tmp_path):
    net = conv_net()
    path = tmp_path / "model.bmnn"
    digest = save_model(net, path)
    assert digest == model_digest(path)
    loaded = load_model(path)
    assert loaded.input_shape == (4, 4)
    assert loaded.seed == 17
    assert [type(layer) for layer in loaded.layers] == [type(layer) for layer in net.layers]
    x = np.random.default_rng(2).normal(size=(4, 4))
    assert_array_equal(forward(loaded, x), forward(net, x))
    assert encode_model(loaded) == encode_model(net)


def test_mlp_round_trip_keeps_activations():
    net = NeuralNetwork.mlp([3, 4, 2], hidden=ActivationKind.SIGMOID, seed=5)
    loaded = decode_model(encode_model(net))
    assert [getattr(layer, "kind", None) for layer in loaded.layers] == [
        None,
        ActivationKind.SIGMOID,
        None,
        ActivationKind.SOFTMAX,
    ]


@pytest.mark.parametrize(
    "mutate, reason",
    [
        (lambda data: b"XXXX" + data[4:], CorruptReason.BAD_MAGIC),
        (lambda data: data[:4] + b"\x09\x00" + data[6:], CorruptReason.BAD_VERSION),
        (lambda data: data[:-3], CorruptReason.TRUNCATED),
        (lambda data: data + b"\x00", CorruptReason.MALFORMED),
    ],
)
def test_corrupt_model_reasons(mutate, reason):
    data = encode_model(conv_net())
    with pytest.raises(CorruptModel) as info:
        decode_model(mutate(data))
    assert info.value.reason == reason


# header: magic, version, seed, rank, two dims, layer count; the first layer tag sits at 27
FIRST_LAYER_ROWS = slice(28, 32)


def zero_first_window(data):
    return data[: FIRST_LAYER_ROWS.start] + b"\x00\x00\x00\x00" + data[FIRST_LAYER_ROWS.stop :]


@pytest.mark.parametrize(
    "net",
    [
        conv_net(),
        NeuralNetwork((MaxPool2D((2, 1)), Linear(np.ones((2, 1)), np.zeros(1))), (4, 1)),
    ],
    ids=["conv-filter", "pool-window"],
)
def test_empty_layer_shapes_are_malformed(net):
    with pytest.raises(CorruptModel) as info:
        decode_model(zero_first_window(encode_model(net)))
    assert info.value.reason == CorruptReason.MALFORMED
