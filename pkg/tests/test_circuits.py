from itertools import product

import numpy as np
import pytest

from biomatch.errors import MalformedCircuit
from biomatch.learner import BooleanCircuit, Gate, GateKind, circuit_to_mlp, evaluate_circuit
from biomatch.learner.circuits import mlp_truth_table, truth_table


def circuit(gates, inputs, outputs):
    return BooleanCircuit({name: Gate(kind, tuple(srcs)) for name, (kind, srcs) in gates.items()}, inputs, outputs)


def assert_compiles(c: BooleanCircuit):
    net = circuit_to_mlp(c)
    assert mlp_truth_table(net, c.arity) == truth_table(c)
    linear_layers = [layer for layer in net.layers if hasattr(layer, "weights")]
    assert len(linear_layers) == c.depth


def test_not_gate():
    c = circuit({"x": (GateKind.INPUT, ()), "y": (GateKind.NOT, ("x",))}, ["x"], ["y"])
    assert_compiles(c)
    net = circuit_to_mlp(c)
    assert mlp_truth_table(net, 1) == {(0,): (1,), (1,): (0,)}


def test_and_gate():
    c = circuit(
        {"a": (GateKind.INPUT, ()), "b": (GateKind.INPUT, ()), "out": (GateKind.AND, ("a", "b"))},
        ["a", "b"],
        ["out"],
    )
    assert_compiles(c)
    assert truth_table(c) == {(0, 0): (0,), (0, 1): (0,), (1, 0): (0,), (1, 1): (1,)}


def test_and_or_not_circuit():
    c = circuit(
        {
            "x1": (GateKind.INPUT, ()),
            "x2": (GateKind.INPUT, ()),
            "x3": (GateKind.INPUT, ()),
            "a": (GateKind.AND, ("x1", "x2")),
            "n3": (GateKind.NOT, ("x3",)),
            "out": (GateKind.OR, ("a", "n3")),
        },
        ["x1", "x2", "x3"],
        ["out"],
    )
    assert c.depth == 2
    assert_compiles(c)
    for x1, x2, x3 in product((0, 1), repeat=3):
        assert evaluate_circuit(c, (x1, x2, x3)) == (int((x1 and x2) or not x3),)


def test_outputs_from_different_levels_keep_their_order():
    c = circuit(
        {
            "a": (GateKind.INPUT, ()),
            "b": (GateKind.INPUT, ()),
            "or": (GateKind.OR, ("a", "b")),
            "deep": (GateKind.NOT, ("or",)),
        },
        ["a", "b"],
        ["deep", "or", "a"],
    )
    assert_compiles(c)


def random_circuit(rng, arity, depth):
    gates = {f"i{k}": (GateKind.INPUT, ()) for k in range(arity)}
    by_level = [list(gates)]
    for level in range(1, depth + 1):
        earlier = [name for names in by_level for name in names]
        current = []
        for g in range(int(rng.integers(1, 4))):
            kind = (GateKind.AND, GateKind.OR, GateKind.NOT)[int(rng.integers(3))]
            # one source from the level just below pins the gate to this level
            sources = [by_level[-1][int(rng.integers(len(by_level[-1])))]]
            if kind != GateKind.NOT:
                extra = int(rng.integers(0, 3))
                sources += [earlier[int(j)] for j in rng.integers(len(earlier), size=extra)]
            name = f"g{level}_{g}"
            gates[name] = (kind, sources)
            current.append(name)
        by_level.append(current)
    read = {src for _, sources in gates.values() for src in sources}
    sinks = [name for names in by_level[1:] for name in names if name not in read]
    return circuit(gates, by_level[0], sinks)


def test_random_circuits_compile():
    rng = np.random.default_rng(21)
    for trial in range(40):
        arity, depth = 1 + trial % 8, 1 + trial % 5
        c = random_circuit(rng, arity, depth)
        assert (c.arity, c.depth) == (arity, depth)
        assert_compiles(c)


@pytest.mark.parametrize(
    "gates, outputs",
    [
        ({"x": (GateKind.INPUT, ()), "a": (GateKind.AND, ("x", "b")), "b": (GateKind.OR, ("a",))}, ["a"]),
        ({"x": (GateKind.INPUT, ()), "a": (GateKind.AND, ("x", "missing"))}, ["a"]),
        ({"x": (GateKind.INPUT, ()), "a": (GateKind.NOT, ("x", "x"))}, ["a"]),
        ({"x": (GateKind.INPUT, ()), "a": (GateKind.OR, ())}, ["a"]),
        ({"x": (GateKind.INPUT, ()), "a": (GateKind.NOT, ("x",)), "b": (GateKind.NOT, ("x",))}, ["a"]),
    ],
)
def test_malformed_circuits(gates, outputs):
    with pytest.raises(MalformedCircuit):
        circuit(gates, ["x"], outputs)


def test_depth_zero_circuit_cannot_compile():
    c = circuit({"x": (GateKind.INPUT, ())}, ["x"], ["x"])
    with pytest.raises(MalformedCircuit):
        circuit_to_mlp(c)


def test_unused_inputs_are_allowed():
    c = circuit(
        {"x": (GateKind.INPUT, ()), "y": (GateKind.INPUT, ()), "out": (GateKind.NOT, ("x",))},
        ["x", "y"],
        ["out"],
    )
    assert_compiles(c)
    assert truth_table(c)[(0, 1)] == (1,)
