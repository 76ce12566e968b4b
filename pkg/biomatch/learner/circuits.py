"""
Boolean circuits and their compilation into threshold MLPs.

A circuit of depth d becomes an MLP with d (Linear, Threshold) blocks: block
l computes every gate on level l and copies forward any earlier wire that a
later level still reads.
"""

from dataclasses import dataclass, field
from enum import Enum
from itertools import product
from typing import Dict, List, Mapping, Sequence, Tuple

import numpy as np

from biomatch.errors import MalformedCircuit
from biomatch.learner.layers import Activation, ActivationKind, Layer, Linear
from biomatch.learner.network import NeuralNetwork, forward_batch


class GateKind(str, Enum):
    INPUT = "input"
    AND = "and"
    OR = "or"
    NOT = "not"


@dataclass(frozen=True)
class Gate:
    kind: GateKind
    inputs: Tuple[str, ...] = ()

    def __post_init__(self):
        object.__setattr__(self, "kind", GateKind(self.kind))
        object.__setattr__(self, "inputs", tuple(self.inputs))


@dataclass(frozen=True)
class BooleanCircuit:
    """
    Named gates forming a DAG. ``inputs`` fixes the order of the INPUT gates
    and ``outputs`` the order of the result bits. Every non-input gate must
    feed at least one output; an input may go unread.
    """

    gates: Mapping[str, Gate]
    inputs: Tuple[str, ...]
    outputs: Tuple[str, ...]
    levels: Dict[str, int] = field(init=False, repr=False, compare=False)

    def __post_init__(self):
        object.__setattr__(self, "gates", dict(self.gates))
        object.__setattr__(self, "inputs", tuple(self.inputs))
        object.__setattr__(self, "outputs", tuple(self.outputs))
        object.__setattr__(self, "levels", _levels(self))

    @property
    def depth(self) -> int:
        return max(self.levels[name] for name in self.outputs)

    @property
    def arity(self) -> int:
        return len(self.inputs)


def _levels(circuit: BooleanCircuit) -> Dict[str, int]:
    gates = circuit.gates
    declared = {name for name, gate in gates.items() if gate.kind == GateKind.INPUT}
    if set(circuit.inputs) != declared or len(circuit.inputs) != len(declared):
        raise MalformedCircuit("the input order must list every INPUT gate exactly once")
    if not circuit.outputs:
        raise MalformedCircuit("a circuit needs at least one output")
    for name, gate in gates.items():
        if gate.kind == GateKind.INPUT:
            if gate.inputs:
                raise MalformedCircuit(f"input gate {name!r} cannot have predecessors")
            continue
        if not gate.inputs:
            raise MalformedCircuit(f"gate {name!r} has no predecessors")
        if gate.kind == GateKind.NOT and len(gate.inputs) != 1:
            raise MalformedCircuit(f"NOT gate {name!r} must have exactly one input")
        for source in gate.inputs:
            if source not in gates:
                raise MalformedCircuit(f"gate {name!r} reads undefined wire {source!r}")
    for name in circuit.outputs:
        if name not in gates:
            raise MalformedCircuit(f"output {name!r} is not a gate")

    levels: Dict[str, int] = {}
    visiting = set()

    def visit(name: str) -> int:
        if name in levels:
            return levels[name]
        if name in visiting:
            raise MalformedCircuit(f"cycle through gate {name!r}")
        visiting.add(name)
        gate = gates[name]
        level = 0 if gate.kind == GateKind.INPUT else 1 + max(visit(src) for src in gate.inputs)
        visiting.discard(name)
        levels[name] = level
        return level

    for name in gates:
        visit(name)

    # every computed gate must feed some output; unused inputs are fine
    reached = set()
    pending = list(circuit.outputs)
    while pending:
        name = pending.pop()
        if name not in reached:
            reached.add(name)
            pending.extend(gates[name].inputs)
    for name, gate in gates.items():
        if gate.kind != GateKind.INPUT and name not in reached:
            raise MalformedCircuit(f"dangling gate {name!r} reaches no output")
    return levels


def evaluate_circuit(circuit: BooleanCircuit, assignment: Sequence[int]) -> Tuple[int, ...]:
    """Reference evaluation, used as the truth-table oracle."""
    if len(assignment) != circuit.arity:
        raise ValueError(f"circuit takes {circuit.arity} inputs, got {len(assignment)}")
    values = {name: int(bool(bit)) for name, bit in zip(circuit.inputs, assignment)}
    for name in sorted(circuit.gates, key=lambda n: circuit.levels[n]):
        gate = circuit.gates[name]
        if gate.kind == GateKind.INPUT:
            continue
        bits = [values[src] for src in gate.inputs]
        if gate.kind == GateKind.AND:
            values[name] = int(all(bits))
        elif gate.kind == GateKind.OR:
            values[name] = int(any(bits))
        else:
            values[name] = 1 - bits[0]
    return tuple(values[name] for name in circuit.outputs)


def truth_table(circuit: BooleanCircuit) -> Dict[Tuple[int, ...], Tuple[int, ...]]:
    return {bits: evaluate_circuit(circuit, bits) for bits in product((0, 1), repeat=circuit.arity)}


def circuit_to_mlp(circuit: BooleanCircuit) -> NeuralNetwork:
    """Compile ``circuit`` into a threshold MLP of the same depth."""
    depth = circuit.depth
    if depth == 0:
        raise MalformedCircuit("circuit has no gates between its inputs and outputs")
    levels = circuit.levels
    # last level at which each wire is read (outputs are read at depth + 1)
    last_use = {name: levels[name] for name in circuit.gates}
    for name, gate in circuit.gates.items():
        for src in gate.inputs:
            last_use[src] = max(last_use[src], levels[name])
    for name in circuit.outputs:
        last_use[name] = depth + 1

    wires: List[str] = list(circuit.inputs)
    layers: List[Layer] = []
    for level in range(1, depth + 1):
        computed = sorted(name for name in circuit.gates if levels[name] == level)
        carried = [name for name in wires if last_use[name] > level]
        if level == depth:
            computed = [name for name in computed if name in circuit.outputs]
            carried = [name for name in carried if name in circuit.outputs]
        next_wires = carried + [name for name in computed if name not in carried]
        position = {name: i for i, name in enumerate(wires)}
        weights = np.zeros((len(wires), len(next_wires)))
        bias = np.zeros(len(next_wires))
        for column, name in enumerate(next_wires):
            gate = circuit.gates[name]
            if levels[name] < level:
                weights[position[name], column] = 1.0
                bias[column] = -0.5
            elif gate.kind == GateKind.AND:
                for src in gate.inputs:
                    weights[position[src], column] += 1.0
                bias[column] = -len(gate.inputs) + 0.5
            elif gate.kind == GateKind.OR:
                for src in gate.inputs:
                    weights[position[src], column] += 1.0
                bias[column] = -0.5
            else:
                weights[position[gate.inputs[0]], column] = -1.0
                bias[column] = 0.5
        layers.append(Linear(weights, bias))
        layers.append(Activation(ActivationKind.THRESHOLD))
        wires = next_wires

    # reorder the final wires to the declared output order
    order = [wires.index(name) for name in circuit.outputs]
    if order != list(range(len(wires))) or len(order) != len(wires):
        last: Linear = layers[-2]
        layers[-2] = Linear(last.weights[:, order], last.bias[order])
    return NeuralNetwork(tuple(layers), (circuit.arity,))


def mlp_truth_table(net: NeuralNetwork, arity: int) -> Dict[Tuple[int, ...], Tuple[int, ...]]:
    rows = list(product((0, 1), repeat=arity))
    outputs = forward_batch(net, np.array(rows, dtype=np.float64))
    return {row: tuple(int(v) for v in out) for row, out in zip(rows, outputs)}
