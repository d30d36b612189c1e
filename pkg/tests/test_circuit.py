import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from oracles import circuit_unitary
from qalloc.circuit import (
    Circuit,
    GateOp,
    cx,
    dumps,
    gate_counts,
    loads,
    lower,
    mcry,
    ry,
    rz,
    validate,
)
from qalloc.errors import ArityMismatch, CircuitError, DuplicateControl, IndexOutOfRange
from qalloc.statevec import simulate


def test_empty_circuit_is_valid():
    validate(Circuit(3))


def test_cx_control_equals_target():
    with pytest.raises(DuplicateControl):
        validate(Circuit(2, (cx(1, 1),)))


def test_mcry_angle_arity():
    with pytest.raises(ArityMismatch):
        validate(Circuit(3, (mcry([0, 1], 2, [0.1, 0.2, 0.3]),)))


@pytest.mark.parametrize("op, err", [
    (ry(3, 0.1), IndexOutOfRange),
    (cx(0, 5), IndexOutOfRange),
    (mcry([0, 0], 2, [0.0] * 4), DuplicateControl),
    (GateOp("RY", 0, (), ()), ArityMismatch),
    (GateOp("CX", 0, (1, 2), ()), ArityMismatch),
    (GateOp("MCRY", 0, (), (1.0,)), ArityMismatch),
    (GateOp("H", 0), CircuitError),
])
def test_invalid_ops(op, err):
    with pytest.raises(err):
        validate(Circuit(3, (op,)))


def test_lower_without_mcry_is_identity():
    c = Circuit(3, (ry(0, 0.3), cx(0, 1), rz(2, 1.1)))
    assert lower(c) == c


def _multiplexor_matrix(n, controls, target, angles):
    """Direct semantics: on each control value apply RY(angle) to the target."""
    u = np.zeros((2**n, 2**n))
    for col in range(2**n):
        sel = sum(((col >> c) & 1) << j for j, c in enumerate(controls))
        c, s = math.cos(angles[sel] / 2), math.sin(angles[sel] / 2)
        f = col ^ (1 << target)
        if (col >> target) & 1:
            u[col, col], u[f, col] = c, -s
        else:
            u[col, col], u[f, col] = c, s
    return u


def _action(circuit):
    """Simulate the circuit on every basis state; columns are the outputs."""
    n = circuit.num_qubits
    cols = []
    for i in range(2**n):
        e = np.zeros(2**n)
        e[i] = 1
        cols.append(simulate(circuit, initial=e).amplitudes)
    return np.array(cols).T


@pytest.mark.parametrize("controls, target, angles", [
    ([1], 0, [0.7, -1.9]),
    ([0], 1, [2.5, 0.4]),
    ([0, 1], 2, [0.1, 1.2, -2.3, 3.0]),
    ([2, 0], 1, [0.9, -0.4, 1.7, 2.2]),
])
def test_lowered_multiplexor_matches_direct_semantics(controls, target, angles):
    n = 1 + max(controls + [target])
    op = mcry(controls, target, angles)
    lowered = lower(Circuit(n, (op,)))
    k = len(controls)
    assert gate_counts(lowered) == {"RY": 2**k, "RZ": 0, "CX": 2**k, "MCRY": 0}
    expected = _multiplexor_matrix(n, controls, target, angles)
    assert np.max(np.abs(_action(lowered) - expected)) < 1e-12
    assert np.max(np.abs(_action(Circuit(n, (op,))) - expected)) < 1e-12


def test_gate_counts_empty():
    assert gate_counts(Circuit(4)) == {"RY": 0, "RZ": 0, "CX": 0, "MCRY": 0}


@st.composite
def circuits(draw, max_qubits=4, max_ops=6):
    n = draw(st.integers(2, max_qubits))
    angle = st.floats(-2 * math.pi, 2 * math.pi, allow_nan=False)
    ops = []
    for _ in range(draw(st.integers(0, max_ops))):
        kind = draw(st.sampled_from(["RY", "RZ", "CX", "MCRY"]))
        qubits = draw(st.permutations(range(n)))
        if kind in ("RY", "RZ"):
            ops.append(GateOp(kind, qubits[0], (), (draw(angle),)))
        elif kind == "CX":
            ops.append(cx(qubits[0], qubits[1]))
        else:
            k = draw(st.integers(1, n - 1))
            ops.append(mcry(qubits[1:k + 1], qubits[0], [draw(angle) for _ in range(2**k)]))
    return Circuit(n, tuple(ops))


@settings(max_examples=60, deadline=None)
@given(circuits())
def test_lowering_preserves_statevector(c):
    a = simulate(c).amplitudes
    b = simulate(lower(c)).amplitudes
    assert np.max(np.abs(a - b)) < 1e-12


@settings(max_examples=30, deadline=None)
@given(circuits(max_qubits=3, max_ops=4))
def test_simulator_matches_dense_unitary(c):
    expected = circuit_unitary(c)[:, 0]
    assert np.max(np.abs(simulate(c).amplitudes - expected)) < 1e-12


@settings(max_examples=40, deadline=None)
@given(circuits())
def test_lower_is_idempotent(c):
    once = lower(c)
    assert lower(once) == once


@settings(max_examples=40, deadline=None)
@given(circuits())
def test_serialization_round_trip_is_bit_exact(c):
    c = Circuit(c.num_qubits, c.ops, measured=True)
    back = loads(dumps(c, metadata={"note": "x"}))
    assert back == c
    for a, b in zip(c.ops, back.ops):
        assert [x.hex() for x in a.angles] == [x.hex() for x in b.angles]


def test_serialization_rejects_malformed():
    with pytest.raises(CircuitError):
        loads('{"num_qubits": 2, "measured": false, "ops": [{"kind": "RY", "target": 4, '
              '"controls": [], "angles": [0.1]}]}')
    with pytest.raises(CircuitError):
        loads('{"num_qubits": 2}')


def test_append_is_non_destructive():
    c = Circuit(2)
    d = c.append(ry(0, 0.5))
    assert len(c) == 0 and len(d) == 1
