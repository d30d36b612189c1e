"""Gate-level circuit representation.

The gate set is deliberately small: single-qubit ``RY``/``RZ``, ``CX``, and
``MCRY``, a uniformly controlled (multiplexed) ``RY`` whose angle is selected
by the classical value of its control qubits. ``controls[j]`` contributes bit
``j`` of that value, so the first listed control is the least significant.

Circuits are immutable; :meth:`Circuit.append` returns a new circuit.
"""
from __future__ import annotations

import json
from collections import Counter
from dataclasses import dataclass, field

import numpy as np

from .errors import ArityMismatch, CircuitError, DuplicateControl, IndexOutOfRange

RY, RZ, CX, MCRY = "RY", "RZ", "CX", "MCRY"
KINDS = (RY, RZ, CX, MCRY)

FORMAT_VERSION = 1


@dataclass(frozen=True)
class GateOp:
    kind: str
    target: int
    controls: tuple[int, ...] = ()
    angles: tuple[float, ...] = ()

    def __post_init__(self):
        object.__setattr__(self, "controls", tuple(int(c) for c in self.controls))
        object.__setattr__(self, "angles", tuple(float(a) for a in self.angles))

    @property
    def qubits(self) -> tuple[int, ...]:
        return (*self.controls, self.target)

    def check(self, num_qubits: int) -> None:
        """Raise if this gate is malformed on a register of ``num_qubits``."""
        if self.kind not in KINDS:
            raise CircuitError(f"unknown gate kind {self.kind!r}")
        for q in self.qubits:
            if not 0 <= q < num_qubits:
                raise IndexOutOfRange(
                    f"{self.kind} uses qubit {q} on a {num_qubits}-qubit circuit"
                )
        if self.target in self.controls or len(set(self.controls)) != len(self.controls):
            raise DuplicateControl(
                f"{self.kind} target {self.target} / controls {list(self.controls)} overlap"
            )
        k = len(self.controls)
        if self.kind in (RY, RZ):
            ok = k == 0 and len(self.angles) == 1
        elif self.kind == CX:
            ok = k == 1 and len(self.angles) == 0
        else:
            ok = k >= 1 and len(self.angles) == 2**k
        if not ok:
            raise ArityMismatch(
                f"{self.kind} with {k} controls and {len(self.angles)} angles"
            )


def ry(target, theta):
    return GateOp(RY, target, (), (theta,))


def rz(target, theta):
    return GateOp(RZ, target, (), (theta,))


def cx(control, target):
    return GateOp(CX, target, (control,), ())


def mcry(controls, target, angles):
    return GateOp(MCRY, target, tuple(controls), tuple(angles))


@dataclass(frozen=True)
class Circuit:
    num_qubits: int
    ops: tuple[GateOp, ...] = field(default=())
    measured: bool = False

    def __post_init__(self):
        object.__setattr__(self, "ops", tuple(self.ops))

    def append(self, *ops: GateOp) -> Circuit:
        return Circuit(self.num_qubits, self.ops + ops, self.measured)

    def __len__(self):
        return len(self.ops)


def validate(circuit: Circuit) -> None:
    """Check every structural invariant, raising the first violation found."""
    if not isinstance(circuit.num_qubits, int) or circuit.num_qubits < 1:
        raise CircuitError(f"num_qubits must be a positive integer, got {circuit.num_qubits!r}")
    for op in circuit.ops:
        op.check(circuit.num_qubits)


def gate_counts(circuit: Circuit) -> dict[str, int]:
    tally = Counter(op.kind for op in circuit.ops)
    return {kind: tally.get(kind, 0) for kind in KINDS}


def gray_code(i: int) -> int:
    return i ^ (i >> 1)


def multiplexor_angles(angles) -> np.ndarray:
    """Transform multiplexor angles into the RY angles of the CX ladder.

    With ``M[c, i] = (-1) ** popcount(c & gray(i))`` the ladder realizes
    ``angles = M @ theta``. ``M`` is a Hadamard matrix with permuted columns,
    so ``theta[i] = wht(angles)[gray(i)] / 2**k``.
    """
    a = np.array(angles, dtype=float)
    n = a.size
    h = 1
    while h < n:
        a = a.reshape(-1, 2, h)
        a = np.stack((a[:, 0] + a[:, 1], a[:, 0] - a[:, 1]), axis=1).reshape(-1)
        h *= 2
    idx = np.arange(n)
    return a[idx ^ (idx >> 1)] / n


def _lower_mcry(op: GateOp) -> list[GateOp]:
    k = len(op.controls)
    n = 2**k
    theta = multiplexor_angles(op.angles)
    out = []
    for i in range(n):
        out.append(ry(op.target, theta[i]))
        # bit flipped between gray(i) and gray(i + 1), wrapping to the top bit
        bit = (i + 1 & -(i + 1)).bit_length() - 1 if i < n - 1 else k - 1
        out.append(cx(op.controls[bit], op.target))
    return out


def lower(circuit: Circuit) -> Circuit:
    """Rewrite every MCRY as ``2**k`` RY and ``2**k`` CX gates.

    The result contains only RY, RZ and CX and implements the same unitary.
    """
    validate(circuit)
    ops: list[GateOp] = []
    for op in circuit.ops:
        if op.kind == MCRY:
            ops.extend(_lower_mcry(op))
        else:
            ops.append(op)
    return Circuit(circuit.num_qubits, tuple(ops), circuit.measured)


def to_dict(circuit: Circuit) -> dict:
    return {
        "format": "qalloc.circuit",
        "version": FORMAT_VERSION,
        "num_qubits": circuit.num_qubits,
        "measured": circuit.measured,
        "ops": [
            {
                "kind": op.kind,
                "target": op.target,
                "controls": list(op.controls),
                "angles": list(op.angles),
            }
            for op in circuit.ops
        ],
    }


def from_dict(data: dict) -> Circuit:
    try:
        ops = tuple(
            GateOp(rec["kind"], rec["target"], rec.get("controls", ()), rec.get("angles", ()))
            for rec in data["ops"]
        )
        circuit = Circuit(int(data["num_qubits"]), ops, bool(data["measured"]))
    except (KeyError, TypeError) as exc:
        raise CircuitError(f"malformed circuit document: {exc}") from exc
    validate(circuit)
    return circuit


def dumps(circuit: Circuit, metadata: dict | None = None) -> str:
    """Serialize to JSON, one gate record per line.

    Floats are written with ``repr``, which round-trips bit-exactly.
    """
    doc = to_dict(circuit)
    head = {k: v for k, v in doc.items() if k != "ops"}
    if metadata:
        head["metadata"] = metadata
    lines = [json.dumps(head, sort_keys=True)[:-1] + ', "ops": [']
    recs = [json.dumps(rec) for rec in doc["ops"]]
    lines.extend(f"  {rec}," for rec in recs[:-1])
    if recs:
        lines.append(f"  {recs[-1]}")
    lines.append("]}")
    return "\n".join(lines) + "\n"


def loads(text: str) -> Circuit:
    return from_dict(json.loads(text))
