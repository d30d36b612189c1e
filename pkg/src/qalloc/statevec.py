"""Dense statevector simulation and seeded shot sampling.

Qubit 0 is the least-significant bit of the amplitude index. Bitstrings are
printed most-significant qubit first, so ``"100"`` on three qubits is index 4
(qubit 2 set).
"""
from __future__ import annotations

import hashlib
import struct
from collections import Counter
from dataclasses import dataclass

import numpy as np

from .circuit import CX, MCRY, RY, RZ, Circuit, validate
from .errors import CapacityExceeded, NotNormalized, ZeroShots

MAX_QUBITS = 24
NORM_TOL = 1e-12


@dataclass(frozen=True, eq=False)
class StateVector:
    num_qubits: int
    amplitudes: np.ndarray

    def probabilities(self) -> np.ndarray:
        return np.abs(self.amplitudes) ** 2

    def norm(self) -> float:
        return float(np.linalg.norm(self.amplitudes))


@dataclass(frozen=True)
class ShotResult:
    """Outcome of ``shots`` full measurements.

    ``outcomes`` keeps the basis-state indices in draw order; ``counts`` is
    the usual bitstring histogram derived from it.
    """

    counts: dict[str, int]
    shots: int
    seed: int
    num_qubits: int
    outcomes: tuple[int, ...]

    def bitstrings(self) -> list[str]:
        return [bitstring(i, self.num_qubits) for i in self.outcomes]


def bitstring(index: int, num_qubits: int) -> str:
    return format(index, f"0{num_qubits}b")


def child_seed(base_seed: int, index: int) -> int:
    """Derive a 64-bit seed for execution ``index`` from ``base_seed``.

    BLAKE2b over the little-endian (base, index) pair; identical on every
    platform and independent of numpy's own seeding internals.
    """
    payload = struct.pack("<QQ", base_seed % 2**64, index % 2**64)
    return int.from_bytes(hashlib.blake2b(payload, digest_size=8).digest(), "little")


def make_rng(seed: int) -> np.random.Generator:
    return np.random.Generator(np.random.PCG64(seed % 2**64))


def _apply_ry(psi, n, q, theta):
    c, s = np.cos(theta / 2), np.sin(theta / 2)
    v = psi.reshape(2 ** (n - q - 1), 2, 2**q)
    a0, a1 = v[:, 0, :].copy(), v[:, 1, :].copy()
    v[:, 0, :] = c * a0 - s * a1
    v[:, 1, :] = s * a0 + c * a1


def _apply_rz(psi, n, q, theta):
    v = psi.reshape(2 ** (n - q - 1), 2, 2**q)
    v[:, 0, :] *= np.exp(-0.5j * theta)
    v[:, 1, :] *= np.exp(0.5j * theta)


def _apply_cx(psi, n, control, target):
    t = psi.reshape([2] * n)
    sel = [slice(None)] * n
    sel[n - 1 - control] = 1
    sub = t[tuple(sel)]
    # the control axis is gone from ``sub``; shift the target axis if needed
    axis = n - 1 - target
    if target < control:
        axis -= 1
    sub[...] = np.flip(sub, axis=axis).copy()


def _apply_mcry(psi, n, controls, target, angles):
    t = psi.reshape([2] * n)
    # most significant control first so the flattened index is sum(bit_j << j)
    src = [n - 1 - c for c in reversed(controls)] + [n - 1 - target]
    k = len(controls)
    dst = list(range(n - k - 1, n))
    moved = np.moveaxis(t, src, dst).reshape(-1, 2**k, 2)
    half = np.asarray(angles) / 2
    c, s = np.cos(half), np.sin(half)
    a0, a1 = moved[..., 0].copy(), moved[..., 1].copy()
    out = np.empty_like(moved)
    out[..., 0] = c * a0 - s * a1
    out[..., 1] = s * a0 + c * a1
    t[...] = np.moveaxis(out.reshape([2] * n), dst, src)


def apply_gate(psi: np.ndarray, n: int, op) -> None:
    """Apply ``op`` to the flat amplitude array ``psi`` in place."""
    if op.kind == RY:
        _apply_ry(psi, n, op.target, op.angles[0])
    elif op.kind == RZ:
        _apply_rz(psi, n, op.target, op.angles[0])
    elif op.kind == CX:
        _apply_cx(psi, n, op.controls[0], op.target)
    elif op.kind == MCRY:
        _apply_mcry(psi, n, op.controls, op.target, op.angles)
    else:  # pragma: no cover - validate() rejects unknown kinds
        raise ValueError(op.kind)


def simulate(circuit: Circuit, *, max_qubits: int = MAX_QUBITS, initial=None,
             check_norm: bool = False) -> StateVector:
    """Run ``circuit`` on ``|0...0>`` (or ``initial``) and return the final state.

    With ``check_norm`` the norm is verified after every gate.
    """
    validate(circuit)
    n = circuit.num_qubits
    if n > max_qubits:
        raise CapacityExceeded(f"{n} qubits exceeds the ceiling of {max_qubits}")
    if initial is None:
        psi = np.zeros(2**n, dtype=complex)
        psi[0] = 1.0
    else:
        psi = np.array(initial, dtype=complex).reshape(-1)
        if psi.size != 2**n:
            raise ValueError(f"initial state has {psi.size} amplitudes, expected {2**n}")
    for i, op in enumerate(circuit.ops):
        apply_gate(psi, n, op)
        if check_norm:
            err = abs(np.linalg.norm(psi) - 1.0)
            if err >= NORM_TOL:
                raise NotNormalized(f"norm drifted by {err:.3e} after gate {i} ({op.kind})")
    return StateVector(n, psi)


def sample(state: StateVector, shots: int, seed: int) -> ShotResult:
    """Draw ``shots`` full measurements by inverse-CDF lookup.

    The result is a pure function of ``(state, shots, seed)``.
    """
    if shots < 1:
        raise ZeroShots(f"shots must be positive, got {shots}")
    probs = state.probabilities()
    total = probs.sum()
    if abs(total - 1.0) > 1e-9:
        raise NotNormalized(f"state has squared norm {total!r}")
    cdf = np.cumsum(probs)
    u = make_rng(seed).random(shots) * cdf[-1]
    idx = np.searchsorted(cdf, u, side="right")
    np.minimum(idx, cdf.size - 1, out=idx)
    outcomes = tuple(int(i) for i in idx)
    n = state.num_qubits
    counts = Counter(bitstring(i, n) for i in outcomes)
    return ShotResult(dict(sorted(counts.items())), shots, seed, n, outcomes)


def empirical_distribution(result: ShotResult) -> np.ndarray:
    freq = np.bincount(result.outcomes, minlength=2**result.num_qubits)
    return freq / result.shots


def total_variation(result: ShotResult, state: StateVector) -> float:
    return 0.5 * float(np.abs(empirical_distribution(result) - state.probabilities()).sum())
