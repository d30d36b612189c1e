"""Discretized multivariate normal distributions and their state-preparation circuits.

Each asset ``d`` owns a contiguous block of ``q_d`` qubits; asset 0 sits in
the least-significant block, so the joint basis index of grid point
``(i_0, i_1, ...)`` is ``sum(i_d << offset_d)``. Grid points are evenly
spaced with both endpoints included.
"""
from __future__ import annotations

import json
import time
from dataclasses import dataclass

import numpy as np

from .circuit import Circuit, gate_counts, lower, mcry, ry
from .errors import (
    AlreadyMeasured,
    DegenerateVariance,
    DistributionError,
    NonSymmetric,
    NotPSD,
    SingularCovariance,
)

DEFAULT_BOUNDS_K = 3.0
SYMMETRY_TOL = 1e-12
PSD_TOL = 1e-10


@dataclass(frozen=True)
class QubitAllocation:
    qubits_per_dim: tuple[int, ...]

    def __post_init__(self):
        q = tuple(int(x) for x in self.qubits_per_dim)
        if not q or any(x < 1 for x in q):
            raise DistributionError(f"qubit allocation entries must be >= 1, got {list(q)}")
        object.__setattr__(self, "qubits_per_dim", q)

    @classmethod
    def parse(cls, text: str) -> QubitAllocation:
        try:
            return cls(tuple(int(x) for x in text.split(",")))
        except ValueError as exc:
            raise DistributionError(f"bad qubit allocation {text!r}") from exc

    @property
    def total(self) -> int:
        return sum(self.qubits_per_dim)

    @property
    def num_assets(self) -> int:
        return len(self.qubits_per_dim)

    @property
    def offsets(self) -> tuple[int, ...]:
        out, acc = [], 0
        for q in self.qubits_per_dim:
            out.append(acc)
            acc += q
        return tuple(out)

    def split_index(self, index: int) -> tuple[int, ...]:
        return tuple((index >> off) & ((1 << q) - 1)
                     for off, q in zip(self.offsets, self.qubits_per_dim))

    def join_index(self, parts) -> int:
        return sum(int(i) << off for i, off in zip(parts, self.offsets))

    def __str__(self):
        return ",".join(map(str, self.qubits_per_dim))


@dataclass(frozen=True, eq=False)
class Grid:
    lows: np.ndarray
    highs: np.ndarray
    alloc: QubitAllocation

    @property
    def num_points(self) -> tuple[int, ...]:
        return tuple(2**q for q in self.alloc.qubits_per_dim)

    def points(self, dim: int) -> np.ndarray:
        return np.linspace(self.lows[dim], self.highs[dim], self.num_points[dim])

    def joint_points(self) -> np.ndarray:
        """All grid points as a ``(2**n, assets)`` array in joint-index order."""
        axes = [self.points(d) for d in reversed(range(self.alloc.num_assets))]
        mesh = np.meshgrid(*axes, indexing="ij")
        return np.stack([m.reshape(-1) for m in reversed(mesh)], axis=1)

    def value(self, index: int) -> np.ndarray:
        parts = self.alloc.split_index(index)
        return np.array([self.points(d)[i] for d, i in enumerate(parts)])


@dataclass(frozen=True, eq=False)
class DiscretizedDistribution:
    grid: Grid
    probabilities: np.ndarray

    @property
    def alloc(self) -> QubitAllocation:
        return self.grid.alloc

    def mean(self) -> np.ndarray:
        return self.probabilities @ self.grid.joint_points()

    def covariance(self) -> np.ndarray:
        """Exact covariance of the discrete distribution, by direct summation."""
        x = self.grid.joint_points()
        d = x - self.mean()
        cov = (d * self.probabilities[:, None]).T @ d
        return (cov + cov.T) / 2


def _check_covariance(mu, sigma):
    mu = np.asarray(mu, dtype=float).reshape(-1)
    sigma = np.atleast_2d(np.asarray(sigma, dtype=float))
    if sigma.shape != (mu.size, mu.size):
        raise DistributionError(f"covariance shape {sigma.shape} does not match {mu.size} means")
    if np.any(np.diag(sigma) <= 0):
        raise DegenerateVariance(f"non-positive variance on the diagonal: {np.diag(sigma)}")
    if np.max(np.abs(sigma - sigma.T)) > SYMMETRY_TOL:
        raise NonSymmetric("covariance matrix is not symmetric")
    if np.linalg.eigvalsh(sigma).min() < -PSD_TOL:
        raise NotPSD("covariance matrix is not positive semidefinite")
    return mu, sigma


def build_grid(alloc: QubitAllocation, mu_m, sigma_m, k: float = DEFAULT_BOUNDS_K) -> Grid:
    """Per-asset grid spanning ``mu +/- k * sd`` with ``2**q`` points."""
    if not k > 0:
        raise DistributionError(f"bounds multiplier must be positive, got {k}")
    mu, sigma = _check_covariance(mu_m, sigma_m)
    if mu.size != alloc.num_assets:
        raise DistributionError(
            f"{mu.size} assets but allocation {list(alloc.qubits_per_dim)}"
        )
    sd = np.sqrt(np.diag(sigma))
    return Grid(mu - k * sd, mu + k * sd, alloc)


def discretize(grid: Grid, mu_m, sigma_m) -> DiscretizedDistribution:
    """Normalized pointwise normal density over every joint grid point."""
    mu, sigma = _check_covariance(mu_m, sigma_m)
    try:
        chol = np.linalg.cholesky(sigma)
    except np.linalg.LinAlgError as exc:
        raise SingularCovariance("covariance matrix is not invertible") from exc
    if np.linalg.cond(sigma) > 1e12:
        raise SingularCovariance("covariance matrix is numerically singular")
    z = np.linalg.solve(chol, (grid.joint_points() - mu).T)
    logp = -0.5 * np.einsum("ij,ij->j", z, z)
    p = np.exp(logp - logp.max())
    # np.sum reduces pairwise, a fixed order for a given array length
    p /= p.sum()
    return DiscretizedDistribution(grid, p)


def _level_angles(probs: np.ndarray, n: int, level: int) -> np.ndarray:
    """RY angles for the rotation on qubit ``n - 1 - level``.

    Entry ``c`` is conditioned on the already-prepared higher qubits holding
    value ``c``.
    """
    marg = probs.reshape(2 ** (level + 1), -1).sum(axis=1).reshape(-1, 2)
    return 2 * np.arctan2(np.sqrt(marg[:, 1]), np.sqrt(marg[:, 0]))


def synthesize(dist: DiscretizedDistribution) -> Circuit:
    """Build a circuit whose amplitudes are ``sqrt(p)``.

    Qubits are fixed from the most significant down: level ``l`` rotates qubit
    ``n - 1 - l`` by an angle multiplexed on the ``l`` qubits above it, so the
    circuit is one RY followed by ``n - 1`` MCRY gates.
    """
    probs = np.asarray(dist.probabilities, dtype=float)
    n = dist.alloc.total
    if probs.size != 2**n:
        raise DistributionError(f"{probs.size} probabilities for {n} qubits")
    if np.any(probs < 0):
        raise DistributionError("negative probability")
    ops = []
    for level in range(n):
        target = n - 1 - level
        angles = _level_angles(probs, n, level)
        if level == 0:
            ops.append(ry(target, angles[0]))
        else:
            ops.append(mcry(range(target + 1, n), target, angles))
    return Circuit(n, tuple(ops))


def combine_with_measurement(circuit: Circuit) -> Circuit:
    """Attach the terminal measurement of every qubit."""
    if circuit.measured:
        raise AlreadyMeasured("circuit already carries a terminal measurement")
    return Circuit(circuit.num_qubits, circuit.ops, measured=True)


@dataclass(frozen=True)
class SynthesisCost:
    alloc: QubitAllocation
    predicted_ry: int
    native_counts: dict
    lowered_counts: dict
    synthesis_seconds: float
    lowering_seconds: float

    @property
    def build_seconds(self) -> float:
        return self.synthesis_seconds + self.lowering_seconds

    def to_dict(self) -> dict:
        return {
            "alloc": list(self.alloc.qubits_per_dim),
            "predicted_ry": self.predicted_ry,
            "native_counts": self.native_counts,
            "lowered_counts": self.lowered_counts,
            "synthesis_ms": self.synthesis_seconds * 1e3,
            "lowering_ms": self.lowering_seconds * 1e3,
        }


def synthesis_cost(alloc: QubitAllocation, dist: DiscretizedDistribution | None = None,
                   repeats: int = 1) -> SynthesisCost:
    """Time synthesis and lowering for ``alloc``; report gate counts.

    Without ``dist`` a standard normal per asset (identity covariance) is
    used; gate counts do not depend on the distribution. Times are the
    minimum over ``repeats`` runs.
    """
    if dist is None:
        d = alloc.num_assets
        grid = build_grid(alloc, np.zeros(d), np.eye(d))
        dist = discretize(grid, np.zeros(d), np.eye(d))
    t_syn = t_low = float("inf")
    for _ in range(max(1, repeats)):
        t0 = time.perf_counter()
        native = synthesize(dist)
        t1 = time.perf_counter()
        lowered = lower(native)
        t2 = time.perf_counter()
        t_syn, t_low = min(t_syn, t1 - t0), min(t_low, t2 - t1)
    return SynthesisCost(alloc, 2**alloc.total - 1, gate_counts(native),
                         gate_counts(lowered), t_syn, t_low)


def dumps_distribution(dist: DiscretizedDistribution, metadata: dict | None = None) -> str:
    doc = {
        "format": "qalloc.distribution",
        "version": 1,
        "alloc": list(dist.alloc.qubits_per_dim),
        "lows": [float(x) for x in dist.grid.lows],
        "highs": [float(x) for x in dist.grid.highs],
        "probabilities": [float(x) for x in dist.probabilities],
    }
    if metadata:
        doc["metadata"] = metadata
    return json.dumps(doc, indent=1) + "\n"


def loads_distribution(text: str) -> DiscretizedDistribution:
    doc = json.loads(text)
    alloc = QubitAllocation(tuple(doc["alloc"]))
    grid = Grid(np.array(doc["lows"]), np.array(doc["highs"]), alloc)
    return DiscretizedDistribution(grid, np.array(doc["probabilities"]))
