"""Return paths from shot samples, rebalanced backtests and covariance diagnostics.

One shot is one month. Returns are monthly log-returns, so holdings grow by
``exp(r)`` and wealth stays strictly positive.
"""
from __future__ import annotations

import csv
import enum
import json
import math
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .circuit import Circuit
from .distload import DiscretizedDistribution, Grid, build_grid, discretize, synthesize, \
    combine_with_measurement
from .errors import BadWeights, EmptyPath, LengthMismatch, ParseError, TooFewRows, TooShort
from .market import MarketModel, estimate_covariance
from .statevec import StateVector, child_seed, sample, simulate

WEIGHT_TOL = 1e-12


class RebalancePolicy(enum.Enum):
    MONTHLY = ("monthly", 1)
    QUARTERLY = ("quarterly", 3)
    SEMIANNUAL = ("semiannual", 6)
    ANNUAL = ("annual", 12)
    BUY_AND_HOLD = ("buyhold", None)

    def __init__(self, label, period):
        self.label = label
        self.period = period

    @classmethod
    def parse(cls, text: str) -> RebalancePolicy:
        for p in cls:
            if p.label == text.strip().lower():
                return p
        raise ValueError(f"unknown policy {text!r}; choose from {', '.join(POLICY_NAMES)}")

    def rebalances_at(self, month: int) -> bool:
        if month == 0:
            return True
        return self.period is not None and month % self.period == 0


POLICY_NAMES = tuple(p.label for p in RebalancePolicy)


@dataclass(frozen=True, eq=False)
class ReturnPath:
    returns: np.ndarray
    seed: int | None = None
    execution: int | None = None
    names: tuple[str, ...] = ()

    @property
    def months(self) -> int:
        return self.returns.shape[0]


@dataclass(frozen=True, eq=False)
class Prepared:
    """Everything upstream of sampling for one model, built once."""

    model: MarketModel
    grid: Grid
    dist: DiscretizedDistribution
    circuit: Circuit
    state: StateVector


def prepare(model: MarketModel) -> Prepared:
    grid = build_grid(model.alloc, model.mu_monthly, model.sigma_monthly, model.k)
    dist = discretize(grid, model.mu_monthly, model.sigma_monthly)
    circuit = combine_with_measurement(synthesize(dist))
    return Prepared(model, grid, dist, circuit, simulate(circuit))


def decode(bits: str, grid: Grid) -> np.ndarray:
    """Map a measured bitstring (most significant qubit first) to log-returns."""
    alloc = grid.alloc
    if len(bits) != alloc.total or set(bits) - {"0", "1"}:
        raise LengthMismatch(f"expected {alloc.total} binary digits, got {bits!r}")
    return decode_index(int(bits, 2), grid)


def decode_index(index: int, grid: Grid) -> np.ndarray:
    parts = grid.alloc.split_index(index)
    return np.array([grid.points(d)[i] for d, i in enumerate(parts)])


def _decode_many(outcomes, grid: Grid) -> np.ndarray:
    idx = np.asarray(outcomes, dtype=np.int64)
    cols = []
    for d, (off, q) in enumerate(zip(grid.alloc.offsets, grid.alloc.qubits_per_dim)):
        cols.append(grid.points(d)[(idx >> off) & ((1 << q) - 1)])
    return np.stack(cols, axis=1).reshape(len(idx), -1)


def run_execution(model: MarketModel, shots: int = 120, seed: int = 0, *,
                  execution: int | None = None, prepared: Prepared | None = None) -> ReturnPath:
    """Sample one execution: ``shots`` months of returns, in draw order."""
    prepared = prepared or prepare(model)
    result = sample(prepared.state, shots, seed)
    return ReturnPath(_decode_many(result.outcomes, prepared.grid), seed, execution, model.names)


def run_executions(model: MarketModel, executions: int, shots: int = 120,
                   base_seed: int = 0) -> list[ReturnPath]:
    """Independent executions; execution ``i`` is seeded ``child_seed(base_seed, i)``."""
    prepared = prepare(model)
    return [run_execution(model, shots, child_seed(base_seed, i), execution=i, prepared=prepared)
            for i in range(executions)]


def delta_sigma(model: MarketModel, path: ReturnPath) -> np.ndarray:
    """Sample covariance of the path minus the model's input covariance."""
    if path.months < 2:
        raise TooFewRows(f"need at least 2 months, got {path.months}")
    d = estimate_covariance(path.returns) - model.sigma_monthly
    return (d + d.T) / 2


def delta_sigma_disc(model: MarketModel, prepared: Prepared | None = None) -> np.ndarray:
    """Deterministic discretization bias: grid-exact covariance minus input covariance."""
    prepared = prepared or prepare(model)
    d = prepared.dist.covariance() - model.sigma_monthly
    return (d + d.T) / 2


@dataclass(frozen=True, eq=False)
class PortfolioReport:
    policy: RebalancePolicy
    target_weights: np.ndarray
    wealth: np.ndarray
    weights: np.ndarray
    terminal_wealth: float
    annual_return: float | None
    annual_volatility: float | None
    delta_sigma: np.ndarray | None = None
    delta_sigma_disc: np.ndarray | None = None
    names: tuple[str, ...] = ()

    @property
    def portfolio_log_returns(self) -> np.ndarray:
        return np.log(self.wealth[1:] / self.wealth[:-1])

    def to_dict(self) -> dict:
        def mat(a):
            return None if a is None else [[float(x) for x in row] for row in a]

        return {
            "format": "qalloc.report",
            "version": 1,
            "names": list(self.names),
            "policy": self.policy.label,
            "target_weights": [float(x) for x in self.target_weights],
            "terminal_wealth": float(self.terminal_wealth),
            "annual_return": self.annual_return,
            "annual_volatility": self.annual_volatility,
            "wealth": [float(x) for x in self.wealth],
            "weights": mat(self.weights),
            "delta_sigma": mat(self.delta_sigma),
            "delta_sigma_disc": mat(self.delta_sigma_disc),
        }


def check_weights(weights) -> np.ndarray:
    w = np.atleast_1d(np.asarray(weights, dtype=float))
    if w.ndim != 1 or w.size == 0 or not np.all(np.isfinite(w)):
        raise BadWeights(f"weights must be a non-empty vector, got {weights!r}")
    if np.any(w < 0):
        raise BadWeights(f"weights must be nonnegative, got {w.tolist()}")
    if abs(math.fsum(w) - 1.0) > WEIGHT_TOL:
        raise BadWeights(f"weights must sum to 1, got {math.fsum(w)!r}")
    return w


def annualize(wealth) -> tuple[float, float]:
    """Geometric annual return and annualized volatility of a monthly wealth path."""
    wealth = np.asarray(wealth, dtype=float)
    months = wealth.size - 1
    if months < 12:
        raise TooShort(f"annualizing needs at least 12 months, got {months}")
    ret = (wealth[-1] / wealth[0]) ** (12 / months) - 1
    logr = np.log(wealth[1:] / wealth[:-1])
    vol = float(np.std(logr, ddof=1) * math.sqrt(12))
    return float(ret), vol


def backtest(path: ReturnPath | np.ndarray, weights, policy: RebalancePolicy, *,
             transaction_cost: float = 0.0, model: MarketModel | None = None) -> PortfolioReport:
    """Simulate a fixed-weight portfolio rebalanced on ``policy``'s schedule.

    Rebalancing happens at the start of a month, before that month's return
    accrues; month 0 always rebalances. Passing ``model`` fills the covariance
    diagnostics.
    """
    if transaction_cost != 0:
        raise NotImplementedError("transaction costs are not modelled; use 0")
    if isinstance(path, ReturnPath):
        returns, names = path.returns, path.names
    else:
        returns, names = np.asarray(path, dtype=float), ()
        path = ReturnPath(returns)
    returns = np.atleast_2d(returns)
    if returns.size == 0:
        raise EmptyPath("return path has no months")
    w = check_weights(weights)
    months, assets = returns.shape
    if w.size != assets:
        raise BadWeights(f"{w.size} weights for {assets} assets")

    growth = np.exp(returns)
    wealth = np.empty(months + 1)
    wealth[0] = 1.0
    realized = np.empty((months, assets))
    hold = w.copy()
    for t in range(months):
        if policy.rebalances_at(t):
            hold = wealth[t] * w
        realized[t] = hold / hold.sum()
        hold = hold * growth[t]
        wealth[t + 1] = hold.sum()

    ann_ret = ann_vol = None
    if months >= 12:
        ann_ret, ann_vol = annualize(wealth)
    ds = dsd = None
    if model is not None and months >= 2:
        ds = delta_sigma(model, path)
        dsd = delta_sigma_disc(model)
    return PortfolioReport(policy, w, wealth, realized, float(wealth[-1]), ann_ret, ann_vol,
                           ds, dsd, tuple(names))


def write_return_path(target, path: ReturnPath, header: dict | None = None) -> None:
    """Write ``month,<asset>...`` CSV preceded by ``#`` metadata lines."""
    names = path.names or tuple(f"asset{i}" for i in range(path.returns.shape[1]))
    lines = [f"# {k}: {json.dumps(v, sort_keys=True)}" for k, v in (header or {}).items()]
    lines.append(",".join(["month", *names]))
    for t, row in enumerate(path.returns):
        lines.append(",".join([str(t), *(repr(float(x)) for x in row)]))
    Path(target).write_text("\n".join(lines) + "\n")


def read_return_path(source) -> ReturnPath:
    source = Path(source)
    try:
        text = source.read_text()
    except OSError as exc:
        raise ParseError(f"cannot read {source}: {exc.strerror}") from exc
    rows = [r for r in csv.reader(text.splitlines()) if r and not r[0].startswith("#")]
    if not rows or rows[0][0].strip() != "month":
        raise ParseError("header must be 'month,<asset1>,...'", row=1)
    names = tuple(h.strip() for h in rows[0][1:])
    data = []
    for lineno, row in enumerate(rows[1:], start=2):
        if len(row) != len(names) + 1:
            raise ParseError(f"expected {len(names) + 1} fields", row=lineno)
        try:
            data.append([float(x) for x in row[1:]])
        except ValueError:
            raise ParseError("non-numeric return", row=lineno) from None
    if not data:
        raise EmptyPath(f"{source} has no months")
    return ReturnPath(np.array(data), names=names)
