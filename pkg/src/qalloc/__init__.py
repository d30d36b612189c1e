"""Quantum-circuit Monte Carlo for multi-period asset allocation.

A discretized multivariate normal of monthly log-returns is amplitude-encoded
by a multiplexed-RY circuit, simulated on a dense statevector, sampled shot by
shot (one shot per month) and fed to rebalanced portfolio backtests.
"""

__version__ = "0.1.0"

from .circuit import Circuit, GateOp, gate_counts, lower, validate
from .distload import (
    DiscretizedDistribution,
    Grid,
    QubitAllocation,
    build_grid,
    combine_with_measurement,
    discretize,
    synthesis_cost,
    synthesize,
)
from .market import MarketModel, build_model, estimate_covariance, load_prices, monthly_log_returns
from .portfolio import (
    PortfolioReport,
    RebalancePolicy,
    ReturnPath,
    annualize,
    backtest,
    decode,
    delta_sigma,
    delta_sigma_disc,
    run_execution,
    run_executions,
)
from .statevec import ShotResult, StateVector, child_seed, sample, simulate
