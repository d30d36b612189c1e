"""
Rebalancing rules over simulated decades
========================================

Run a 60/30/10 portfolio through many executions and compare rebalancing
schedules. Returns are monthly log-returns; there are no trading costs.
"""

import numpy as np

from qalloc.datasets import fixture_model
from qalloc.portfolio import RebalancePolicy, backtest, run_executions

model = fixture_model((3, 3, 3))
weights = [0.6, 0.3, 0.1]
paths = run_executions(model, executions=500, shots=120, base_seed=2024)

print(f"{'policy':>11} {'mean ann. ret':>14} {'mean ann. vol':>14} {'median wealth':>14}")
for policy in RebalancePolicy:
    reps = [backtest(p, weights, policy) for p in paths]
    ret = np.mean([r.annual_return for r in reps])
    vol = np.mean([r.annual_volatility for r in reps])
    wealth = np.median([r.terminal_wealth for r in reps])
    print(f"{policy.label:>11} {ret:>14.4%} {vol:>14.4%} {wealth:>14.4f}")

###############################################################################
# Without rebalancing the weights drift towards whichever asset did best.

rep = backtest(paths[0], weights, RebalancePolicy.BUY_AND_HOLD)
print("buy-and-hold weights after 10 years:", np.round(rep.weights[-1], 3))
