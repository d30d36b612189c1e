"""
Executions and the covariance check
===================================

An execution is 120 shots, one per month, i.e. ten years of returns. After
each execution we compare the sample covariance of the decoded returns with
the model's input covariance.
"""

import numpy as np

from qalloc.datasets import fixture_model
from qalloc.portfolio import delta_sigma, delta_sigma_disc, prepare, run_execution

model = fixture_model((3, 3, 3))
prepared = prepare(model)

path = run_execution(model, shots=120, seed=0, prepared=prepared)
print("first three months of log-returns:")
print(np.array2string(path.returns[:3], precision=4))

###############################################################################
# One execution: entries of order 1e-4, driven by sampling noise.

print("dSigma x 1e4 for one execution:")
print(np.array2string(delta_sigma(model, path) * 1e4, precision=2))

###############################################################################
# Across 200 executions.

maxima = [np.abs(delta_sigma(model, run_execution(model, 120, s, prepared=prepared))).max()
          for s in range(200)]
print(f"median max|dSigma| over 200 executions: {np.median(maxima):.2e}")
print(f"5th / 95th percentile: {np.percentile(maxima, 5):.2e} / {np.percentile(maxima, 95):.2e}")

###############################################################################
# With many shots, the sampling noise vanishes and only the grid bias is left.

disc = delta_sigma_disc(model, prepared)
for shots in (10**3, 10**4, 10**5):
    gap = np.abs(delta_sigma(model, run_execution(model, shots, 7, prepared=prepared)) - disc).max()
    print(f"{shots:>7} shots: max|dSigma - dSigma_disc| = {gap:.2e}")
