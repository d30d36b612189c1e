"""Bundled synthetic market data.

The price fixture is a seeded log-normal simulation with roughly 4.5%, 4.5%
and 1.5% monthly volatility, 0.85 correlation between the two equity series
and 0.2 between each equity series and the bond series. It stands in for
licensed index history.
"""
from __future__ import annotations

from importlib import resources
from pathlib import Path

import numpy as np

from .distload import QubitAllocation
from .market import PriceSeries, build_model, load_prices

ASSETS = ("us_equity", "intl_equity", "global_bonds")
PAPER_MU_ANNUAL = (0.10, 0.10, 0.06)
PAPER_ALLOC = (3, 3, 3)

FIXTURE_SEED = 20240611
FIXTURE_VOLS = np.array([0.045, 0.045, 0.015])
FIXTURE_CORR = np.array([[1.0, 0.85, 0.2], [0.85, 1.0, 0.2], [0.2, 0.2, 1.0]])
FIXTURE_DRIFT = np.array([0.0075, 0.0060, 0.0030])


def make_synthetic_prices(rows: int = 240, seed: int = FIXTURE_SEED,
                          start: str = "2004-01") -> PriceSeries:
    cov = FIXTURE_CORR * np.outer(FIXTURE_VOLS, FIXTURE_VOLS)
    rng = np.random.Generator(np.random.PCG64(seed))
    rets = rng.multivariate_normal(FIXTURE_DRIFT, cov, size=rows - 1, method="cholesky")
    levels = 100.0 * np.exp(np.vstack([np.zeros(3), np.cumsum(rets, axis=0)]))
    levels = np.round(levels, 6)
    y, m = map(int, start.split("-"))
    first = y * 12 + m - 1
    dates = tuple(f"{(first + i) // 12:04d}-{(first + i) % 12 + 1:02d}" for i in range(rows))
    return PriceSeries(ASSETS, dates, levels)


def fixture_prices_path() -> Path:
    return Path(str(resources.files("qalloc") / "data" / "synthetic_prices.csv"))


def fixture_prices() -> PriceSeries:
    return load_prices(fixture_prices_path())


def fixture_model(alloc=PAPER_ALLOC, k: float = 3.0):
    """Model calibrated on the bundled prices with 10%/10%/6% expected returns.

    Fewer than three entries in ``alloc`` keep the leading assets only.
    """
    alloc = alloc if isinstance(alloc, QubitAllocation) else QubitAllocation(tuple(alloc))
    model = build_model(PAPER_MU_ANNUAL, QubitAllocation(PAPER_ALLOC), k, series=fixture_prices())
    d = alloc.num_assets
    return build_model(model.mu_annual[:d], alloc, k,
                       sigma_monthly=model.sigma_monthly[:d, :d], names=model.names[:d])
