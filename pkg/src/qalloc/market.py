"""Calibration of the monthly return model from index price history.

Price files are CSV with a header ``date,<asset1>,<asset2>,...`` and one row
per month, dates written ``YYYY-MM``.
"""
from __future__ import annotations

import csv
import json
import math
import re
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .distload import DEFAULT_BOUNDS_K, PSD_TOL, SYMMETRY_TOL, QubitAllocation
from .errors import (
    DimensionMismatch,
    MissingMonths,
    NonPositiveLevel,
    NotPSD,
    ParseError,
    QallocError,
    TooFewRows,
    TooShort,
    UnorderedDates,
)

MIN_ROWS = 25
_DATE = re.compile(r"^(\d{4})-(\d{2})$")


def _month_ordinal(text: str, row: int) -> int:
    m = _DATE.match(text.strip())
    if not m or not 1 <= int(m.group(2)) <= 12:
        raise ParseError(f"bad date {text!r}, expected YYYY-MM", row=row, column="date")
    return int(m.group(1)) * 12 + int(m.group(2)) - 1


def _ordinal_to_text(ordinal: int) -> str:
    return f"{ordinal // 12:04d}-{ordinal % 12 + 1:02d}"


@dataclass(frozen=True, eq=False)
class PriceSeries:
    names: tuple[str, ...]
    dates: tuple[str, ...]
    levels: np.ndarray

    @property
    def num_assets(self) -> int:
        return len(self.names)

    def __len__(self):
        return len(self.dates)


def load_prices(path, *, fill_gaps: bool = False, min_rows: int = MIN_ROWS) -> PriceSeries:
    """Read and validate a monthly price CSV.

    Missing months raise :class:`MissingMonths` unless ``fill_gaps`` is set,
    in which case the previous month's levels are carried forward.
    """
    path = Path(path)
    try:
        with path.open(newline="") as fh:
            numbered = [(n, r) for n, r in enumerate(csv.reader(fh), start=1)
                        if r and not r[0].startswith("#")]
    except OSError as exc:
        raise ParseError(f"cannot read {path}: {exc.strerror}") from exc
    if not numbered:
        raise ParseError(f"{path} is empty")
    header = [h.strip() for h in numbered[0][1]]
    if len(header) < 2 or header[0].lower() != "date":
        raise ParseError("header must be 'date,<asset1>,...'", row=numbered[0][0])
    names = tuple(header[1:])

    ordinals, levels, linenos = [], [], []
    for lineno, row in numbered[1:]:
        linenos.append(lineno)
        if len(row) != len(header):
            raise ParseError(f"expected {len(header)} fields, got {len(row)}", row=lineno)
        ordinals.append(_month_ordinal(row[0], lineno))
        vals = []
        for name, cell in zip(names, row[1:]):
            try:
                v = float(cell)
            except ValueError:
                raise ParseError(f"not a number: {cell!r}", row=lineno, column=name) from None
            if not math.isfinite(v) or v <= 0:
                raise NonPositiveLevel(f"level must be positive, got {cell!r}",
                                       row=lineno, column=name)
            vals.append(v)
        levels.append(vals)

    for i in range(1, len(ordinals)):
        if ordinals[i] <= ordinals[i - 1]:
            raise UnorderedDates(
                f"{_ordinal_to_text(ordinals[i])} does not follow "
                f"{_ordinal_to_text(ordinals[i - 1])}", row=linenos[i]
            )

    filled_ord, filled = [], []
    for i, (o, vals) in enumerate(zip(ordinals, levels)):
        if filled_ord:
            prev = filled_ord[-1]
            if o > prev + 1:
                if not fill_gaps:
                    raise MissingMonths(
                        f"{o - prev - 1} month(s) missing before {_ordinal_to_text(o)}",
                        row=linenos[i],
                    )
                for gap in range(prev + 1, o):
                    filled_ord.append(gap)
                    filled.append(filled[-1])
        filled_ord.append(o)
        filled.append(vals)

    if len(filled) < min_rows:
        raise TooShort(f"{len(filled)} rows; at least {min_rows} are required")
    return PriceSeries(names, tuple(_ordinal_to_text(o) for o in filled_ord),
                       np.array(filled, dtype=float))


def write_prices(path, series: PriceSeries) -> None:
    with Path(path).open("w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["date", *series.names])
        for date, row in zip(series.dates, series.levels):
            w.writerow([date, *(repr(float(v)) for v in row)])


def monthly_log_returns(series: PriceSeries) -> np.ndarray:
    lv = series.levels
    return np.log(lv[1:] / lv[:-1])


def estimate_covariance(returns) -> np.ndarray:
    """Unbiased (N - 1) sample covariance of the rows of ``returns``."""
    r = np.atleast_2d(np.asarray(returns, dtype=float))
    if r.shape[0] < 2:
        raise TooFewRows(f"need at least 2 observations, got {r.shape[0]}")
    cov = np.atleast_2d(np.cov(r, rowvar=False, ddof=1))
    return (cov + cov.T) / 2


def annual_to_monthly_log(mu_annual) -> np.ndarray:
    return np.log1p(np.asarray(mu_annual, dtype=float)) / 12


@dataclass(frozen=True, eq=False)
class MarketModel:
    names: tuple[str, ...]
    mu_annual: np.ndarray
    mu_monthly: np.ndarray
    sigma_monthly: np.ndarray
    alloc: QubitAllocation
    k: float = DEFAULT_BOUNDS_K

    @property
    def num_assets(self) -> int:
        return len(self.names)

    def with_alloc(self, alloc: QubitAllocation) -> MarketModel:
        if alloc.num_assets != self.num_assets:
            raise DimensionMismatch(f"{self.num_assets} assets but allocation {alloc}")
        return MarketModel(self.names, self.mu_annual, self.mu_monthly,
                           self.sigma_monthly, alloc, self.k)

    def to_dict(self) -> dict:
        return {
            "format": "qalloc.model",
            "version": 1,
            "names": list(self.names),
            "mu_annual": [float(x) for x in self.mu_annual],
            "mu_monthly": [float(x) for x in self.mu_monthly],
            "sigma_monthly": [[float(x) for x in row] for row in self.sigma_monthly],
            "alloc": list(self.alloc.qubits_per_dim),
            "k": float(self.k),
        }

    @classmethod
    def from_dict(cls, doc: dict) -> MarketModel:
        try:
            model = cls(
                tuple(doc["names"]),
                np.array(doc["mu_annual"], dtype=float),
                np.array(doc["mu_monthly"], dtype=float),
                np.array(doc["sigma_monthly"], dtype=float),
                QubitAllocation(tuple(doc["alloc"])),
                float(doc["k"]),
            )
        except (KeyError, TypeError, ValueError) as exc:
            raise ParseError(f"malformed model document: {exc}") from exc
        _check_model(model)
        return model


def _check_model(model: MarketModel) -> None:
    d = model.num_assets
    sig = model.sigma_monthly
    if (model.mu_annual.shape != (d,) or model.mu_monthly.shape != (d,)
            or sig.shape != (d, d) or model.alloc.num_assets != d):
        raise DimensionMismatch(
            f"{d} assets, {model.mu_annual.size} expected returns, covariance "
            f"{sig.shape}, allocation {list(model.alloc.qubits_per_dim)}"
        )
    if np.max(np.abs(sig - sig.T)) > SYMMETRY_TOL or np.linalg.eigvalsh(sig).min() < -PSD_TOL:
        raise NotPSD("monthly covariance is not symmetric positive semidefinite")
    if np.max(np.abs(model.mu_monthly - annual_to_monthly_log(model.mu_annual)), initial=0) > 1e-15:
        raise QallocError("mu_monthly is inconsistent with log(1 + mu_annual) / 12")


def build_model(mu_annual, alloc: QubitAllocation, k: float = DEFAULT_BOUNDS_K, *,
                series: PriceSeries | None = None, sigma_monthly=None,
                names=None) -> MarketModel:
    """Assemble a :class:`MarketModel`.

    The covariance comes either from ``series`` (estimated on monthly log
    returns) or directly from ``sigma_monthly``. Annual expected returns are
    read as arithmetic and converted with ``log(1 + mu) / 12``.
    """
    if (series is None) == (sigma_monthly is None):
        raise ValueError("pass exactly one of series= or sigma_monthly=")
    mu_annual = np.atleast_1d(np.asarray(mu_annual, dtype=float))
    if series is not None:
        sigma = estimate_covariance(monthly_log_returns(series))
        names = series.names
    else:
        sigma = np.atleast_2d(np.asarray(sigma_monthly, dtype=float))
        if names is None:
            names = tuple(f"asset{i}" for i in range(sigma.shape[0]))
    model = MarketModel(tuple(names), mu_annual, annual_to_monthly_log(mu_annual),
                        sigma, alloc, float(k))
    _check_model(model)
    return model


def save_model(path, model: MarketModel, metadata: dict | None = None) -> None:
    doc = model.to_dict()
    if metadata:
        doc["metadata"] = metadata
    Path(path).write_text(json.dumps(doc, indent=2) + "\n")


def load_model(path) -> MarketModel:
    path = Path(path)
    try:
        doc = json.loads(path.read_text())
    except OSError as exc:
        raise ParseError(f"cannot read {path}: {exc.strerror}") from exc
    except json.JSONDecodeError as exc:
        raise ParseError(f"{path} is not valid JSON: {exc.msg}", row=exc.lineno) from exc
    return MarketModel.from_dict(doc)
