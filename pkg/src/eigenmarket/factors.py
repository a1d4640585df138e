"""Reference series for interpreting eigenmodes economically.

Two flavors: equal-weighted average returns (whole market plus one per
sector) and standardized principal-component factor scores.  Both are
plain time series a mode can be correlated against.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import ConfigError, DataValidationError
from .ingest import ReturnPanel
from .rmt import deviating, mp_bounds
from .spectra import EigenSystem, correlation_matrix, eigh, standardize_returns

MARKET_LABEL = "EW:market"

_DEGENERATE_EIGENVALUE = 1e-12


@dataclass(frozen=True)
class ReferenceSeries:
    """A labelled time series used as a correlation target."""

    label: str
    values: np.ndarray

    def __post_init__(self):
        vals = np.array(self.values, dtype=float)
        vals.setflags(write=False)
        object.__setattr__(self, "values", vals)
        if not self.label:
            raise ConfigError("reference label must be non-empty")
        if vals.ndim != 1 or vals.shape[0] < 2:
            raise DataValidationError("reference series must be 1-d with length >= 2")
        if not np.all(np.isfinite(vals)):
            raise DataValidationError("non-finite reference value")

    @property
    def n_days(self) -> int:
        return self.values.shape[0]


def equal_weighted(panel: ReturnPanel) -> list[ReferenceSeries]:
    """Equal-weighted average raw returns: market first, then each sector.

    Sector series appear in first-appearance order of the panel's tickers,
    labelled ``EW:<sector>``.  With S sectors the list has S + 1 entries.
    """
    market = ReferenceSeries(MARKET_LABEL, panel.returns.mean(axis=0))
    out = [market]
    for label in panel.sectors():
        members = [i for i, t in enumerate(panel.tickers) if panel.sector[t] == label]
        out.append(ReferenceSeries(f"EW:{label}", panel.returns[members].mean(axis=0)))
    return out


def factor_scores(
    panel: ReturnPanel,
    n_factors: int | None = None,
    eig: EigenSystem | None = None,
) -> list[ReferenceSeries]:
    """Standardized principal-component scores of the return panel.

    Score p is the standardized panel projected on eigenvector p and
    rescaled by 1/sqrt(eigenvalue p), so every score has unit sample
    variance and the scores are mutually uncorrelated.

    Args:
        panel: return panel to factor.
        n_factors: how many leading scores to build.  Defaults to the
            deviating-eigenvalue count of this panel, which needs more
            observations than stocks.
        eig: optional precomputed spectrum of the panel's correlation
            matrix, to skip the decomposition.

    Raises:
        ConfigError: n_factors out of 1..n_stocks, or defaulted to zero
            because nothing deviates.
        DataValidationError: a requested factor has a near-zero eigenvalue.
    """
    if eig is None:
        eig = eigh(correlation_matrix(panel))
    elif eig.size != panel.n_stocks:
        raise ConfigError(
            f"eigensystem of size {eig.size} does not match panel of "
            f"{panel.n_stocks} stocks"
        )
    if n_factors is None:
        bounds = mp_bounds(panel.n_days, panel.n_stocks)
        n_factors = deviating(eig, bounds).count
        if n_factors == 0:
            raise ConfigError(
                "no deviating eigenvalues; pass n_factors explicitly"
            )
    if not 1 <= n_factors <= panel.n_stocks:
        raise ConfigError(
            f"n_factors must be in 1..{panel.n_stocks}, got {n_factors}"
        )
    z = standardize_returns(panel)
    out = []
    for p in range(1, n_factors + 1):
        lam = eig.eigenvalue(p)
        if lam <= _DEGENERATE_EIGENVALUE:
            raise DataValidationError(
                f"degenerate factor {p}: eigenvalue {lam:.3e} is numerically zero"
            )
        scores = (z.T @ eig.eigenvector(p)) / np.sqrt(lam)
        out.append(ReferenceSeries(f"F:{p}", scores))
    return out
