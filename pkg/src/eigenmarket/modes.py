"""Eigenmode time series and correlation profiling.

An eigenmode is the eigenvector-weighted sum of standardized returns,
one synthetic series per eigenvalue rank.  Projecting standardized (not
raw) returns makes the sample variance of mode i equal eigenvalue i
exactly, which is the identity the stability experiments rest on.
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import TYPE_CHECKING, Sequence

import numpy as np

from .errors import ConfigError, DataValidationError
from .ingest import ReturnPanel
from .spectra import EigenSystem, standardize_returns

if TYPE_CHECKING:  # pragma: no cover
    from .factors import ReferenceSeries


@dataclass(frozen=True)
class EigenmodeSeries:
    """One eigenmode: 1-based rank, its time series, and an origin tag."""

    rank: int
    values: np.ndarray
    source: str = ""

    def __post_init__(self):
        vals = np.array(self.values, dtype=float)
        vals.setflags(write=False)
        object.__setattr__(self, "values", vals)
        if self.rank < 1:
            raise ConfigError(f"rank must be >= 1, got {self.rank}")
        if vals.ndim != 1 or vals.shape[0] < 2:
            raise DataValidationError("mode series must be 1-d with length >= 2")
        if not np.all(np.isfinite(vals)):
            raise DataValidationError("non-finite mode value")

    @property
    def n_days(self) -> int:
        return self.values.shape[0]


def eigenmode_matrix(panel: ReturnPanel, eig: EigenSystem) -> np.ndarray:
    """All eigenmode series at once, shape (n_stocks, n_days); row i-1 is rank i."""
    if eig.size != panel.n_stocks:
        raise ConfigError(
            f"eigensystem of size {eig.size} does not match panel of "
            f"{panel.n_stocks} stocks"
        )
    z = standardize_returns(panel)
    return eig.eigenvectors.T @ z


def eigenmode(
    panel: ReturnPanel, eig: EigenSystem, rank: int, source: str = ""
) -> EigenmodeSeries:
    """Eigenmode series for one rank.

    Args:
        panel: return panel whose correlation matrix produced ``eig``.
        eig: spectrum of that correlation matrix.
        rank: 1-based eigenvalue rank, 1 = largest.
        source: free-form origin tag carried along for bookkeeping.

    The sample variance (n-1 divisor) of the result equals the rank's
    eigenvalue up to round-off.
    """
    if eig.size != panel.n_stocks:
        raise ConfigError(
            f"eigensystem of size {eig.size} does not match panel of "
            f"{panel.n_stocks} stocks"
        )
    if not 1 <= rank <= eig.size:
        raise ConfigError(f"rank {rank} out of range 1..{eig.size}")
    z = standardize_returns(panel)
    return EigenmodeSeries(rank=rank, values=z.T @ eig.eigenvector(rank), source=source)


def _zscore_rows(rows: np.ndarray, what: str) -> np.ndarray:
    rows = np.asarray(rows, dtype=float)
    if rows.ndim != 2 or rows.shape[1] < 2:
        raise DataValidationError(f"{what}: need 2-d rows with length >= 2")
    if not np.all(np.isfinite(rows)):
        raise DataValidationError(f"{what}: non-finite value")
    for i, row in enumerate(rows):
        if np.ptp(row) == 0.0:
            raise DataValidationError(f"{what}: zero variance in row {i}")
    centered = rows - rows.mean(axis=1, keepdims=True)
    return centered / centered.std(axis=1, ddof=1, keepdims=True)


def pearson_matrix(rows_a: np.ndarray, rows_b: np.ndarray) -> np.ndarray:
    """Pearson correlations between every row of a and every row of b.

    Both arguments are (n_series, n_days) stacks over a common day count.
    Entries are clipped to [-1, 1] against round-off.
    """
    za = _zscore_rows(rows_a, "first argument")
    zb = _zscore_rows(rows_b, "second argument")
    if za.shape[1] != zb.shape[1]:
        raise DataValidationError(
            f"length mismatch: {za.shape[1]} vs {zb.shape[1]} observations"
        )
    corr = za @ zb.T / (za.shape[1] - 1)
    return np.clip(corr, -1.0, 1.0)


def pearson(a, b) -> float:
    """Pearson correlation of two series of equal length >= 2.

    Raises DataValidationError when either series has zero variance.
    """
    a = np.asarray(a, dtype=float)
    b = np.asarray(b, dtype=float)
    if a.ndim != 1 or b.ndim != 1:
        raise DataValidationError("pearson expects 1-d series")
    if a.shape != b.shape:
        raise DataValidationError(f"length mismatch: {a.shape[0]} vs {b.shape[0]}")
    if a.shape[0] < 2:
        raise DataValidationError("need at least 2 observations")
    if np.ptp(a) == 0.0 or np.ptp(b) == 0.0:
        raise DataValidationError("zero variance series")
    return float(pearson_matrix(a[None, :], b[None, :])[0, 0])


@dataclass(frozen=True)
class ProfilePoint:
    """Best reference match for one mode: the largest |correlation| wins."""

    rank: int
    reference: str
    corr: float
    abs_corr: float


def max_corr_profile(
    modes: Sequence[EigenmodeSeries],
    references: Sequence["ReferenceSeries"],
) -> list[ProfilePoint]:
    """For each mode, the reference with the largest absolute correlation.

    Returns one ProfilePoint per mode in input order, carrying both the
    signed correlation at the winning reference and its absolute value.

    Raises:
        ConfigError: the reference set is empty.
        DataValidationError: length mismatches or degenerate series.
    """
    if not references:
        raise ConfigError("empty reference set")
    if not modes:
        return []
    mode_rows = np.stack([m.values for m in modes])
    ref_rows = np.stack([r.values for r in references])
    corr = pearson_matrix(mode_rows, ref_rows)
    best = np.argmax(np.abs(corr), axis=1)
    return [
        ProfilePoint(
            rank=mode.rank,
            reference=references[j].label,
            corr=float(corr[i, j]),
            abs_corr=float(abs(corr[i, j])),
        )
        for i, (mode, j) in enumerate(zip(modes, best))
    ]
