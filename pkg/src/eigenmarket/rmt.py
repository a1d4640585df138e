"""Marchenko-Pastur reference spectrum and deviating eigenvalues.

For T observations of N independent series the correlation spectrum
converges to a law supported on [lambda_minus, lambda_plus] with
q = T / N > 1.  Eigenvalues above lambda_plus carry structure that pure
noise cannot explain; those are the deviating set.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import DataValidationError
from .spectra import EigenSystem


@dataclass(frozen=True)
class MPBounds:
    """Support edges of the noise spectrum at aspect ratio q = n_obs / n_series."""

    q: float
    lambda_minus: float
    lambda_plus: float

    def __post_init__(self):
        if not self.q > 1.0:
            raise DataValidationError(f"q must exceed 1, got {self.q}")
        if not 0.0 <= self.lambda_minus < self.lambda_plus:
            raise DataValidationError("bounds out of order")


def mp_bounds(n_obs: int, n_series: int) -> MPBounds:
    """Noise-spectrum support for a panel of n_series over n_obs observations.

    Requires more observations than series (q > 1); otherwise the
    correlation matrix is singular and the band edges lose meaning.
    """
    if n_series < 1:
        raise DataValidationError(f"need at least one series, got {n_series}")
    if n_obs <= n_series:
        raise DataValidationError(
            f"noise bounds require more observations than series, "
            f"got {n_obs} observations for {n_series} series"
        )
    q = n_obs / n_series
    root = np.sqrt(1.0 / q)
    return MPBounds(
        q=q,
        lambda_minus=(1.0 - root) ** 2,
        lambda_plus=(1.0 + root) ** 2,
    )


def mp_density(lam, bounds: MPBounds):
    """Noise eigenvalue density q * sqrt((l+ - x)(x - l-)) / (2 pi x).

    Accepts a scalar or array; zero outside the open support interval,
    including exactly at the edges.
    """
    x = np.asarray(lam, dtype=float)
    inside = (x > bounds.lambda_minus) & (x < bounds.lambda_plus)
    out = np.zeros_like(x)
    xs = x[inside]
    out[inside] = (
        bounds.q
        / (2.0 * np.pi)
        * np.sqrt((bounds.lambda_plus - xs) * (xs - bounds.lambda_minus))
        / xs
    )
    if np.isscalar(lam) or np.ndim(lam) == 0:
        return float(out)
    return out


@dataclass(frozen=True)
class DeviatingSet:
    """Eigenvalues strictly above the noise band's upper edge.

    ranks are 1-based positions in the descending spectrum; values keep
    the same order.
    """

    ranks: tuple[int, ...]
    values: np.ndarray
    lambda_plus: float

    def __post_init__(self):
        vals = np.array(self.values, dtype=float)
        vals.setflags(write=False)
        object.__setattr__(self, "values", vals)
        object.__setattr__(self, "ranks", tuple(self.ranks))
        if vals.shape != (len(self.ranks),):
            raise DataValidationError("ranks and values disagree in length")
        if np.any(np.diff(vals) > 0.0):
            raise DataValidationError("deviating values must be descending")
        if np.any(vals <= self.lambda_plus):
            raise DataValidationError("deviating set contains a value inside the band")

    @property
    def count(self) -> int:
        return len(self.ranks)


def deviating(eig: EigenSystem, bounds: MPBounds) -> DeviatingSet:
    """Eigenvalues of ``eig`` strictly above bounds.lambda_plus.

    Since the spectrum is descending these are always the leading ranks
    1..K; K may be zero.
    """
    mask = eig.eigenvalues > bounds.lambda_plus
    ranks = tuple(int(i) + 1 for i in np.flatnonzero(mask))
    return DeviatingSet(
        ranks=ranks,
        values=eig.eigenvalues[mask],
        lambda_plus=bounds.lambda_plus,
    )
