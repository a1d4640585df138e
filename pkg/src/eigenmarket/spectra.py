"""Equal-time correlation matrices and their eigendecomposition.

The eigensolver is a cyclic Jacobi iteration with threshold sweeps,
compiled with numba.  Jacobi is unconditionally stable on symmetric
matrices and its rotations keep the accumulated eigenvector basis
orthonormal to machine precision, which the rest of the package leans on.
"""
from __future__ import annotations

import csv
import json
from dataclasses import dataclass
from pathlib import Path

import numpy as np
from numba import njit

from .errors import DataValidationError, NumericalError
from .ingest import ReturnPanel

# Convergence: off-diagonal Frobenius norm below this fraction of the
# input's Frobenius norm.
JACOBI_REL_TOL = 1e-12
JACOBI_MAX_SWEEPS = 50

_SYMMETRY_TOL = 1e-14
_ORTHONORMAL_TOL = 1e-10
_SIGN_TIE_TOL = 1e-12


def standardize_returns(panel: ReturnPanel) -> np.ndarray:
    """Per-stock z-scores: zero mean, unit sample variance (n-1 divisor).

    Raises DataValidationError naming the first constant-series ticker,
    since such a row has no well-defined correlation.
    """
    r = panel.returns
    for ticker, row in zip(panel.tickers, r):
        if np.ptp(row) == 0.0:
            raise DataValidationError(f"zero-variance return series for ticker '{ticker}'")
    centered = r - r.mean(axis=1, keepdims=True)
    return centered / centered.std(axis=1, ddof=1, keepdims=True)


def _correlation_from_standardized(z: np.ndarray) -> np.ndarray:
    length = z.shape[1]
    c = z @ z.T / (length - 1)
    c = (c + c.T) / 2.0
    np.clip(c, -1.0, 1.0, out=c)
    np.fill_diagonal(c, 1.0)
    return c


@dataclass(frozen=True)
class CorrelationMatrix:
    """Validated Pearson correlation matrix.

    Symmetric within 1e-14, entries in [-1, 1], diagonal exactly 1.
    """

    values: np.ndarray

    def __post_init__(self):
        v = np.array(self.values, dtype=float)
        v.setflags(write=False)
        object.__setattr__(self, "values", v)
        if v.ndim != 2 or v.shape[0] != v.shape[1]:
            raise DataValidationError(f"correlation matrix must be square, got {v.shape}")
        if v.shape[0] < 1:
            raise DataValidationError("empty correlation matrix")
        if not np.all(np.isfinite(v)):
            raise DataValidationError("non-finite correlation entry")
        if np.max(np.abs(v - v.T)) > _SYMMETRY_TOL:
            raise DataValidationError("correlation matrix is not symmetric")
        if np.any(np.diag(v) != 1.0):
            raise DataValidationError("correlation diagonal must be exactly 1")
        if np.max(np.abs(v)) > 1.0:
            raise DataValidationError("correlation entries must lie in [-1, 1]")

    @property
    def size(self) -> int:
        return self.values.shape[0]

    def to_csv(self, path: str | Path) -> None:
        # debugging aid, row-major, no header
        with Path(path).open("w", newline="", encoding="utf-8") as fh:
            writer = csv.writer(fh, lineterminator="\n")
            for row in self.values:
                writer.writerow([repr(float(x)) for x in row])

    def to_json(self) -> str:
        return json.dumps({"size": self.size, "values": self.values.tolist()})


def correlation_matrix(panel: ReturnPanel) -> CorrelationMatrix:
    """Pearson correlation of the panel's return rows.

    The matrix is symmetrized, clipped to [-1, 1] against round-off, and
    its diagonal forced to exactly 1.
    """
    z = standardize_returns(panel)
    return CorrelationMatrix(_correlation_from_standardized(z))


@njit(cache=True)
def _jacobi_kernel(a, rel_tol, max_sweeps):  # pragma: no cover - compiled
    n = a.shape[0]
    v = np.eye(n)
    fro = 0.0
    for i in range(n):
        for j in range(n):
            fro += a[i, j] * a[i, j]
    target = rel_tol * np.sqrt(fro)
    sweeps = 0
    for sweep in range(max_sweeps):
        sweeps = sweep
        off = 0.0
        abs_sum = 0.0
        for i in range(n - 1):
            for j in range(i + 1, n):
                off += 2.0 * a[i, j] * a[i, j]
                abs_sum += abs(a[i, j])
        if np.sqrt(off) <= target:
            return np.diag(a).copy(), v, True, np.sqrt(off), sweeps
        # early sweeps skip rotations on entries too small to matter yet
        thresh = 0.2 * abs_sum / (n * n) if sweep < 3 else 0.0
        for p in range(n - 1):
            for q in range(p + 1, n):
                apq = a[p, q]
                if apq == 0.0 or abs(apq) <= thresh:
                    continue
                theta = (a[q, q] - a[p, p]) / (2.0 * apq)
                if theta >= 0.0:
                    t = 1.0 / (theta + np.sqrt(theta * theta + 1.0))
                else:
                    t = -1.0 / (-theta + np.sqrt(theta * theta + 1.0))
                c = 1.0 / np.sqrt(t * t + 1.0)
                s = t * c
                tau = s / (1.0 + c)
                app = a[p, p]
                aqq = a[q, q]
                a[p, p] = app - t * apq
                a[q, q] = aqq + t * apq
                a[p, q] = 0.0
                a[q, p] = 0.0
                for i in range(n):
                    if i == p or i == q:
                        continue
                    aip = a[i, p]
                    aiq = a[i, q]
                    a[i, p] = aip - s * (aiq + tau * aip)
                    a[p, i] = a[i, p]
                    a[i, q] = aiq + s * (aip - tau * aiq)
                    a[q, i] = a[i, q]
                for i in range(n):
                    vip = v[i, p]
                    viq = v[i, q]
                    v[i, p] = vip - s * (viq + tau * vip)
                    v[i, q] = viq + s * (vip - tau * viq)
    off = 0.0
    for i in range(n - 1):
        for j in range(i + 1, n):
            off += 2.0 * a[i, j] * a[i, j]
    off = np.sqrt(off)
    return np.diag(a).copy(), v, off <= target, off, max_sweeps


def fix_signs(vectors: np.ndarray, tie_tol: float = _SIGN_TIE_TOL) -> np.ndarray:
    """Resolve the per-column sign ambiguity of an eigenvector basis.

    Each column is flipped so its component sum is non-negative.  When the
    sum is zero within ``tie_tol``, the first nonzero component is made
    positive instead.  Idempotent, and exact: columns are only multiplied
    by +1 or -1.
    """
    out = np.array(vectors, dtype=float)
    for j in range(out.shape[1]):
        col = out[:, j]
        total = col.sum()
        if abs(total) <= tie_tol:
            for x in col:
                if x != 0.0:
                    if x < 0.0:
                        out[:, j] = -col
                    break
        elif total < 0.0:
            out[:, j] = -col
    return out


@dataclass(frozen=True)
class EigenSystem:
    """Spectrum of a correlation matrix.

    eigenvalues are sorted descending; eigenvectors[:, i] is the unit
    eigenvector for eigenvalues[i], signed so each column sums >= 0
    (first nonzero component positive on a zero-sum tie).
    """

    eigenvalues: np.ndarray
    eigenvectors: np.ndarray

    def __post_init__(self):
        vals = np.array(self.eigenvalues, dtype=float)
        vecs = np.array(self.eigenvectors, dtype=float)
        vals.setflags(write=False)
        vecs.setflags(write=False)
        object.__setattr__(self, "eigenvalues", vals)
        object.__setattr__(self, "eigenvectors", vecs)
        m = vals.shape[0]
        if vals.ndim != 1 or vecs.shape != (m, m):
            raise DataValidationError(
                f"inconsistent eigensystem shapes {vals.shape} / {vecs.shape}"
            )
        if not (np.all(np.isfinite(vals)) and np.all(np.isfinite(vecs))):
            raise DataValidationError("non-finite eigensystem entry")
        if np.any(np.diff(vals) > 0.0):
            raise DataValidationError("eigenvalues must be sorted descending")
        gram = vecs.T @ vecs
        err = np.max(np.abs(gram - np.eye(m)))
        if err > _ORTHONORMAL_TOL:
            raise DataValidationError(f"eigenvector basis not orthonormal (err {err:.2e})")
        sums = vecs.sum(axis=0)
        if np.any(sums < -_SIGN_TIE_TOL):
            raise DataValidationError("eigenvector sign convention violated")

    @property
    def size(self) -> int:
        return self.eigenvalues.shape[0]

    def eigenvalue(self, rank: int) -> float:
        """Eigenvalue at 1-based rank (1 = largest)."""
        if not 1 <= rank <= self.size:
            raise DataValidationError(f"rank {rank} out of range 1..{self.size}")
        return float(self.eigenvalues[rank - 1])

    def eigenvector(self, rank: int) -> np.ndarray:
        if not 1 <= rank <= self.size:
            raise DataValidationError(f"rank {rank} out of range 1..{self.size}")
        return self.eigenvectors[:, rank - 1]


def eigh(corr: CorrelationMatrix, max_sweeps: int = JACOBI_MAX_SWEEPS) -> EigenSystem:
    """Full eigendecomposition of a correlation matrix.

    Cyclic Jacobi with threshold sweeps; converged when the off-diagonal
    Frobenius norm drops below 1e-12 times the input's Frobenius norm.
    Eigenvalues come back sorted descending with ties kept in original
    column order, eigenvectors sign-fixed per fix_signs().

    Raises:
        NumericalError: the sweep cap was hit; the message reports the
            residual so the caller can judge how far off it stopped.
    """
    work = np.array(corr.values, dtype=float)
    vals, vecs, converged, residual, sweeps = _jacobi_kernel(
        work, JACOBI_REL_TOL, max_sweeps
    )
    if not converged:
        raise NumericalError(
            f"Jacobi did not converge in {max_sweeps} sweeps: off-diagonal "
            f"residual {residual:.3e} (target {JACOBI_REL_TOL:.0e} * ||C||_F)"
        )
    order = np.argsort(-vals, kind="stable")
    return EigenSystem(eigenvalues=vals[order], eigenvectors=fix_signs(vecs[:, order]))
