"""Symmetric-matrix primitives: Cholesky, Jacobi eigendecomposition,
positive-definite inverse, and Schur complements on index sets.

All higher modules funnel their matrix work through these four operations so
that positive definiteness is always certified by an actual factorization
rather than assumed.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import _kernels as _k

__all__ = [
    "NotPD",
    "NoConvergence",
    "SymMatrix",
    "EigenDecomp",
    "cholesky",
    "eig_sym",
    "inverse",
    "schur_complement",
]


class NotPD(Exception):
    """A Cholesky pivot was non-positive: the matrix is not positive
    definite (or numerically indistinguishable from such)."""


class NoConvergence(Exception):
    """The Jacobi sweep cap was hit before the off-diagonal norm target."""


class SymMatrix:
    """Immutable symmetric matrix of order n >= 1.

    Construction symmetrizes the input as (A + Aᵀ)/2 so that downstream
    code never sees asymmetric round-off.
    """

    __slots__ = ("n", "entries")

    def __init__(self, entries) -> None:
        a = np.array(entries, dtype=np.float64)
        if a.ndim != 2 or a.shape[0] != a.shape[1]:
            raise ValueError("entries must form a square matrix")
        if a.shape[0] < 1:
            raise ValueError("order must be at least 1")
        if not np.isfinite(a).all():
            raise ValueError("entries must be finite")
        sym = (a + a.T) / 2.0
        sym.flags.writeable = False
        self.n = int(a.shape[0])
        self.entries = sym

    def submatrix(self, rows, cols) -> np.ndarray:
        """Dense copy of the (rows x cols) block."""
        r = np.asarray(rows, dtype=np.int64)
        c = np.asarray(cols, dtype=np.int64)
        return self.entries[np.ix_(r, c)].copy()

    def __repr__(self) -> str:  # pragma: no cover - debugging aid
        return f"SymMatrix(n={self.n})"


@dataclass(frozen=True)
class EigenDecomp:
    """Eigenvalues ascending; eigenvectors[:, i] pairs with eigenvalues[i]."""

    eigenvalues: np.ndarray
    eigenvectors: np.ndarray


def _as_index_array(idx, n: int) -> np.ndarray:
    """Validate and normalize an index set to a sorted ascending array."""
    a = np.asarray(idx, dtype=np.int64).ravel()
    if a.size != np.unique(a).size:
        raise ValueError("index set has duplicates")
    if a.size and (a.min() < 0 or a.max() >= n):
        raise ValueError("index out of range")
    return np.sort(a)


def cholesky(a: SymMatrix) -> np.ndarray:
    """Lower-triangular L with L Lᵀ = A. Raises NotPD when any pivot
    fails to be strictly positive."""
    L, ok = _k.chol_lower(a.entries)
    if not ok:
        raise NotPD("matrix is not positive definite")
    return L


def eig_sym(a: SymMatrix, *, max_sweeps: int = 100) -> EigenDecomp:
    """Full eigendecomposition by cyclic Jacobi rotations.

    Sweeps stop once the off-diagonal Frobenius norm falls below
    1e-12 * ||A||_F; exceeding max_sweeps raises NoConvergence.
    """
    w, v, converged = _k.jacobi_eig(a.entries, 1e-12, max_sweeps)
    if not converged:
        raise NoConvergence(f"no convergence within {max_sweeps} sweeps")
    w = w.copy()
    v = v.copy()
    w.flags.writeable = False
    v.flags.writeable = False
    return EigenDecomp(eigenvalues=w, eigenvectors=v)


def inverse(a: SymMatrix) -> SymMatrix:
    """Inverse of a positive-definite matrix via its Cholesky factor."""
    L, ok = _k.chol_lower(a.entries)
    if not ok:
        raise NotPD("matrix is not positive definite")
    return SymMatrix(_k.inv_from_chol(L))


def schur_complement(q: SymMatrix, y) -> SymMatrix:
    """Schur complement Q/Q_YY on the complement Z of the kept set y.

    y must be a nonempty proper subset of {0..n-1}; the result is indexed
    by Z in ascending order. Raises NotPD when Q_YY is not positive
    definite.
    """
    yarr = _as_index_array(y, q.n)
    if yarr.size == 0:
        raise ValueError("kept set must be nonempty")
    if yarr.size == q.n:
        raise ValueError("kept set must be a proper subset")
    mask = np.ones(q.n, dtype=bool)
    mask[yarr] = False
    zarr = np.flatnonzero(mask).astype(np.int64)

    qyy = q.submatrix(yarr, yarr)
    qyz = q.submatrix(yarr, zarr)
    qzz = q.submatrix(zarr, zarr)
    L, ok = _k.chol_lower(qyy)
    if not ok:
        raise NotPD("kept-set block is not positive definite")
    minv = _k.inv_from_chol(L)
    s = qzz - qyz.T @ (minv @ qyz)
    return SymMatrix(s)
