"""Problem data model and feasibility machinery.

The problem is  min ||x||_0  s.t.  (x - c)ᵀ Q (x - c) <= gamma  with Q
positive definite. Everything downstream is built on three facts:

* a zero set Z is feasible iff c_Zᵀ (Q/Q_YY) c_Z <= gamma, where Q/Q_YY is
  the Schur complement onto Z (equivalently ((Q⁻¹)_ZZ)⁻¹);
* the single-index margins gamma - c_n²/(Q⁻¹)_nn decide which variables can
  ever be zero on their own; a strictly negative margin forces x_n != 0;
* fixing a zero set Z and a nonzero set U reduces the problem to a smaller
  instance over the free variables F with effective parameters.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from typing import Optional

import numpy as np

from . import _kernels as _k
from .linalg import SymMatrix, _as_index_array, inverse

__all__ = [
    "Infeasible",
    "Instance",
    "MarginReport",
    "Subproblem",
    "zero_set_feasible",
    "single_zero_margins",
    "preprocess",
    "reduce",
    "to_json",
    "from_json",
]


class Infeasible(Exception):
    """The requested restriction admits no feasible point (gamma_eff <= 0)."""


class Instance:
    """Immutable problem data (Q, c, gamma).

    Construction validates positive definiteness by factorizing Q, and
    caches Q⁻¹ since every feasibility question is asked through it.
    """

    __slots__ = ("q", "c", "gamma", "q_inv")

    def __init__(self, q, c, gamma) -> None:
        if not isinstance(q, SymMatrix):
            q = SymMatrix(q)
        carr = np.array(c, dtype=np.float64).ravel()
        if carr.size != q.n:
            raise ValueError("center length must match matrix order")
        if not np.isfinite(carr).all():
            raise ValueError("center must be finite")
        g = float(gamma)
        if not np.isfinite(g) or g <= 0.0:
            raise ValueError("gamma must be positive and finite")
        carr.flags.writeable = False
        self.q = q
        self.c = carr
        self.gamma = g
        self.q_inv = inverse(q)  # raises NotPD for bad Q

    @property
    def n(self) -> int:
        return self.q.n

    def __repr__(self) -> str:  # pragma: no cover - debugging aid
        return f"Instance(n={self.n}, gamma={self.gamma})"


@dataclass(frozen=True)
class MarginReport:
    """Per-index margins gamma - c_n²/(Q⁻¹)_nn; forced_nonzero collects the
    strictly negative ones (a weak inequality keeps margin 0 feasible)."""

    margins: np.ndarray
    forced_nonzero: np.ndarray


@dataclass(frozen=True)
class Subproblem:
    """A restriction of parent: x_z = 0, x_u != 0, free over f.

    reduced is the equivalent instance on f (None when f is empty);
    base_cost = |u| is the cardinality already committed.
    """

    parent: Instance
    z: np.ndarray
    u: np.ndarray
    f: np.ndarray
    reduced: Optional[Instance]
    base_cost: int


def zero_set_feasible(inst: Instance, z) -> tuple[bool, float]:
    """Whether the zero set z admits a feasible point, and the attained
    minimum c_Zᵀ (Q/Q_YY) c_Z of the constraint quadratic.

    z = all indices is allowed (the value is cᵀQc). Comparison against
    gamma is an exact weak inequality.
    """
    zarr = _as_index_array(z, inst.n)
    if zarr.size == 0:
        raise ValueError("zero set must be nonempty")
    value = float(_k.e0_subset(inst.q_inv.entries, inst.c, zarr))
    return value <= inst.gamma, value


def single_zero_margins(inst: Instance) -> MarginReport:
    """Margins of the single-index zero constraints."""
    diag = np.diag(inst.q_inv.entries).copy()
    margins = inst.gamma - inst.c**2 / diag
    margins.flags.writeable = False
    forced = np.flatnonzero(margins < 0.0).astype(np.int64)
    forced.flags.writeable = False
    return MarginReport(margins=margins, forced_nonzero=forced)


def reduce(inst: Instance, z, u) -> Subproblem:
    """Restrict inst to x_z = 0 (fixed zeros) and x_u != 0 (committed
    nonzeros, minimized out), producing the effective instance over the
    free set.

    Q_eff = Q_FF - Q_FU Q_UU⁻¹ Q_UF
    c_eff = c_F + Q_eff⁻¹ (Q_FZ - Q_FU Q_UU⁻¹ Q_UZ) c_Z
    gamma_eff = gamma - c_Zᵀ (Q/Q_YY) c_Z,  Y = F ∪ U

    Raises Infeasible when gamma_eff <= 0.
    """
    n = inst.n
    zarr = _as_index_array(z, n)
    uarr = _as_index_array(u, n)
    if np.intersect1d(zarr, uarr).size:
        raise ValueError("fixed-zero and fixed-nonzero sets must be disjoint")
    mask = np.ones(n, dtype=bool)
    mask[zarr] = False
    mask[uarr] = False
    farr = np.flatnonzero(mask).astype(np.int64)

    if zarr.size:
        e0 = float(_k.e0_subset(inst.q_inv.entries, inst.c, zarr))
        gamma_eff = inst.gamma - e0
    else:
        gamma_eff = inst.gamma
    if gamma_eff <= 0.0:
        raise Infeasible(f"gamma_eff = {gamma_eff} <= 0 for |z| = {zarr.size}")

    if zarr.size == 0 and uarr.size == 0:
        return Subproblem(parent=inst, z=zarr, u=uarr, f=farr, reduced=inst, base_cost=0)
    if farr.size == 0:
        return Subproblem(parent=inst, z=zarr, u=uarr, f=farr, reduced=None, base_cost=int(uarr.size))

    q = inst.q
    if uarr.size:
        quu = q.submatrix(uarr, uarr)
        L, ok = _k.chol_lower(quu)
        if not ok:  # pragma: no cover - impossible for PD parent
            raise ValueError("nonzero-set block is not positive definite")
        quu_inv = _k.inv_from_chol(L)
        qfu = q.submatrix(farr, uarr)
        q_eff = q.submatrix(farr, farr) - qfu @ (quu_inv @ qfu.T)
        cross = q.submatrix(farr, zarr) - qfu @ (quu_inv @ q.submatrix(uarr, zarr))
    else:
        q_eff = q.submatrix(farr, farr)
        cross = q.submatrix(farr, zarr)

    c_eff = inst.c[farr].copy()
    if zarr.size:
        Le, ok = _k.chol_lower(q_eff)
        if not ok:  # pragma: no cover - Schur complement of PD is PD
            raise ValueError("effective matrix is not positive definite")
        c_eff = c_eff + _k.solve_chol(Le, cross @ inst.c[zarr])

    reduced = Instance(SymMatrix(q_eff), c_eff, gamma_eff)
    return Subproblem(parent=inst, z=zarr, u=uarr, f=farr, reduced=reduced, base_cost=int(uarr.size))


def _reduce_two_step(inst: Instance, z, u) -> Optional[Instance]:
    """Same reduction done sequentially: first fix x_z = 0, then minimize
    out x_u. Retained as an independent path for cross-checking reduce."""
    n = inst.n
    zarr = _as_index_array(z, n)
    uarr = _as_index_array(u, n)
    mask = np.ones(n, dtype=bool)
    mask[zarr] = False
    mask[uarr] = False
    farr = np.flatnonzero(mask).astype(np.int64)

    # step 1: eliminate the fixed zeros
    if zarr.size:
        yarr = np.sort(np.concatenate([farr, uarr]))
        qyy = inst.q.submatrix(yarr, yarr)
        qyz = inst.q.submatrix(yarr, zarr)
        L, ok = _k.chol_lower(qyy)
        if not ok:
            raise ValueError("kept block is not positive definite")
        c1 = inst.c[yarr] + _k.solve_chol(L, qyz @ inst.c[zarr])
        e0 = float(_k.e0_subset(inst.q_inv.entries, inst.c, zarr))
        g1 = inst.gamma - e0
        if g1 <= 0.0:
            raise Infeasible("gamma_eff <= 0")
        step1 = Instance(SymMatrix(qyy), c1, g1)
        pos = {int(v): i for i, v in enumerate(yarr)}
    else:
        step1 = inst
        pos = {i: i for i in range(n)}

    if farr.size == 0:
        return None
    if uarr.size == 0:
        return step1

    # step 2: minimize out the committed nonzeros
    fpos = np.array([pos[int(i)] for i in farr], dtype=np.int64)
    upos = np.array([pos[int(i)] for i in uarr], dtype=np.int64)
    quu = step1.q.submatrix(upos, upos)
    qfu = step1.q.submatrix(fpos, upos)
    L, ok = _k.chol_lower(quu)
    if not ok:
        raise ValueError("nonzero-set block is not positive definite")
    q2 = step1.q.submatrix(fpos, fpos) - qfu @ (_k.inv_from_chol(L) @ qfu.T)
    return Instance(SymMatrix(q2), step1.c[fpos], step1.gamma)


def preprocess(inst: Instance) -> Subproblem:
    """Commit every variable whose single-zero margin is strictly negative.

    Elimination can expose new negative margins on the remaining instance,
    so the forced set is grown to a fixed point; the returned reduction has
    all margins >= 0 and preprocessing it again is the identity.
    """
    forced = single_zero_margins(inst).forced_nonzero
    if forced.size == 0:
        empty = np.zeros(0, dtype=np.int64)
        return Subproblem(
            parent=inst,
            z=empty,
            u=empty,
            f=np.arange(inst.n, dtype=np.int64),
            reduced=inst,
            base_cost=0,
        )
    while True:
        sub = reduce(inst, np.zeros(0, dtype=np.int64), forced)
        if sub.reduced is None:
            return sub
        more = single_zero_margins(sub.reduced).forced_nonzero
        if more.size == 0:
            return sub
        forced = np.sort(np.concatenate([forced, sub.f[more]]))


def to_json(inst: Instance) -> str:
    """Serialize to the interchange format."""
    return json.dumps(
        {
            "n": inst.n,
            "q": inst.q.entries.tolist(),
            "c": inst.c.tolist(),
            "gamma": inst.gamma,
        }
    )


def from_json(text: str) -> Instance:
    """Parse the interchange format; symmetrizes q and validates PD."""
    obj = json.loads(text)
    if not isinstance(obj, dict):
        raise ValueError("instance document must be a JSON object")
    for key in ("n", "q", "c", "gamma"):
        if key not in obj:
            raise ValueError(f"instance document missing key {key!r}")
    n = int(obj["n"])
    q = np.asarray(obj["q"], dtype=np.float64)
    c = np.asarray(obj["c"], dtype=np.float64)
    if q.shape != (n, n):
        raise ValueError("q must be an n-by-n matrix")
    if c.shape != (n,):
        raise ValueError("c must have length n")
    return Instance(SymMatrix(q), c, obj["gamma"])
