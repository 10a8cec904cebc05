"""Continuous relaxation: weighted l1-style surrogate over the ellipsoid.

The relaxation replaces the cardinality of x_n by x_n⁺/B_n⁺ + x_n⁻/B_n⁻,
where B_n^± = sqrt(gamma (Q⁻¹)_nn) ± c_n are the extreme attainable values
of ±x_n over the ellipsoid. Its optimum is bounded from below by the
concave dual

    max_mu  cᵀmu − sqrt(gamma muᵀ Q⁻¹ mu)   s.t.  −1/B_n⁻ ≤ mu_n ≤ 1/B_n⁺,

and any box-feasible mu certifies a lower bound (weak duality), so the
solver is sound even when stopped early. Rounding the bound up gives an
integer lower bound on the original cardinality problem.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from . import _kernels as _k
from .instance import Instance

__all__ = [
    "DegenerateBox",
    "InfeasiblePoint",
    "BoxConstants",
    "DualCertificate",
    "box_constants",
    "solve_dual",
    "dual_objective",
    "dual_gradient",
    "lower_bound",
    "prop1_upper_bound",
    "primal_value",
]

# |mu_n| cap substituting for an unbounded box side at a margin-zero index
_MU_CAP = 1e12


class DegenerateBox(Exception):
    """Some B_n^± is zero up to tolerance: index n sits exactly on its
    single-zero boundary and x_n is effectively sign-constrained."""


class InfeasiblePoint(Exception):
    """The point handed to primal_value violates the ellipsoid constraint."""


@dataclass(frozen=True)
class BoxConstants:
    b_plus: np.ndarray
    b_minus: np.ndarray


@dataclass(frozen=True)
class DualCertificate:
    """A box-feasible dual point and its objective value.

    box_feasible is False when a degenerate box side had to be capped at
    1e12; the objective is a valid lower bound either way.
    """

    mu: np.ndarray
    objective: float
    box_feasible: bool


def _raw_box(inst: Instance) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    root = np.sqrt(inst.gamma * np.diag(inst.q_inv.entries))
    b_plus = root + inst.c
    b_minus = root - inst.c
    degenerate = (b_plus <= 1e-12 * root) | (b_minus <= 1e-12 * root)
    return b_plus, b_minus, degenerate


def box_constants(inst: Instance) -> BoxConstants:
    """B_n^± = sqrt(gamma (Q⁻¹)_nn) ± c_n, both strictly positive.

    Raises DegenerateBox when an index has a vanishing side, which happens
    exactly when its single-zero margin is zero (or the instance was not
    preprocessed and the margin is negative).
    """
    b_plus, b_minus, degenerate = _raw_box(inst)
    if degenerate.any():
        raise DegenerateBox(f"vanishing box side at indices {np.flatnonzero(degenerate).tolist()}")
    return BoxConstants(b_plus=b_plus, b_minus=b_minus)


def solve_dual(inst: Instance, tol: float = 1e-7) -> DualCertificate:
    """Maximize the dual by projected gradient ascent with backtracking.

    Starts at mu0 = alpha Q c with alpha the largest scalar keeping mu0 in
    the box. When cᵀQc <= gamma the origin is primal-feasible and mu = 0 is
    optimal (Cauchy-Schwarz), returned directly; this also covers the
    nondifferentiable point. Stops after 5 consecutive accepted steps with
    relative improvement < tol, or 10000 iterations.
    """
    if tol <= 0.0:
        raise ValueError("tol must be positive")
    n = inst.n
    qc = inst.q.entries @ inst.c
    if float(inst.c @ qc) <= inst.gamma:
        return DualCertificate(mu=np.zeros(n), objective=0.0, box_feasible=True)

    b_plus, b_minus, degenerate = _raw_box(inst)
    hi = np.empty(n)
    lo = np.empty(n)
    for i in range(n):
        hi[i] = _MU_CAP if degenerate[i] and b_plus[i] <= 0 else min(_MU_CAP, 1.0 / b_plus[i])
        lo[i] = -_MU_CAP if degenerate[i] and b_minus[i] <= 0 else max(-_MU_CAP, -1.0 / b_minus[i])

    # largest alpha with lo <= alpha*qc <= hi (qc != 0 since cᵀQc > gamma > 0)
    alpha = np.inf
    for i in range(n):
        if qc[i] > 0.0:
            alpha = min(alpha, hi[i] / qc[i])
        elif qc[i] < 0.0:
            alpha = min(alpha, lo[i] / qc[i])
    mu0 = (alpha if np.isfinite(alpha) else 1.0) * qc

    mu, obj, _iters = _k.dual_ascent(
        inst.q_inv.entries, inst.c, inst.gamma, lo, hi, mu0, tol, 10000
    )
    return DualCertificate(mu=mu, objective=float(obj), box_feasible=not bool(degenerate.any()))


def dual_objective(inst: Instance, mu) -> float:
    """cᵀmu − sqrt(gamma muᵀQ⁻¹mu), the value the ascent maximizes."""
    mu = np.asarray(mu, dtype=np.float64).ravel()
    if mu.size != inst.n:
        raise ValueError("mu length must match instance")
    s = float(mu @ (inst.q_inv.entries @ mu))
    return float(inst.c @ mu) - math.sqrt(inst.gamma * s)


def dual_gradient(inst: Instance, mu) -> np.ndarray:
    """Gradient of dual_objective; undefined at mu = 0 (the square root's
    kink), where a ValueError is raised."""
    mu = np.asarray(mu, dtype=np.float64).ravel()
    if mu.size != inst.n:
        raise ValueError("mu length must match instance")
    qm = inst.q_inv.entries @ mu
    s = float(mu @ qm)
    if s <= 0.0:
        raise ValueError("gradient undefined at mu = 0")
    return inst.c - math.sqrt(inst.gamma / s) * qm


def lower_bound(inst: Instance) -> int:
    """Integer lower bound on the optimal cardinality: the dual objective
    rounded up, with 1e-7 absorbed for solver noise."""
    cert = solve_dual(inst)
    return int(math.ceil(cert.objective - 1e-7))


def prop1_upper_bound(inst: Instance) -> float:
    """Absolute cap theta*N/2 on the relaxation optimum, theta = 1 −
    sqrt(gamma/cᵀQc); 0 when cᵀQc <= gamma (the relaxation optimum is 0)."""
    v = float(inst.c @ (inst.q.entries @ inst.c))
    if v <= inst.gamma:
        return 0.0
    theta = 1.0 - np.sqrt(inst.gamma / v)
    return theta * inst.n / 2.0


def primal_value(inst: Instance, x) -> float:
    """Relaxation objective at a feasible point x."""
    xarr = np.asarray(x, dtype=np.float64).ravel()
    if xarr.size != inst.n:
        raise ValueError("point length must match instance")
    r = xarr - inst.c
    quad = float(r @ (inst.q.entries @ r))
    if quad > inst.gamma * (1.0 + 1e-9):
        raise InfeasiblePoint(f"constraint value {quad} exceeds gamma = {inst.gamma}")
    box = box_constants(inst)
    pos = np.maximum(xarr, 0.0)
    neg = np.maximum(-xarr, 0.0)
    return float(np.sum(pos / box.b_plus) + np.sum(neg / box.b_minus))
