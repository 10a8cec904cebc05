"""Optimized diagonal relaxation.

For a diagonal D with 0 ⪯ D ⪯ Q, the relaxed problem is separable and its
K-zeros feasibility value is S_K({D_nn c_n²}); maximizing it over D gives
the strongest such relaxation,

    E_d(K) = max S_K({D_nn c_n²})  s.t.  0 ⪯ D ⪯ Q,  D diagonal.

E_d(K) > gamma proves no original solution has K or more zeros, so a
bisection over K turns the solver into an integer lower bound with a
transferable certificate: the maximizing D itself. Feasibility of D, not
optimality of the inner solve, is all that soundness needs.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import _kernels as _k
from .diagonal import sum_k_smallest
from .instance import Instance
from .linalg import SymMatrix, cholesky, eig_sym

__all__ = [
    "DiagonalCertificate",
    "DiagRelaxResult",
    "e_d_lower_start",
    "solve_e_d",
    "solve_relaxation",
]

# relative slack when comparing solved E_d(K) against gamma: the tight
# constructions sit exactly on the boundary and must classify as feasible
_FEAS_SLACK = 1e-9


@dataclass(frozen=True)
class DiagonalCertificate:
    """A strictly feasible diagonal D and the relaxation value it attains
    for its K; psd_margin is the smallest eigenvalue of Q - D."""

    d: np.ndarray
    k: int
    objective: float
    psd_margin: float


@dataclass(frozen=True)
class DiagRelaxResult:
    """Outcome of the bisection: lower_bound = N - k_d, where k_d is the
    largest zero count no optimized diagonal relaxation could exclude."""

    lower_bound: int
    k_d: int
    certificate: DiagonalCertificate
    e_d_trace: np.ndarray


def _certify(inst: Instance, d: np.ndarray, k: int) -> DiagonalCertificate:
    gap = SymMatrix(inst.q.entries - np.diag(d))
    cholesky(gap)  # raises NotPD if d is not strictly feasible
    margin = float(eig_sym(gap).eigenvalues[0])
    obj = sum_k_smallest(d * inst.c**2, k)
    dd = d.copy()
    dd.flags.writeable = False
    return DiagonalCertificate(d=dd, k=int(k), objective=obj, psd_margin=margin)


def _shrink_until_feasible(qe: np.ndarray, d: np.ndarray) -> np.ndarray:
    # float round-off can defeat the nominal (1 - 1e-9) margin; back off
    for factor in (1.0, 1.0 - 1e-7, 1.0 - 1e-4, 0.5):
        trial = factor * d
        _, ok = _k.chol_lower(qe - np.diag(trial))
        if ok and (trial > 0.0).all():
            return trial
    raise AssertionError("no feasible shrink of a nominal interior point")


def _structured_starts(inst: Instance) -> list[np.ndarray]:
    qe = inst.q.entries
    n = inst.n
    lam_min = float(eig_sym(inst.q).eigenvalues[0])
    d_iso = np.full(n, (1.0 - 1e-9) * lam_min)

    diag_q = np.diag(qe).copy()
    scaled = SymMatrix(qe / np.sqrt(np.outer(diag_q, diag_q)))
    alpha = float(eig_sym(scaled).eigenvalues[0])
    d_diag = (1.0 - 1e-9) * alpha * diag_q

    return [_shrink_until_feasible(qe, d_iso), _shrink_until_feasible(qe, d_diag)]


def e_d_lower_start(inst: Instance, k: int) -> DiagonalCertificate:
    """The better of the two closed-form feasible starts: the isotropic
    lambda_min(Q) I and the rescaled diagonal alpha Diag(Q), alpha =
    lambda_min(Diag(Q)^-1/2 Q Diag(Q)^-1/2); each shrunk to keep Q - D
    strictly positive definite."""
    if not 1 <= k <= inst.n:
        raise ValueError("k out of range")
    csq = inst.c**2
    best = None
    best_val = -np.inf
    for d in _structured_starts(inst):
        val = sum_k_smallest(d * csq, k)
        if val > best_val:
            best, best_val = d, val
    return _certify(inst, best, k)


def _solve_e_d(inst: Instance, k: int, tol: float, extra_starts) -> DiagonalCertificate:
    csq = inst.c**2
    candidates = _structured_starts(inst) + list(extra_starts)
    scores = [float(_k.sum_k_smallest_kernel(d * csq, k)) for d in candidates]
    d0 = candidates[int(np.argmax(scores))]
    d_best, _obj = _k.ed_ascent(inst.q.entries, csq, k, d0, inst.gamma, tol, 500)
    return _certify(inst, d_best, k)


def solve_e_d(inst: Instance, k: int, tol: float = 1e-6) -> DiagonalCertificate:
    """Approximately maximize S_K({D_nn c_n²}) over 0 ⪯ D ⪯ Q by log-barrier
    supergradient ascent.

    The barrier keeps every iterate strictly feasible, so the returned
    certificate is sound no matter where the ascent stopped; tol controls
    only how close to the supremum it lands.
    """
    if not 1 <= k <= inst.n:
        raise ValueError("k out of range")
    if tol <= 0.0:
        raise ValueError("tol must be positive")
    return _solve_e_d(inst, k, tol, [])


def solve_relaxation(inst: Instance, tol: float = 1e-6) -> DiagRelaxResult:
    """Bisection over K on the monotone predicate E_d(K) <= gamma.

    K = N is solved first (if feasible the bound is the trivial 0); each
    solve warm-starts from every certificate found so far. A final pass
    re-scores every solved K against all found D's, which makes the
    reported trace monotone in K and lets a later, better D tighten an
    earlier value; the bracket is then re-derived from the upgraded values
    so the stored certificate always proves the reported bound.
    """
    n = inst.n
    slack = inst.gamma * (1.0 + _FEAS_SLACK)
    solved: dict[int, DiagonalCertificate] = {}

    def solve_k(k: int) -> DiagonalCertificate:
        cert = _solve_e_d(inst, k, tol, [c.d for c in solved.values()])
        solved[k] = cert
        return cert

    top = solve_k(n)
    if top.objective > slack:
        lo, hi = 0, n
        while hi - lo > 1:
            mid = (lo + hi) // 2
            if solve_k(mid).objective <= slack:
                lo = mid
            else:
                hi = mid

    # upgrade pass: every solved K may score any found D
    csq = inst.c**2
    all_ds = [c.d for c in solved.values()]
    for k in sorted(solved):
        vals = [float(_k.sum_k_smallest_kernel(d * csq, k)) for d in all_ds]
        best = int(np.argmax(vals))
        if vals[best] > solved[k].objective:
            solved[k] = _certify(inst, all_ds[best], k)

    infeasible = [k for k in sorted(solved) if solved[k].objective > slack]
    if infeasible:
        k0 = infeasible[0]
        k_d = k0 - 1
        certificate = solved[k0]
    else:
        k_d = n
        certificate = solved[n]

    trace = np.array([[float(k), solved[k].objective] for k in sorted(solved)])
    return DiagRelaxResult(
        lower_bound=n - k_d, k_d=k_d, certificate=certificate, e_d_trace=trace
    )
