"""Certified sandwich bounds on the maximum zero count.

Each calculator returns a pair (k_under, k_over) that brackets both the
maximum number of zeros achievable in the exact problem and the maximum
certified by the diagonal relaxation, together with an upper bound on
the ratio k_over/k_under.  Four routes are provided:

* eig_bounds          extreme eigenvalues and Schur complements, with an
                      optional diagonal rescaling of the coordinates
* prob_bound          randomized-eigenvector refinement that swaps the
                      Schur eigenvalue for the mean eigenvalue, valid
                      with a quantified probability
* diag_dom_bounds     normalized off-diagonal row sums, for matrices
                      close to diagonal
* near_aligned_bounds eigenbasis close to the coordinate basis, driven
                      by the misalignment norm and the condition number

All scans over the zero count K share the tie rule used elsewhere in
the package: when products are equal, the lower index enters the
candidate zero set first.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable, Optional, Sequence, Tuple

import numpy as np

from .diagonal import sum_k_smallest
from .instance import Instance
from .linalg import SymMatrix, eig_sym, schur_complement


class DegenerateRatio(Exception):
    """k_under = 0, so no ratio can be formed; carries the k values."""

    def __init__(self, k_under: int, k_over: int, variant: str) -> None:
        super().__init__(f"{variant}: k_under = 0 leaves the ratio bound undefined")
        self.k_under = int(k_under)
        self.k_over = int(k_over)
        self.variant = variant


class NotDiagonallyDominant(Exception):
    """Normalized off-diagonal row sums reach 1, so the dominance route
    does not apply."""


class AlignmentTooWeak(Exception):
    """kappa * rho >= 1, so the alignment route certifies nothing."""


@dataclass(frozen=True)
class OrderingBounds:
    """k_under <= max zeros (exact) <= max zeros (diagonal relaxation)
    <= k_over, and k_over/k_under <= ratio_bound whenever k_under >= 1."""

    k_under: int
    k_over: int
    ratio_bound: float
    variant: str


@dataclass(frozen=True)
class ProbBoundReport:
    """Probabilistic ratio bound built from the eigenvalue distribution.

    The stated ratio_bound holds with at least `probability`; the regime
    names which branch of the tail estimate produced that probability.
    interval_i is the (open) slack range where the linear branch is the
    binding one, or None when that range is empty.
    """

    epsilon: float
    ratio_bound: float
    probability: float
    regime: str
    interval_i: Optional[Tuple[float, float]]
    eig_mean: float
    eig_var: float
    eps_max: float


@dataclass(frozen=True)
class AlignmentCertificate:
    """Misalignment summary for an eigenbasis matched to the coordinates.

    eig_lower and eig_upper bracket every eigenvalue of the eigenvalue-
    normalized matrix L^{-1/2} Q L^{-1/2}: lower bound 1 - kappa*rho,
    upper bound 1 + kappa*(rho + rho^2).
    """

    kappa: float
    rho: float
    eig_lower: float
    eig_upper: float
    cols: np.ndarray
    signs: np.ndarray
    matched_eigenvalues: np.ndarray


def _fixed_factor_max_k(factor: float, products: np.ndarray, gamma: float) -> int:
    # factor is constant and S_K nondecreasing, so the first failure is final
    best = 0
    for k in range(1, products.size + 1):
        if factor * sum_k_smallest(products, k) <= gamma:
            best = k
        else:
            break
    return best


def _scan_max_k(
    products: np.ndarray,
    gamma: float,
    factor_at: Callable[[int], float],
) -> tuple[int, list]:
    """Largest K with factor_at(K) * S_K(products) <= gamma.

    Scans upward and stops at the first failure.  The factors grow with
    K for every route in this module, so the early exit is exact; if a
    decrease is nevertheless observed (round-off), the whole range is
    evaluated and the max taken per the definition.
    """
    n = products.size
    factors: list = []
    best = 0
    saw_decrease = False
    for k in range(1, n + 1):
        f = factor_at(k)
        if factors and f < factors[-1]:
            saw_decrease = True
        factors.append(f)
        if f * sum_k_smallest(products, k) <= gamma:
            best = k
        else:
            break
    if saw_decrease:
        for k in range(len(factors) + 1, n + 1):
            factors.append(factor_at(k))
        best = 0
        for k in range(1, n + 1):
            if factors[k - 1] * sum_k_smallest(products, k) <= gamma:
                best = k
    return best, factors


def _complement_lambda_max(qmat: SymMatrix, z: np.ndarray) -> float:
    # largest eigenvalue of the block certifying the zero set z
    if z.size == qmat.n:
        return float(eig_sym(qmat).eigenvalues[-1])
    y = np.setdiff1d(np.arange(qmat.n, dtype=np.int64), z)
    return float(eig_sym(schur_complement(qmat, y)).eigenvalues[-1])


def _k_under_eig(qmat: SymMatrix, products: np.ndarray, gamma: float) -> tuple[int, list]:
    order = np.argsort(products, kind="stable")

    def factor_at(k: int) -> float:
        return _complement_lambda_max(qmat, order[:k])

    return _scan_max_k(products, gamma, factor_at)


def eig_bounds(inst: Instance, scale=None) -> OrderingBounds:
    """Sandwich from the extreme eigenvalues of Q and its complements.

    With a scale vector s, the same bounds are computed for the
    rescaled coordinates: Q becomes S^-1 Q S^-1 and the center becomes
    S c, leaving the zero structure untouched.  Meant for instances
    whose forced coordinates have already been cleared.
    """
    n = inst.n
    if scale is None:
        qmat = inst.q
        products = inst.c**2
        variant = "eig"
    else:
        s = np.asarray(scale, dtype=np.float64).ravel()
        if s.size != n:
            raise ValueError("scale length must match the instance dimension")
        if not np.isfinite(s).all() or np.any(s == 0.0):
            raise ValueError("scale entries must be finite and nonzero")
        qmat = SymMatrix(inst.q.entries / np.outer(s, s))
        products = (s * inst.c) ** 2
        variant = "eig_scaled"
    gamma = inst.gamma
    lam_min = float(eig_sym(qmat).eigenvalues[0])
    k_over = _fixed_factor_max_k(lam_min, products, gamma)
    k_under, factors = _k_under_eig(qmat, products, gamma)
    if k_under == 0:
        raise DegenerateRatio(0, k_over, variant)
    if k_under == n:
        ratio = 1.0  # nothing beyond K = n separates the pair
    else:
        ratio = (math.ceil((k_under + 1) * factors[k_under] / lam_min) - 1) / k_under
    return OrderingBounds(k_under=k_under, k_over=k_over, ratio_bound=ratio, variant=variant)


def prob_bound(inst: Instance, epsilon: float) -> ProbBoundReport:
    """Ratio bound holding with a probability driven by the eigenvalue
    spread, for matrices whose eigenbasis carries no preferred direction.

    epsilon is the multiplicative slack granted to the mean eigenvalue;
    larger slack buys higher probability, and slack at or beyond
    eps_max = lam_max/mean - 1 makes the bound certain.
    """
    eps = float(epsilon)
    if not math.isfinite(eps) or eps <= 0.0:
        raise ValueError("epsilon must be positive and finite")
    n = inst.n
    w = eig_sym(inst.q).eigenvalues
    lam_min = float(w[0])
    lam_max = float(w[-1])
    mean = float(np.mean(w))
    var = float(np.mean((w - mean) ** 2))
    eps_max = lam_max / mean - 1.0
    if (lam_max - mean) ** 2 > 8.0 * var:
        disc = math.sqrt(max(eps_max**2 - 8.0 * var / mean**2, 0.0))
        interval: Optional[Tuple[float, float]] = (
            (eps_max - disc) / 4.0,
            (eps_max + disc) / 4.0,
        )
    else:
        interval = None
    if eps >= eps_max:
        regime = "certain"
        probability = 1.0
    else:
        if interval is not None and interval[0] < eps < interval[1]:
            # tail exponent at the clamped optimizer; agrees with the
            # quadratic branch at both interval endpoints
            regime = "linear"
            exponent = (n / 8.0) * eps * mean / (lam_max - (1.0 + eps) * mean)
        else:
            regime = "quadratic"
            exponent = (n / 8.0) * (eps * mean) ** 2 / ((eps * mean) ** 2 + var)
        probability = 1.0 - math.exp(-exponent)
        if probability >= 1.0:
            # keep probability == 1 equivalent to the certain regime
            probability = math.nextafter(1.0, 0.0)
    k_under, _ = _k_under_eig(inst.q, inst.c**2, inst.gamma)
    if k_under == 0:
        ratio = math.inf
    else:
        ratio = (math.ceil((k_under + 1) * (1.0 + eps) * mean / lam_min) - 1) / k_under
    return ProbBoundReport(
        epsilon=eps,
        ratio_bound=ratio,
        probability=probability,
        regime=regime,
        interval_i=interval,
        eig_mean=mean,
        eig_var=var,
        eps_max=eps_max,
    )


def _normalized_offdiag(qmat: SymMatrix) -> np.ndarray:
    d = np.sqrt(np.diag(qmat.entries))
    w = np.abs(qmat.entries) / np.outer(d, d)
    np.fill_diagonal(w, 0.0)
    return w


def diag_dom_bounds(inst: Instance) -> OrderingBounds:
    """Sandwich from normalized off-diagonal row sums.

    Applies when every row of |Q_mn|/sqrt(Q_mm Q_nn) sums below 1 off
    the diagonal; the candidate zero sets collect the smallest products
    Q_nn c_n^2.
    """
    n = inst.n
    gamma = inst.gamma
    offdiag = _normalized_offdiag(inst.q)
    row_sums = offdiag.sum(axis=1)
    r_full = float(row_sums.max())
    if r_full >= 1.0:
        raise NotDiagonallyDominant(f"normalized off-diagonal row sum {r_full:.6g} >= 1")
    products = np.diag(inst.q.entries) * inst.c**2
    order = np.argsort(products, kind="stable")

    def factor_at(k: int) -> float:
        idx = order[:k]
        block = offdiag[np.ix_(idx, idx)]
        return 1.0 + float(block.sum(axis=1).max())

    k_over = _fixed_factor_max_k(1.0 - r_full, products, gamma)
    k_under, factors = _scan_max_k(products, gamma, factor_at)
    if k_under == 0:
        raise DegenerateRatio(0, k_over, "diag_dom")
    if k_under == n:
        ratio = 1.0
    else:
        r_dd = factors[k_under] / (1.0 - r_full)
        ratio = (math.ceil((k_under + 1) * r_dd) - 1) / k_under
    return OrderingBounds(k_under=k_under, k_over=k_over, ratio_bound=ratio, variant="diag_dom")


def default_ordering(eigenvectors: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Greedy eigencolumn-to-coordinate matching.

    Columns are taken most decisive first (largest peak magnitude) and
    each claims the free coordinate where it is largest, with the sign
    flipped so the claimed entry is positive.  Returns (cols, signs)
    with cols[i] the eigencolumn placed at coordinate i.
    """
    v = np.asarray(eigenvectors, dtype=np.float64)
    n = v.shape[0]
    cols = np.full(n, -1, dtype=np.int64)
    signs = np.zeros(n, dtype=np.float64)
    taken = np.zeros(n, dtype=bool)
    for j in np.argsort(-np.abs(v).max(axis=0), kind="stable"):
        mag = np.abs(v[:, j]).copy()
        mag[taken] = -1.0
        i = int(np.argmax(mag))
        taken[i] = True
        cols[i] = j
        signs[i] = 1.0 if v[i, j] >= 0.0 else -1.0
    return cols, signs


def _check_ordering(ordering, n: int) -> tuple[np.ndarray, np.ndarray]:
    if not isinstance(ordering, (tuple, list)) or len(ordering) != 2:
        raise ValueError("ordering must be a (cols, signs) pair")
    cols = np.asarray(ordering[0], dtype=np.int64).ravel()
    signs = np.asarray(ordering[1], dtype=np.float64).ravel()
    if cols.size != n or signs.size != n:
        raise ValueError("ordering arrays must match the instance dimension")
    if not np.array_equal(np.sort(cols), np.arange(n, dtype=np.int64)):
        raise ValueError("cols must be a permutation of 0..n-1")
    if not np.all(np.abs(signs) == 1.0):
        raise ValueError("signs must be +1 or -1")
    return cols, signs


def alignment_certificate(inst: Instance, ordering=None) -> AlignmentCertificate:
    """Misalignment data for the eigenbasis of Q matched to coordinates.

    ordering, when given, is a (cols, signs) pair overriding the greedy
    default.  Raises AlignmentTooWeak when kappa * rho >= 1, at which
    point the certified bracket is empty.
    """
    n = inst.n
    decomp = eig_sym(inst.q)
    w = decomp.eigenvalues
    if ordering is None:
        cols, signs = default_ordering(decomp.eigenvectors)
    else:
        cols, signs = _check_ordering(ordering, n)
    v_matched = decomp.eigenvectors[:, cols] * signs[None, :]
    delta = v_matched - np.eye(n)
    gram_eigs = eig_sym(SymMatrix(delta.T @ delta)).eigenvalues
    rho = math.sqrt(max(float(gram_eigs[-1]), 0.0))
    kappa = float(w[-1] / w[0])
    if kappa * rho >= 1.0:
        raise AlignmentTooWeak(f"kappa * rho = {kappa * rho:.6g} >= 1")
    matched = w[cols].copy()
    cols = cols.copy()
    signs = signs.copy()
    for arr in (matched, cols, signs):
        arr.flags.writeable = False
    return AlignmentCertificate(
        kappa=kappa,
        rho=rho,
        eig_lower=1.0 - kappa * rho,
        eig_upper=1.0 + kappa * (rho + rho**2),
        cols=cols,
        signs=signs,
        matched_eigenvalues=matched,
    )


def near_aligned_bounds(inst: Instance, ordering=None) -> OrderingBounds:
    """Sandwich for an eigenbasis close to the coordinate basis.

    The products pair each coordinate with the eigenvalue of its matched
    eigencolumn; the certified factors come straight from the alignment
    certificate.
    """
    cert = alignment_certificate(inst, ordering)
    products = cert.matched_eigenvalues * inst.c**2
    k_under = _fixed_factor_max_k(cert.eig_upper, products, inst.gamma)
    k_over = _fixed_factor_max_k(cert.eig_lower, products, inst.gamma)
    if k_under == 0:
        raise DegenerateRatio(0, k_over, "near_aligned")
    r_na = cert.eig_upper / cert.eig_lower
    ratio = (math.ceil((k_under + 1) * r_na) - 1) / k_under
    return OrderingBounds(
        k_under=k_under, k_over=k_over, ratio_bound=ratio, variant="near_aligned"
    )
