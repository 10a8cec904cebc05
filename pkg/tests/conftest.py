"""Shared oracles for the test suite.

All are independent reimplementations on top of numpy.linalg so that
package results are checked against a second route, not against
themselves.
"""

from itertools import combinations

import numpy as np

from sparse_ellipsoid.instance import Instance
from sparse_ellipsoid.linalg import SymMatrix


def random_pd_instance(rng, n, cond=10.0, gamma=1.0):
    """Random PD instance with controlled conditioning, away from feasibility
    boundaries with probability 1."""
    b = rng.normal(size=(n, n))
    q_basis, _ = np.linalg.qr(b)
    eigs = np.exp(rng.uniform(0.0, np.log(cond), size=n))
    q = q_basis @ np.diag(eigs) @ q_basis.T
    c = rng.normal(size=n)
    return Instance(SymMatrix(q), c, gamma)


def e0_direct(q, c, z):
    """Zero-set constraint value by direct unconstrained minimization over the kept set."""
    n = len(c)
    z = np.asarray(z, dtype=int)
    y = np.setdiff1d(np.arange(n), z)
    x = np.zeros(n)
    if y.size:
        rhs = q[np.ix_(y, y)] @ c[y] + q[np.ix_(y, z)] @ c[z]
        x[y] = np.linalg.solve(q[np.ix_(y, y)], rhs)
    r = x - c
    return float(r @ q @ r)


def brute_min_cost(q, c, gamma):
    """Minimum cardinality by zero-set enumeration (oracle, n <= ~14)."""
    n = len(c)
    best = n
    for k in range(n, 0, -1):
        if n - k >= best:
            break
        for z in combinations(range(n), k):
            if e0_direct(q, c, np.array(z)) <= gamma:
                best = n - k
                break
    return best


def brute_min_cost_restricted(q, c, gamma, z_fixed, u_fixed):
    """Minimum cardinality over x with x_z = 0 and x_u committed nonzero."""
    n = len(c)
    z_fixed = set(int(i) for i in z_fixed)
    u_fixed = set(int(i) for i in u_fixed)
    free = [i for i in range(n) if i not in z_fixed and i not in u_fixed]
    best = None
    for k in range(len(free), -1, -1):
        for extra in combinations(free, k):
            z = np.array(sorted(z_fixed | set(extra)), dtype=int)
            if z.size == 0 or e0_direct(q, c, z) <= gamma:
                best = n - z.size
                return best
    return best


def rank_one_shift(n, lam1, lam2, v):
    """Q = lam2 I - (lam2 - lam1) v vᵀ for a unit vector v."""
    return lam2 * np.eye(n) - (lam2 - lam1) * np.outer(v, v)


def worst_case_instance(n):
    """Aligned instance where the continuous relaxation is weakest:
    v = e/sqrt(N), lam1 = 1/(N-1), lam2 = (N-1)/2, c = e, gamma = 1."""
    v = np.full(n, 1.0 / np.sqrt(n))
    q = rank_one_shift(n, 1.0 / (n - 1), (n - 1) / 2.0, v)
    return Instance(SymMatrix(q), np.ones(n), 1.0)


def best_case_instance(n):
    """Sign-balanced instance where the continuous relaxation is exact:
    v has ceil(N/2) entries +1/sqrt(N) and the rest -1/sqrt(N),
    lam1 = 1/N, lam2 = N, c = e, gamma = 1."""
    v = np.full(n, -1.0 / np.sqrt(n))
    v[: (n + 1) // 2] = 1.0 / np.sqrt(n)
    q = rank_one_shift(n, 1.0 / n, float(n), v)
    return Instance(SymMatrix(q), np.ones(n), 1.0)


def tight_eig_instance(n):
    """Mixed-sign family tuned so the eigenvalue sandwich is tight:
    lam1 = 1/N, lam2 = 1/(2 ceil(N/2) - floor(sqrt(N)) - 1), c = e, gamma = 1."""
    lam2 = 1.0 / (2 * ((n + 1) // 2) - int(np.sqrt(n)) - 1)
    v = np.full(n, -1.0 / np.sqrt(n))
    v[: (n + 1) // 2] = 1.0 / np.sqrt(n)
    q = rank_one_shift(n, 1.0 / n, lam2, v)
    return Instance(SymMatrix(q), np.ones(n), 1.0)


def tight_dd_instance(n):
    """Mixed-sign family tuned so the dominance sandwich is tight:
    lam1 = 1/N, lam2 = 1/N + 1/((N-1)(2N-3)), c = e, gamma = 1."""
    lam2 = 1.0 / n + 1.0 / ((n - 1) * (2 * n - 3))
    v = np.full(n, -1.0 / np.sqrt(n))
    v[: (n + 1) // 2] = 1.0 / np.sqrt(n)
    q = rank_one_shift(n, 1.0 / n, lam2, v)
    return Instance(SymMatrix(q), np.ones(n), 1.0)
