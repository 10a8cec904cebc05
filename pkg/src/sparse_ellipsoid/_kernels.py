"""Hot numeric kernels.

Every function in this module is written in a restricted numpy style that
numba's ``njit`` can compile. When numba is importable and the environment
variable ``SPARSE_ELLIPSOID_NO_JIT`` is unset (or falsy), the public names
are rebound to compiled dispatchers at import time; otherwise the plain
Python definitions run as-is (the pure-numpy fallback path). Semantics are
identical on both paths; ``benchmarks/bench_jit.py`` compares their speed.

Kernels operate on raw float64 arrays. Validation, wrapping, and error
signaling live in the caller modules; kernels report failure through ``ok``
flags so they stay exception-free under compilation.
"""

from __future__ import annotations

import os

import numpy as np

try:
    import numba
except ImportError:  # pragma: no cover - numba is a declared dependency
    numba = None


def jit_enabled() -> bool:
    """True when kernels are (to be) compiled rather than interpreted."""
    flag = os.environ.get("SPARSE_ELLIPSOID_NO_JIT", "").strip().lower()
    return numba is not None and flag not in {"1", "true", "yes", "on"}


# ---------------------------------------------------------------------------
# Factorization and triangular solves
# ---------------------------------------------------------------------------


def chol_lower(a):
    """Lower Cholesky factor of a symmetric matrix.

    Returns (L, ok). ok is False iff a pivot is <= 0 or non-finite, which is
    the positive-definiteness certificate used across the package.
    """
    n = a.shape[0]
    w = np.zeros((n, n))
    for i in range(n):
        for j in range(i + 1):
            w[i, j] = a[i, j]
    for j in range(n):
        d = w[j, j]
        if not np.isfinite(d) or d <= 0.0:
            return w, False
        d = np.sqrt(d)
        w[j, j] = d
        for i in range(j + 1, n):
            w[i, j] /= d
        # trailing rank-1 update, lower triangle only
        for i in range(j + 1, n):
            lij = w[i, j]
            if lij != 0.0:
                for t in range(i, n):
                    w[t, i] -= w[t, j] * lij
    return w, True


def solve_chol(L, b):
    """Solve (L Lᵀ) x = b given the lower Cholesky factor L."""
    n = L.shape[0]
    x = b.copy()
    for i in range(n):
        s = x[i]
        for k in range(i):
            s -= L[i, k] * x[k]
        x[i] = s / L[i, i]
    for i in range(n - 1, -1, -1):
        s = x[i]
        for k in range(i + 1, n):
            s -= L[k, i] * x[k]
        x[i] = s / L[i, i]
    return x


def inv_lower(L):
    """Inverse of a lower-triangular matrix."""
    n = L.shape[0]
    m = np.zeros((n, n))
    for j in range(n):
        m[j, j] = 1.0 / L[j, j]
        for i in range(j + 1, n):
            s = 0.0
            for k in range(j, i):
                s += L[i, k] * m[k, j]
            m[i, j] = -s / L[i, i]
    return m


def inv_from_chol(L):
    """Full inverse A⁻¹ = L⁻ᵀ L⁻¹ from the lower Cholesky factor."""
    n = L.shape[0]
    m = inv_lower(L)
    out = np.zeros((n, n))
    for i in range(n):
        for j in range(i + 1):
            s = 0.0
            # (A⁻¹)_ij = Σ_k m[k,i] m[k,j]; m lower triangular
            lo = i if i > j else j
            for k in range(lo, n):
                s += m[k, i] * m[k, j]
            out[i, j] = s
            out[j, i] = s
    return out


def diag_of_inv_from_chol(L):
    """Diagonal of A⁻¹ from the lower Cholesky factor of A."""
    n = L.shape[0]
    m = inv_lower(L)
    out = np.zeros(n)
    for i in range(n):
        s = 0.0
        for k in range(i, n):
            s += m[k, i] * m[k, i]
        out[i] = s
    return out


def logdet_from_chol(L):
    n = L.shape[0]
    s = 0.0
    for i in range(n):
        s += np.log(L[i, i])
    return 2.0 * s


# ---------------------------------------------------------------------------
# Cyclic Jacobi eigensolver
# ---------------------------------------------------------------------------


def jacobi_eig(a, rel_tol, max_sweeps):
    """Cyclic Jacobi sweeps on a symmetric matrix.

    Sweeps until the off-diagonal Frobenius norm is <= rel_tol * ||a||_F or
    max_sweeps is hit. Returns (eigenvalues ascending, V columns matched,
    converged flag).
    """
    n = a.shape[0]
    A = a.copy()
    V = np.eye(n)
    fro = 0.0
    for i in range(n):
        for j in range(n):
            fro += a[i, j] * a[i, j]
    thresh = rel_tol * np.sqrt(fro)

    converged = False
    for _sweep in range(max_sweeps):
        off = 0.0
        for i in range(n):
            for j in range(i + 1, n):
                off += 2.0 * A[i, j] * A[i, j]
        if np.sqrt(off) <= thresh:
            converged = True
            break
        for p in range(n - 1):
            for q in range(p + 1, n):
                apq = A[p, q]
                if apq == 0.0:
                    continue
                tau = (A[q, q] - A[p, p]) / (2.0 * apq)
                if tau >= 0.0:
                    t = 1.0 / (tau + np.sqrt(1.0 + tau * tau))
                else:
                    t = -1.0 / (-tau + np.sqrt(1.0 + tau * tau))
                cth = 1.0 / np.sqrt(1.0 + t * t)
                sth = t * cth
                app = A[p, p]
                aqq = A[q, q]
                A[p, p] = app - t * apq
                A[q, q] = aqq + t * apq
                A[p, q] = 0.0
                A[q, p] = 0.0
                for k in range(n):
                    if k != p and k != q:
                        akp = A[k, p]
                        akq = A[k, q]
                        A[k, p] = cth * akp - sth * akq
                        A[p, k] = A[k, p]
                        A[k, q] = sth * akp + cth * akq
                        A[q, k] = A[k, q]
                for k in range(n):
                    vkp = V[k, p]
                    vkq = V[k, q]
                    V[k, p] = cth * vkp - sth * vkq
                    V[k, q] = sth * vkp + cth * vkq
    else:
        # loop exhausted: one final threshold check
        off = 0.0
        for i in range(n):
            for j in range(i + 1, n):
                off += 2.0 * A[i, j] * A[i, j]
        converged = np.sqrt(off) <= thresh

    vals = np.zeros(n)
    for i in range(n):
        vals[i] = A[i, i]
    order = np.argsort(vals)
    w = np.zeros(n)
    U = np.zeros((n, n))
    for j in range(n):
        src = order[j]
        w[j] = vals[src]
        for i in range(n):
            U[i, j] = V[i, src]
    return w, U, converged


# ---------------------------------------------------------------------------
# E0 evaluation on zero sets (via W = Q⁻¹: c_Zᵀ((W)_ZZ)⁻¹c_Z)
# ---------------------------------------------------------------------------


def e0_subset(w, c, idx):
    """Constraint value for the zero set given by idx (ascending int64 array).

    w is the full inverse Q⁻¹; the Schur complement identity
    Q/Q_YY = ((Q⁻¹)_ZZ)⁻¹ turns the evaluation into one small solve.
    """
    m = idx.shape[0]
    sub = np.zeros((m, m))
    cz = np.zeros(m)
    for i in range(m):
        cz[i] = c[idx[i]]
        for j in range(m):
            sub[i, j] = w[idx[i], idx[j]]
    L, ok = chol_lower(sub)
    if not ok:
        return np.inf
    x = solve_chol(L, cz)
    s = 0.0
    for i in range(m):
        s += cz[i] * x[i]
    return s


def greedy_backward_mask(w, c, gamma):
    """Backward greedy growth of the zero set.

    At each step adds the index minimizing the resulting E0 value while it
    stays <= gamma (ties -> lowest index via strict < on an ascending scan).
    Returns a boolean mask of the chosen zero set.
    """
    n = c.shape[0]
    in_z = np.zeros(n, np.bool_)
    idx = np.zeros(n, np.int64)
    zc = 0
    while zc < n:
        best_val = np.inf
        best_cand = -1
        for cand in range(n):
            if in_z[cand]:
                continue
            # splice cand into the ascending index list
            pos = 0
            while pos < zc and idx[pos] < cand:
                pos += 1
            trial = np.zeros(zc + 1, np.int64)
            for i in range(pos):
                trial[i] = idx[i]
            trial[pos] = cand
            for i in range(pos, zc):
                trial[i + 1] = idx[i]
            val = e0_subset(w, c, trial)
            if val < best_val:
                best_val = val
                best_cand = cand
        if best_cand < 0 or not (best_val <= gamma):
            break
        pos = 0
        while pos < zc and idx[pos] < best_cand:
            pos += 1
        for i in range(zc, pos, -1):
            idx[i] = idx[i - 1]
        idx[pos] = best_cand
        in_z[best_cand] = True
        zc += 1
    return in_z


def brute_force_max_zeros(w, c, gamma):
    """Largest feasible zero-set size by decreasing-size enumeration.

    Returns (K, zero-set indices). Subsets of each size are visited in
    lexicographic order; the first feasible subset of the largest feasible
    size wins.
    """
    n = c.shape[0]
    best = np.zeros(0, np.int64)
    for k in range(n, 0, -1):
        idx = np.arange(k)
        while True:
            if e0_subset(w, c, idx) <= gamma:
                return k, idx.copy()
            # advance to the next k-combination of {0..n-1}
            i = k - 1
            while i >= 0 and idx[i] == i + n - k:
                i -= 1
            if i < 0:
                break
            idx[i] += 1
            for j in range(i + 1, k):
                idx[j] = idx[j - 1] + 1
    return 0, best


# ---------------------------------------------------------------------------
# Sum of K smallest and its tie-averaged supergradient
# ---------------------------------------------------------------------------


def sum_k_smallest_kernel(values, k):
    if k <= 0:
        return 0.0
    srt = np.sort(values)
    s = 0.0
    for i in range(k):
        s += srt[i]
    return s


def sk_tie_weights(values, k):
    """Weights w with S_K'(values) = w: 1 below the K-th smallest, the K-th
    value's weight averaged over its tie group, 0 above."""
    n = values.shape[0]
    out = np.zeros(n)
    if k <= 0:
        return out
    if k >= n:
        for i in range(n):
            out[i] = 1.0
        return out
    srt = np.sort(values)
    thr = srt[k - 1]
    span = np.abs(srt[n - 1] - srt[0])
    tol = 1e-12 * (span + np.abs(thr) + 1.0)
    below = 0
    tied = 0
    for i in range(n):
        if values[i] < thr - tol:
            below += 1
        elif values[i] <= thr + tol:
            tied += 1
    share = (k - below) / tied
    for i in range(n):
        if values[i] < thr - tol:
            out[i] = 1.0
        elif values[i] <= thr + tol:
            out[i] = share
    return out


# ---------------------------------------------------------------------------
# Projected gradient ascent for the continuous-relaxation dual
# ---------------------------------------------------------------------------


def dual_ascent(qinv, c, gamma, lo, hi, mu0, tol, max_iter):
    """Maximize cᵀμ − √(γ μᵀQ⁻¹μ) over the box [lo, hi] per coordinate.

    Projected gradient ascent with Armijo backtracking; stops after 5
    consecutive accepted steps whose relative improvement is < tol, or at
    max_iter. Returns (mu, objective, iterations).
    """
    n = c.shape[0]
    mu = np.zeros(n)
    for i in range(n):
        v = mu0[i]
        if v < lo[i]:
            v = lo[i]
        if v > hi[i]:
            v = hi[i]
        mu[i] = v
    qm = np.dot(qinv, mu)
    s = np.dot(mu, qm)
    f = np.dot(c, mu) - np.sqrt(gamma * s)
    step = 1.0
    consec = 0
    it = 0
    while it < max_iter:
        it += 1
        if s <= 0.0:
            break  # at the nondifferentiable origin; caller handles
        r = np.sqrt(gamma * s)
        grad = np.zeros(n)
        for i in range(n):
            grad[i] = c[i] - gamma * qm[i] / r
        t = step * 2.0
        accepted = False
        fc = f
        while t > 1e-18:
            cand = np.zeros(n)
            for i in range(n):
                v = mu[i] + t * grad[i]
                if v < lo[i]:
                    v = lo[i]
                if v > hi[i]:
                    v = hi[i]
                cand[i] = v
            gd = 0.0
            for i in range(n):
                gd += grad[i] * (cand[i] - mu[i])
            if gd <= 0.0:
                break
            qc = np.dot(qinv, cand)
            sc = np.dot(cand, qc)
            fc = np.dot(c, cand) - np.sqrt(gamma * sc)
            if fc >= f + 1e-4 * gd:
                mu = cand
                qm = qc
                s = sc
                accepted = True
                step = t
                break
            t *= 0.5
        if not accepted:
            break
        rel = (fc - f) / (np.abs(fc) + 1e-30)
        f = fc
        if rel < tol:
            consec += 1
            if consec >= 5:
                break
        else:
            consec = 0
    return mu, f, it


# ---------------------------------------------------------------------------
# Log-barrier supergradient ascent for E_d(K)
# ---------------------------------------------------------------------------


def ed_barrier_value(q, d, mu):
    """Barrier part μ(log det(Q−D) + Σ log d); -inf flag via ok."""
    n = d.shape[0]
    m = np.zeros((n, n))
    for i in range(n):
        for j in range(n):
            m[i, j] = q[i, j]
        m[i, i] -= d[i]
    L, ok = chol_lower(m)
    if not ok:
        return 0.0, False
    s = logdet_from_chol(L)
    for i in range(n):
        if d[i] <= 0.0:
            return 0.0, False
        s += np.log(d[i])
    return mu * s, True


def ed_ascent(q, csq, k, d0, gamma, tol, inner_cap):
    """Maximize S_K({d_n c_n²}) s.t. 0 ≺ diag(d) ≺ Q by log-barrier
    supergradient ascent with a decreasing barrier schedule.

    Every iterate is strictly feasible, so the best plain objective seen is
    always a valid certificate. Returns (d_best, objective_best).
    """
    n = csq.shape[0]
    d = d0.copy()
    best_d = d0.copy()
    best_obj = sum_k_smallest_kernel(d0 * csq, k)

    m = np.zeros((n, n))
    for outer in range(7):
        mu = 1e-2 * gamma * (0.1 ** outer)
        # current barrier objective
        bar, ok = ed_barrier_value(q, d, mu)
        if not ok:
            break
        f_cur = sum_k_smallest_kernel(d * csq, k) + bar
        t = 1.0
        small = 0
        for _it in range(inner_cap):
            for i in range(n):
                for j in range(n):
                    m[i, j] = q[i, j]
                m[i, i] -= d[i]
            L, okc = chol_lower(m)
            if not okc:
                break
            binv = diag_of_inv_from_chol(L)
            w = sk_tie_weights(d * csq, k)
            g = np.zeros(n)
            gmax = 0.0
            for i in range(n):
                g[i] = w[i] * csq[i] - mu * binv[i] + mu / d[i]
                a = np.abs(g[i])
                if a > gmax:
                    gmax = a
            if gmax <= 1e-16 * (1.0 + np.abs(f_cur)):
                break
            t = t * 2.0
            accepted = False
            f_new = f_cur
            while t > 1e-20:
                d1 = d + t * g
                okp = True
                for i in range(n):
                    if d1[i] <= 0.0:
                        okp = False
                        break
                if okp:
                    bar1, okb = ed_barrier_value(q, d1, mu)
                    if okb:
                        obj1 = sum_k_smallest_kernel(d1 * csq, k)
                        f1 = obj1 + bar1
                        if f1 > f_cur:
                            d = d1
                            f_new = f1
                            if obj1 > best_obj:
                                best_obj = obj1
                                best_d = d1.copy()
                            accepted = True
                            break
                t *= 0.5
            if not accepted:
                break
            rel = (f_new - f_cur) / (np.abs(f_new) + 1e-30)
            f_cur = f_new
            if rel < tol * 1e-2:
                small += 1
                if small >= 2:
                    break
            else:
                small = 0
    return best_d, best_obj


_KERNELS = (
    "chol_lower",
    "solve_chol",
    "inv_lower",
    "inv_from_chol",
    "diag_of_inv_from_chol",
    "logdet_from_chol",
    "jacobi_eig",
    "e0_subset",
    "greedy_backward_mask",
    "brute_force_max_zeros",
    "sum_k_smallest_kernel",
    "sk_tie_weights",
    "dual_ascent",
    "ed_barrier_value",
    "ed_ascent",
)

if jit_enabled():
    _decorate = numba.njit(cache=True)
    for _name in _KERNELS:
        globals()[_name] = _decorate(globals()[_name])
