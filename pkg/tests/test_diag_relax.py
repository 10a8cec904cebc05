"""Optimized diagonal relaxation: inner solver, bisection, certificates."""

import numpy as np
import pytest
from conftest import best_case_instance, brute_min_cost, random_pd_instance, rank_one_shift

from sparse_ellipsoid.diagonal import DiagInstance, solve_diagonal, sum_k_smallest
from sparse_ellipsoid.diag_relax import e_d_lower_start, solve_e_d, solve_relaxation
from sparse_ellipsoid.instance import Instance, preprocess
from sparse_ellipsoid.linalg import SymMatrix, cholesky


def tight_eig_instance(n):
    # lam1 = 1/N, lam2 = 1/(2 ceil(N/2) - floor(sqrt(N)) - 1), equal-magnitude
    # eigenvector with ceil(N/2) positive entries, c = e, gamma = 1
    lam2 = 1.0 / (2 * ((n + 1) // 2) - int(np.sqrt(n)) - 1)
    v = np.full(n, -1.0 / np.sqrt(n))
    v[: (n + 1) // 2] = 1.0 / np.sqrt(n)
    q = rank_one_shift(n, 1.0 / n, lam2, v)
    return Instance(SymMatrix(q), np.ones(n), 1.0)


# ---------------------------------------------------------------------------
# starting certificates
# ---------------------------------------------------------------------------


def test_start_diagonal_q_is_exact():
    d = np.array([2.0, 0.5, 1.0, 3.0])
    c = np.array([0.3, 1.0, -0.5, 0.2])
    inst = Instance(np.diag(d), c, 1.0)
    for k in (1, 2, 4):
        cert = e_d_lower_start(inst, k)
        expect = sum_k_smallest(d * c**2, k)
        assert cert.objective == pytest.approx(expect, rel=1e-8)
        assert cert.psd_margin >= 0.0


def test_start_equal_magnitude_eigenvector_reaches_k_over_n():
    for n in (6, 9):
        inst = best_case_instance(n)
        for k in (1, n // 2, n):
            cert = e_d_lower_start(inst, k)
            assert cert.objective == pytest.approx(k / n, rel=1e-8)


def test_start_certificates_strictly_feasible():
    rng = np.random.default_rng(0)
    for trial in range(10):
        inst = random_pd_instance(rng, 6, cond=50.0)
        cert = e_d_lower_start(inst, 3)
        assert (cert.d > 0).all()
        cholesky(SymMatrix(inst.q.entries - np.diag(cert.d)))
        assert cert.psd_margin > 0.0


# ---------------------------------------------------------------------------
# inner solver
# ---------------------------------------------------------------------------


def test_solve_e_d_diagonal_q_exact():
    d = np.array([1.5, 0.25, 4.0])
    c = np.array([0.8, -1.2, 0.4])
    inst = Instance(np.diag(d), c, 1.0)
    for k in (1, 2, 3):
        cert = solve_e_d(inst, k)
        expect = sum_k_smallest(d * c**2, k)
        assert cert.objective == pytest.approx(expect, rel=2e-6)
        assert cert.objective <= expect * (1 + 1e-12)  # never exceeds the supremum


def test_solve_e_d_worst_case_family_k_over_n():
    for n in (6, 10):
        inst = best_case_instance(n)
        for k in (1, (n + 1) // 2, n):
            cert = solve_e_d(inst, k)
            assert cert.objective == pytest.approx(k / n, rel=2e-6)


def test_solve_e_d_tightness_family_k_over_n():
    for n in (5, 9):
        inst = tight_eig_instance(n)
        for k in (1, (n + 1) // 2, n):
            cert = solve_e_d(inst, k)
            assert cert.objective == pytest.approx(k / n, rel=2e-6)


def test_solve_e_d_equal_center_upper_side():
    # equal-magnitude minimal eigenvector, c = e: E_d(K) = K lam_min exactly,
    # and feasibility keeps the solved value on the lower side
    for inst, n in ((best_case_instance(8), 8), (tight_eig_instance(9), 9)):
        lam_min = 1.0 / n
        for k in (2, n - 1):
            cert = solve_e_d(inst, k)
            assert cert.objective <= k * lam_min * (1 + 1e-5)


def test_solve_e_d_validates_k():
    inst = Instance(np.eye(2), np.ones(2), 1.0)
    with pytest.raises(ValueError):
        solve_e_d(inst, 0)
    with pytest.raises(ValueError):
        solve_e_d(inst, 3)


# ---------------------------------------------------------------------------
# bisection
# ---------------------------------------------------------------------------


def test_relaxation_exact_on_diagonal_q():
    rng = np.random.default_rng(1)
    for trial in range(15):
        n = int(rng.integers(2, 10))
        d = np.exp(rng.normal(size=n))
        c = rng.normal(size=n)
        inst = preprocess(Instance(np.diag(d), c, 1.0)).reduced
        if inst is None:
            continue
        dd = np.diag(inst.q.entries).copy()
        res = solve_relaxation(inst)
        mc, _, _ = solve_diagonal(DiagInstance(dd, inst.c, inst.gamma))
        assert res.lower_bound == mc


def test_relaxation_trivial_bound_on_worst_case_family():
    # E_d(N) = N lam1 = 1 = gamma: all K feasible, bound 0
    for n in (6, 9):
        res = solve_relaxation(best_case_instance(n))
        assert res.k_d == n
        assert res.lower_bound == 0


def test_relaxation_sound_vs_brute_force():
    rng = np.random.default_rng(2)
    for trial in range(20):
        n = int(rng.integers(2, 11))
        inst = preprocess(random_pd_instance(rng, n, cond=20.0)).reduced
        if inst is None:
            continue
        res = solve_relaxation(inst)
        opt = brute_min_cost(inst.q.entries, inst.c, inst.gamma)
        assert res.lower_bound <= opt
        # certificate independently proves the bound
        cert = res.certificate
        cholesky(SymMatrix(inst.q.entries - np.diag(cert.d)))
        mc, _, _ = solve_diagonal(DiagInstance(cert.d, inst.c, inst.gamma))
        assert mc >= res.lower_bound
        # reported objective recomputes from the certificate alone
        recomputed = sum_k_smallest(cert.d * inst.c**2, cert.k)
        assert cert.objective == pytest.approx(recomputed, abs=1e-12)


def test_relaxation_trace_monotone():
    rng = np.random.default_rng(3)
    for trial in range(10):
        inst = preprocess(random_pd_instance(rng, 9, cond=30.0)).reduced
        if inst is None:
            continue
        trace = solve_relaxation(inst).e_d_trace
        ks = trace[:, 0]
        vals = trace[:, 1]
        assert np.all(np.diff(ks) > 0)
        assert np.all(np.diff(vals) >= -1e-12)


def test_relaxation_result_shape_invariants():
    inst = best_case_instance(7)
    res = solve_relaxation(inst)
    assert res.lower_bound == inst.n - res.k_d
    assert res.certificate.objective == pytest.approx(
        sum_k_smallest(res.certificate.d * inst.c**2, res.certificate.k), abs=1e-12
    )


def test_relaxation_integer_scaling_invariance():
    rng = np.random.default_rng(4)
    for trial in range(8):
        n = int(rng.integers(3, 8))
        inst = preprocess(random_pd_instance(rng, n, cond=10.0)).reduced
        if inst is None:
            continue
        s = np.exp(rng.uniform(-1.0, 1.0, size=inst.n))
        q2 = inst.q.entries * np.outer(s, s)
        c2 = inst.c / s
        other = Instance(SymMatrix(q2), c2, inst.gamma)
        assert solve_relaxation(inst).k_d == solve_relaxation(other).k_d
