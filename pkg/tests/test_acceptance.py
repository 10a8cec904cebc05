"""End-to-end acceptance battery: one test per criterion, pinned tolerances.

Each test asserts both the substantive result and its wall-clock budget.
Random draws all flow through the package generators with fixed seeds, so
every run sees the same instances.
"""

import csv
import json
import time

import numpy as np
import pytest
from conftest import (
    best_case_instance,
    tight_dd_instance,
    tight_eig_instance,
    worst_case_instance,
)

from sparse_ellipsoid.bnb import BnbConfig, brute_force, solve
from sparse_ellipsoid.bounds import (
    DegenerateRatio,
    diag_dom_bounds,
    eig_bounds,
    near_aligned_bounds,
)
from sparse_ellipsoid.cli import (
    CSV_HEADER,
    main,
    verify_cont_certificate,
    verify_diag_certificate,
)
from sparse_ellipsoid.cont_relax import (
    box_constants,
    dual_gradient,
    dual_objective,
    lower_bound,
    prop1_upper_bound,
    solve_dual,
)
from sparse_ellipsoid.diag_relax import solve_e_d, solve_relaxation
from sparse_ellipsoid.generators import EnsembleSpec, generate, spec_to_dict
from sparse_ellipsoid.instance import Instance
from sparse_ellipsoid.linalg import SymMatrix, schur_complement


def elapsed_since(t0):
    return time.monotonic() - t0


def small_rotation(rng, n, theta_max):
    v = np.eye(n)
    for i in range(n):
        for j in range(i + 1, n):
            th = rng.uniform(-theta_max, theta_max)
            g = np.eye(n)
            g[i, i] = g[j, j] = np.cos(th)
            g[i, j] = -np.sin(th)
            g[j, i] = np.sin(th)
            v = v @ g
    return v


def near_aligned_instance(rng, n):
    basis = small_rotation(rng, n, 0.05)
    lams = np.exp(rng.uniform(0.0, np.log(5.0), size=n))
    q = basis @ np.diag(lams) @ basis.T
    half = np.sqrt(np.diag(np.linalg.inv(q)))
    c = rng.uniform(-0.9, 0.9, size=n) * half
    return Instance(SymMatrix(q), c, 1.0)


def test_criterion_01_best_case_family_exact():
    t0 = time.monotonic()
    for n in (6, 8, 10, 12):
        inst = best_case_instance(n)
        assert brute_force(inst)[0] == n // 2
        assert lower_bound(inst) == n // 2
    assert elapsed_since(t0) < 10.0


def test_criterion_02_worst_case_family_exact():
    t0 = time.monotonic()
    diag_bounds = []
    for n in (6, 8, 10, 12):
        inst = worst_case_instance(n)
        assert brute_force(inst)[0] == n - 1
        assert lower_bound(inst) == 1
        diag_bounds.append(solve_relaxation(inst).lower_bound)
    assert diag_bounds == [0, 0, 0, 0]
    assert elapsed_since(t0) < 10.0


def test_criterion_03_diagonal_relaxation_reaches_k_lambda_min():
    t0 = time.monotonic()
    cases = (
        (best_case_instance, lambda n: 1.0 / n),
        (worst_case_instance, lambda n: 1.0 / (n - 1)),
        (tight_eig_instance, lambda n: 1.0 / n),
    )
    for make, lam_min in cases:
        for n in (6, 10, 20):
            inst = make(n)
            for k in (1, (n + 1) // 2, n):
                cert = solve_e_d(inst, k)
                target = k * lam_min(n)
                assert cert.objective == pytest.approx(target, rel=1e-4)
    assert elapsed_since(t0) < 30.0


def test_criterion_04_sandwich_zero_violations_200():
    t0 = time.monotonic()
    runs = []
    for n in range(6, 13):
        runs.append(
            (
                eig_bounds,
                generate(EnsembleSpec("powerlaw_inv", n, seed=400 + n, count=10, kappa=10.0)),
            )
        )
        runs.append(
            (
                diag_dom_bounds,
                generate(EnsembleSpec("offdiag_uniform", n, seed=430 + n, count=10, a=0.2)),
            )
        )
    rng = np.random.default_rng(460)
    naa = [near_aligned_instance(rng, 6 + (i % 7)) for i in range(60)]
    runs.append((near_aligned_bounds, naa))

    total = 0
    for calculator, insts in runs:
        for inst in insts:
            total += 1
            k_star = inst.n - brute_force(inst)[0]
            k_d = solve_relaxation(inst).k_d
            try:
                b = calculator(inst)
                k_under, k_over, ratio = b.k_under, b.k_over, b.ratio_bound
            except DegenerateRatio as exc:
                k_under, k_over, ratio = exc.k_under, exc.k_over, None
            assert k_under <= k_star <= k_d <= k_over
            if ratio is not None and k_under >= 1:
                assert k_over / k_under <= ratio + 1e-12
    assert total == 200
    assert elapsed_since(t0) < 300.0


def test_criterion_05_tightness_pins_exact():
    t0 = time.monotonic()
    inst = tight_eig_instance(9)
    b = eig_bounds(inst)
    k_star = 9 - brute_force(inst)[0]
    k_d = solve_relaxation(inst).k_d
    assert (b.k_under, b.k_over, k_d, k_star) == (6, 9, 9, 6)

    inst = tight_dd_instance(5)
    b = diag_dom_bounds(inst)
    k_star = 5 - brute_force(inst)[0]
    k_d = solve_relaxation(inst).k_d
    assert (b.k_under, b.k_over, k_d, k_star) == (4, 5, 5, 4)
    assert elapsed_since(t0) < 30.0


def test_criterion_06_search_matches_brute_force_300():
    t0 = time.monotonic()
    specs = []
    for n in range(6, 13):
        specs.append(EnsembleSpec("powerlaw_inv", n, seed=600 + n, count=11, kappa=10.0))
        specs.append(EnsembleSpec("uniform", n, seed=620 + n, count=11, kappa=10.0))
        specs.append(EnsembleSpec("powerlaw_inv_sq", n, seed=640 + n, count=11, kappa=10.0))
        specs.append(EnsembleSpec("offdiag_uniform", n, seed=660 + n, count=11, a=0.3))
    total = 0
    for spec in specs:
        for inst in generate(spec):
            total += 1
            oracle = brute_force(inst)[0]
            for mode in ("none", "continuous", "diagonal"):
                report = solve(inst, BnbConfig(bound_mode=mode))
                assert report.proven_optimal
                assert report.optimal_cost == oracle
    assert total == 308
    assert elapsed_since(t0) < 600.0


@pytest.fixture(scope="module")
def desk_scale_spec(tmp_path_factory):
    spec = EnsembleSpec("powerlaw_inv_sq", 40, seed=20260816, count=100, kappa=40.0)
    path = tmp_path_factory.mktemp("bench") / "spec40.json"
    path.write_text(json.dumps(spec_to_dict(spec)))
    return str(path)


def read_mean_row(path):
    with open(path, newline="", encoding="utf-8") as fh:
        rows = list(csv.reader(fh))
    assert rows[0] == CSV_HEADER
    assert rows[-1][0] == "mean"
    return dict(zip(CSV_HEADER, rows[-1]))


def test_criterion_07_ratio_gap_at_desk_scale(desk_scale_spec, tmp_path):
    t0 = time.monotonic()
    out = tmp_path / "ratios.csv"
    assert main(["bench", "--spec", desk_scale_spec, "--mode", "ratios", "--out", str(out)]) == 0
    mean = read_mean_row(out)
    assert float(mean["r_d"]) >= float(mean["r_c"]) + 0.1
    assert elapsed_since(t0) < 1800.0


def test_criterion_08_node_counts_at_desk_scale(desk_scale_spec, tmp_path):
    t0 = time.monotonic()
    out = tmp_path / "bnb.csv"
    assert main(["bench", "--spec", desk_scale_spec, "--mode", "bnb", "--out", str(out)]) == 0
    mean = read_mean_row(out)
    assert float(mean["nodes_bbd"]) <= 0.8 * float(mean["nodes_bbc"])
    assert elapsed_since(t0) < 3600.0


def test_criterion_09_numerical_hygiene():
    t0 = time.monotonic()
    # gradient vs central differences at 50 interior points
    rng = np.random.default_rng(900)
    insts = generate(EnsembleSpec("powerlaw_inv", 9, seed=901, count=10, kappa=12.0))
    for inst in insts:
        box = box_constants(inst)
        lo, hi = -1.0 / box.b_minus, 1.0 / box.b_plus
        for _ in range(5):
            mu = lo + rng.uniform(0.2, 0.8, inst.n) * (hi - lo)
            grad = dual_gradient(inst, mu)
            fd = np.empty(inst.n)
            h = 1e-6
            for i in range(inst.n):
                e = np.zeros(inst.n)
                e[i] = h
                fd[i] = (dual_objective(inst, mu + e) - dual_objective(inst, mu - e)) / (2 * h)
            assert np.linalg.norm(fd - grad) <= 1e-5 * np.linalg.norm(grad)

    # complement-of-inverse identity on 100 random matrices
    count = 0
    for n in range(5, 15):
        for inst in generate(
            EnsembleSpec("uniform", n, seed=910 + n, count=10, kappa=15.0)
        ):
            count += 1
            k = int(rng.integers(1, n))
            z = np.sort(rng.choice(n, size=k, replace=False))
            y = np.setdiff1d(np.arange(n), z)
            ours = schur_complement(inst.q, y).entries
            qinv = np.linalg.inv(inst.q.entries)
            reference = np.linalg.inv(qinv[np.ix_(z, z)])
            err = np.linalg.norm(ours - reference) / np.linalg.norm(reference)
            assert err <= 1e-8
    assert count == 100

    # every emitted certificate re-verifies
    mixed = generate(EnsembleSpec("powerlaw_inv", 8, seed=920, count=10, kappa=10.0))
    mixed += generate(EnsembleSpec("offdiag_uniform", 8, seed=921, count=10, a=0.4))
    for inst in mixed:
        cert = solve_dual(inst)
        bound = int(np.ceil(cert.objective - 1e-7))
        assert verify_cont_certificate(inst, cert.mu, bound) is None
        res = solve_relaxation(inst)
        assert verify_diag_certificate(inst, res.certificate.d, res.lower_bound) is None
    assert elapsed_since(t0) < 60.0


def test_criterion_10_dual_objective_under_cap_500():
    t0 = time.monotonic()
    total = 0
    for n in range(6, 16):
        for family, kw in (
            ("powerlaw_inv", {"kappa": 10.0}),
            ("uniform", {"kappa": 10.0}),
            ("powerlaw_inv_sq", {"kappa": 10.0}),
            ("offdiag_uniform", {"a": 0.4}),
            ("powerlaw_inv", {"kappa": 50.0}),
        ):
            spec = EnsembleSpec(family, n, seed=1000 + 10 * n + len(kw), count=10, **kw)
            for inst in generate(spec):
                total += 1
                assert solve_dual(inst).objective <= prop1_upper_bound(inst) + 1e-8
    assert total == 500
    assert elapsed_since(t0) < 60.0
