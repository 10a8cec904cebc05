"""Compare the compiled kernel path against the pure-numpy fallback.

Kernel binding happens at import time, so the two paths are measured in
child processes: one with compilation enabled, one with
SPARSE_ELLIPSOID_NO_JIT=1. Each task warms up once (absorbing compile
time) before the timed repetitions. Usage:

    python3 benchmarks/bench_jit.py
"""

from __future__ import annotations

import json
import os
import subprocess
import sys
import time


def _timed(fn, repeats):
    fn()  # warmup; first call compiles on the jit path
    t0 = time.monotonic()
    for _ in range(repeats):
        fn()
    return (time.monotonic() - t0) / repeats


def run_workload() -> dict:
    import numpy as np

    from sparse_ellipsoid import _kernels
    from sparse_ellipsoid.bnb import BnbConfig, brute_force, solve
    from sparse_ellipsoid.diag_relax import solve_relaxation
    from sparse_ellipsoid.generators import EnsembleSpec, generate
    from sparse_ellipsoid.linalg import SymMatrix, eig_sym, inverse

    rng = np.random.default_rng(7)
    a = rng.normal(size=(60, 60))
    big = SymMatrix(a @ a.T + 60.0 * np.eye(60))
    inst30 = generate(EnsembleSpec("powerlaw_inv_sq", 30, seed=11, count=1, kappa=30.0))[0]
    inst22 = generate(EnsembleSpec("powerlaw_inv_sq", 22, seed=12, count=1, kappa=22.0))[0]
    inst16 = generate(EnsembleSpec("uniform", 16, seed=13, count=1, kappa=8.0))[0]

    results = {"jit": _kernels.jit_enabled()}
    results["eig_sym n=60"] = _timed(lambda: eig_sym(big), 3)
    results["inverse n=60"] = _timed(lambda: inverse(big), 5)
    results["diag relaxation n=30"] = _timed(lambda: solve_relaxation(inst30), 1)
    results["search diag bound n=22"] = _timed(
        lambda: solve(inst22, BnbConfig(bound_mode="diagonal")), 1
    )
    results["brute force n=16"] = _timed(lambda: brute_force(inst16), 1)
    return results


def main() -> int:
    if "--run" in sys.argv:
        print(json.dumps(run_workload()))
        return 0

    here = os.path.abspath(__file__)
    out = {}
    for label, extra_env in (("jit", {}), ("pure", {"SPARSE_ELLIPSOID_NO_JIT": "1"})):
        env = dict(os.environ)
        env.pop("SPARSE_ELLIPSOID_NO_JIT", None)
        env.update(extra_env)
        proc = subprocess.run(
            [sys.executable, here, "--run"],
            env=env,
            capture_output=True,
            text=True,
            check=True,
        )
        out[label] = json.loads(proc.stdout.strip().splitlines()[-1])

    if not out["jit"]["jit"]:
        print("warning: compiled path unavailable (numba missing?)", file=sys.stderr)
    if out["pure"]["jit"]:
        print("error: fallback child still ran compiled kernels", file=sys.stderr)
        return 1

    tasks = [k for k in out["jit"] if k != "jit"]
    width = max(len(t) for t in tasks)
    print(f"{'task':<{width}}  {'jit':>10}  {'pure':>10}  {'speedup':>8}")
    for task in tasks:
        jit_s = out["jit"][task]
        pure_s = out["pure"][task]
        ratio = pure_s / jit_s if jit_s > 0 else float("inf")
        print(f"{task:<{width}}  {jit_s:>9.4f}s  {pure_s:>9.4f}s  {ratio:>7.1f}x")
    return 0


if __name__ == "__main__":
    sys.exit(main())
