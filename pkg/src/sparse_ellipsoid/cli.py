"""Command line front end and benchmark harness.

Subcommands: solve (branch-and-bound on one instance file), relax (one
relaxation bound plus its certificate), bench (CSV over an ensemble),
bounds (sandwich calculators), verify (invariant battery against the
brute-force oracle), gen (write an ensemble to disk).

Exit codes: 0 ok, 1 input error, 2 limit reached, 3 precondition unmet,
4 verification failure.
"""

from __future__ import annotations

import argparse
import csv
import json
import math
import os
import sys
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import replace
from typing import Optional

import numpy as np

from .bnb import BnbConfig, LimitReached, backward_greedy, brute_force, solve
from .bounds import (
    AlignmentTooWeak,
    DegenerateRatio,
    NotDiagonallyDominant,
    diag_dom_bounds,
    eig_bounds,
    near_aligned_bounds,
    prob_bound,
)
from .cont_relax import dual_objective
from .cont_relax import lower_bound as cont_lower_bound
from .cont_relax import solve_dual
from .diag_relax import solve_relaxation
from .diagonal import DiagInstance, solve_diagonal
from .generators import (
    EnsembleSpec,
    RejectionLimit,
    generate,
    spec_from_dict,
    write_ensemble,
)
from .instance import Instance, from_json, to_json
from .linalg import NotPD, SymMatrix, cholesky

__all__ = [
    "main",
    "verify_cont_certificate",
    "verify_diag_certificate",
    "CSV_HEADER",
]

EXIT_OK = 0
EXIT_INPUT = 1
EXIT_LIMIT = 2
EXIT_PRECONDITION = 3
EXIT_VERIFY = 4

CSV_HEADER = [
    "instance_id",
    "class",
    "n",
    "kappa_or_a",
    "heuristic_cost",
    "bound_cont",
    "bound_diag",
    "r_c",
    "r_d",
    "nodes_bb",
    "nodes_bbc",
    "nodes_bbd",
    "time_bbc_s",
    "time_bbd_s",
]

_BOUND_MODE = {"none": "none", "cont": "continuous", "diag": "diagonal"}


class _InputError(Exception):
    """Bad flags or files; message names the violated requirement."""


class _Parser(argparse.ArgumentParser):
    # argparse exits with status 2 on bad flags, which collides with the
    # limit-reached code; route through the input-error path instead
    def error(self, message):
        raise _InputError(message)


def _load_instance(path: str) -> Instance:
    try:
        with open(path, encoding="utf-8") as fh:
            return from_json(fh.read())
    except FileNotFoundError:
        raise _InputError(f"instance file not found: {path}")
    except (ValueError, NotPD) as exc:
        raise _InputError(f"bad instance file {path}: {exc}")


def _load_json(path: str) -> dict:
    try:
        with open(path, encoding="utf-8") as fh:
            return json.load(fh)
    except FileNotFoundError:
        raise _InputError(f"file not found: {path}")
    except ValueError as exc:
        raise _InputError(f"bad JSON in {path}: {exc}")


def _emit(payload: dict, out: Optional[str]) -> None:
    text = json.dumps(payload, indent=1) + "\n"
    if out:
        with open(out, "w", encoding="utf-8") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)


def _jsonable(value):
    if isinstance(value, float) and not math.isfinite(value):
        return None
    if isinstance(value, np.ndarray):
        return value.tolist()
    return value


# ---------------------------------------------------------------------------
# certificate verifiers: recompute each bound from the certificate alone
# ---------------------------------------------------------------------------


def verify_cont_certificate(inst: Instance, mu, reported_bound: int) -> Optional[str]:
    """None if mu lies in the dual box and its recomputed objective rounds
    to the reported bound; otherwise a message saying what failed."""
    mu = np.asarray(mu, dtype=np.float64).ravel()
    if mu.size != inst.n:
        return "certificate length mismatch"
    root = np.sqrt(inst.gamma * np.diag(inst.q_inv.entries))
    b_plus = root + inst.c
    b_minus = root - inst.c
    pad = 1e-12
    for i in range(inst.n):
        hi = np.inf if b_plus[i] <= 0 else 1.0 / b_plus[i]
        lo = -np.inf if b_minus[i] <= 0 else -1.0 / b_minus[i]
        if not (lo - pad <= mu[i] <= hi + pad):
            return f"mu[{i}] = {mu[i]} outside box [{lo}, {hi}]"
    bound = int(math.ceil(dual_objective(inst, mu) - 1e-7))
    if bound != reported_bound:
        return f"recomputed bound {bound} != reported {reported_bound}"
    return None


def verify_diag_certificate(inst: Instance, d, reported_bound: int) -> Optional[str]:
    """None if d is strictly positive, Q - diag(d) passes Cholesky, and the
    exact diagonal solve reproduces the reported bound."""
    d = np.asarray(d, dtype=np.float64).ravel()
    if d.size != inst.n:
        return "certificate length mismatch"
    if not (d > 0.0).all():
        return "certificate diagonal has nonpositive entries"
    try:
        cholesky(SymMatrix(inst.q.entries - np.diag(d)))
    except NotPD:
        return "Q - D failed the positive-definite check"
    min_card, _, _ = solve_diagonal(DiagInstance(d, inst.c, inst.gamma))
    if min_card != reported_bound:
        return f"diagonal solve gives {min_card} != reported {reported_bound}"
    return None


# ---------------------------------------------------------------------------
# subcommands
# ---------------------------------------------------------------------------


def cmd_solve(args) -> int:
    inst = _load_instance(args.instance)
    cfg = BnbConfig(
        bound_mode=_BOUND_MODE[args.bound],
        relax_min_dim=args.relax_min_dim,
        node_limit=args.node_limit,
        time_limit=args.time_limit,
    )
    status = EXIT_OK
    try:
        report = solve(inst, cfg)
        frontier = None
    except LimitReached as exc:
        report = exc.report
        frontier = exc.frontier_bound
        status = EXIT_LIMIT
    payload = {
        "optimal_cost": report.optimal_cost,
        "support": report.support.tolist(),
        "nodes_explored": report.nodes_explored,
        "relaxations_solved": report.relaxations_solved,
        "incumbent_history": [list(pair) for pair in report.incumbent_history],
        "proven_optimal": report.proven_optimal,
    }
    if frontier is not None:
        payload["frontier_bound"] = frontier
    _emit(payload, args.out)
    return status


def cmd_relax(args) -> int:
    inst = _load_instance(args.instance)
    if args.which == "cont":
        cert = solve_dual(inst)
        bound = int(math.ceil(cert.objective - 1e-7))
        payload = {
            "bound": bound,
            "certificate": {
                "mu": cert.mu.tolist(),
                "objective": cert.objective,
                "box_feasible": cert.box_feasible,
            },
        }
    else:
        res = solve_relaxation(inst)
        payload = {
            "bound": res.lower_bound,
            "certificate": {
                "d": res.certificate.d.tolist(),
                "k": res.certificate.k,
                "objective": res.certificate.objective,
                "psd_margin": res.certificate.psd_margin,
            },
        }
    _emit(payload, args.out)
    return EXIT_OK


def cmd_bounds(args) -> int:
    inst = _load_instance(args.instance)
    try:
        if args.which == "eig":
            scale = None
            if args.scale:
                scale = np.asarray(_load_json(args.scale), dtype=np.float64)
            report = eig_bounds(inst, scale=scale)
        elif args.which == "dd":
            report = diag_dom_bounds(inst)
        elif args.which == "naa":
            report = near_aligned_bounds(inst)
        else:
            if args.epsilon is None:
                raise _InputError("--which prob requires --epsilon")
            try:
                report = prob_bound(inst, args.epsilon)
            except ValueError as exc:
                raise _InputError(str(exc))
            payload = {
                "epsilon": report.epsilon,
                "ratio_bound": _jsonable(report.ratio_bound),
                "probability": report.probability,
                "regime": report.regime,
                "interval_i": _jsonable(report.interval_i)
                if report.interval_i is None
                else list(report.interval_i),
                "eig_mean": report.eig_mean,
                "eig_var": report.eig_var,
                "eps_max": report.eps_max,
            }
            _emit(payload, args.out)
            return EXIT_OK
    except DegenerateRatio as exc:
        # no ratio is defined at k_under = 0; the k values are still a
        # valid report
        _emit(
            {
                "k_under": exc.k_under,
                "k_over": exc.k_over,
                "ratio_bound": None,
                "variant": exc.variant,
            },
            args.out,
        )
        return EXIT_OK
    except (NotDiagonallyDominant, AlignmentTooWeak) as exc:
        print(f"precondition unmet: {exc}", file=sys.stderr)
        return EXIT_PRECONDITION
    _emit(
        {
            "k_under": report.k_under,
            "k_over": report.k_over,
            "ratio_bound": report.ratio_bound,
            "variant": report.variant,
        },
        args.out,
    )
    return EXIT_OK


def _bench_spec(path: str):
    """Accept either an inline ensemble spec or a written manifest; return
    (spec, instances, ids)."""
    obj = _load_json(path)
    try:
        if isinstance(obj, dict) and "files" in obj and "spec" in obj:
            spec = spec_from_dict(obj["spec"])
            base = os.path.dirname(os.path.abspath(path))
            insts, ids = [], []
            for name in obj["files"]:
                insts.append(_load_instance(os.path.join(base, name)))
                ids.append(os.path.splitext(os.path.basename(name))[0])
        else:
            spec = spec_from_dict(obj)
            insts = generate(spec)
            ids = [
                f"{spec.family}_n{spec.n}_s{spec.seed}_{i:04d}"
                for i in range(len(insts))
            ]
    except ValueError as exc:
        raise _InputError(f"bad ensemble spec {path}: {exc}")
    return spec, insts, ids


def _pool_size() -> int:
    env = os.environ.get("SPARSE_ELLIPSOID_THREADS", "")
    if env:
        try:
            size = int(env)
        except ValueError:
            raise _InputError("SPARSE_ELLIPSOID_THREADS must be an integer")
        if size < 1:
            raise _InputError("SPARSE_ELLIPSOID_THREADS must be >= 1")
        return size
    return os.cpu_count() or 1


def _ratio_cells(inst: Instance) -> dict:
    cost = backward_greedy(inst)[0]
    bound_cont = cont_lower_bound(inst)
    bound_diag = solve_relaxation(inst).lower_bound
    # zero heuristic cost forces zero bounds; report ratio 1 for the 0/0
    r_c = 1.0 if cost == 0 else bound_cont / cost
    r_d = 1.0 if cost == 0 else bound_diag / cost
    return {
        "heuristic_cost": cost,
        "bound_cont": bound_cont,
        "bound_diag": bound_diag,
        "r_c": r_c,
        "r_d": r_d,
    }


def _bnb_cells(inst: Instance, include_plain: bool) -> dict:
    cells = _ratio_cells(inst)
    t0 = time.monotonic()
    cells["nodes_bbc"] = solve(inst, BnbConfig(bound_mode="continuous")).nodes_explored
    cells["time_bbc_s"] = time.monotonic() - t0
    t0 = time.monotonic()
    cells["nodes_bbd"] = solve(inst, BnbConfig(bound_mode="diagonal")).nodes_explored
    cells["time_bbd_s"] = time.monotonic() - t0
    if include_plain:
        cells["nodes_bb"] = solve(inst, BnbConfig(bound_mode="none")).nodes_explored
    return cells


def _format_cell(key: str, value) -> str:
    if key.startswith("time_") or key.startswith("r_"):
        return f"{value:.6f}"
    if isinstance(value, float):
        return f"{value:.6f}"
    return str(value)


def cmd_bench(args) -> int:
    spec, insts, ids = _bench_spec(args.spec)
    kappa_or_a = spec.kappa if spec.kappa is not None else spec.a
    fixed = {
        "class": spec.family,
        "n": spec.n,
        "kappa_or_a": "" if kappa_or_a is None else kappa_or_a,
    }

    def work(inst: Instance) -> dict:
        if args.mode == "ratios":
            return _ratio_cells(inst)
        return _bnb_cells(inst, args.include_plain_bb)

    sums: dict[str, float] = {}
    counts: dict[str, int] = {}
    failed: list[str] = []
    rows_written = 0
    with open(args.out, "w", encoding="utf-8", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(CSV_HEADER)
        fh.flush()
        with ThreadPoolExecutor(max_workers=_pool_size()) as pool:
            futures = [pool.submit(work, inst) for inst in insts]
            for inst_id, future in zip(ids, futures):
                try:
                    cells = future.result()
                except Exception as exc:  # per-instance isolation
                    failed.append(inst_id)
                    print(f"instance {inst_id} failed: {exc}", file=sys.stderr)
                    continue
                row = []
                for key in CSV_HEADER:
                    if key == "instance_id":
                        row.append(inst_id)
                    elif key in fixed:
                        row.append(str(fixed[key]))
                    elif key in cells:
                        row.append(_format_cell(key, cells[key]))
                        sums[key] = sums.get(key, 0.0) + float(cells[key])
                        counts[key] = counts.get(key, 0) + 1
                    else:
                        row.append("")
                writer.writerow(row)
                fh.flush()
                rows_written += 1
        if rows_written:
            summary = []
            for key in CSV_HEADER:
                if key == "instance_id":
                    summary.append("mean")
                elif key in fixed:
                    summary.append(str(fixed[key]))
                elif key in counts:
                    summary.append(_format_cell(key, sums[key] / counts[key]))
                else:
                    summary.append("")
            writer.writerow(summary)
    if failed:
        print("failed instances: " + ",".join(failed), file=sys.stderr)
    return EXIT_OK


def _verify_one(inst: Instance, inject_fault: bool) -> list[str]:
    problems = []
    brute_cost = brute_force(inst)[0]
    if inject_fault:
        brute_cost += 1
    for mode in ("none", "continuous", "diagonal"):
        report = solve(inst, BnbConfig(bound_mode=mode))
        if report.optimal_cost != brute_cost:
            problems.append(
                f"solver[{mode}] cost {report.optimal_cost} != oracle {brute_cost}"
            )
        if not report.proven_optimal:
            problems.append(f"solver[{mode}] did not prove optimality")

    diag_res = solve_relaxation(inst)
    k_star = inst.n - brute_cost
    try:
        b = eig_bounds(inst)
        k_under, k_over, ratio = b.k_under, b.k_over, b.ratio_bound
    except DegenerateRatio as exc:
        k_under, k_over, ratio = exc.k_under, exc.k_over, None
    if not (k_under <= k_star <= diag_res.k_d <= k_over):
        problems.append(
            f"sandwich violated: {k_under} <= {k_star} <= {diag_res.k_d}"
            f" <= {k_over} fails"
        )
    if ratio is not None and k_under >= 1 and k_over / k_under > ratio + 1e-12:
        problems.append(f"ratio chain violated: {k_over}/{k_under} > {ratio}")

    cont_cert = solve_dual(inst)
    cont_bound = int(math.ceil(cont_cert.objective - 1e-7))
    msg = verify_cont_certificate(inst, cont_cert.mu, cont_bound)
    if msg:
        problems.append(f"continuous certificate: {msg}")
    msg = verify_diag_certificate(inst, diag_res.certificate.d, diag_res.lower_bound)
    if msg:
        problems.append(f"diagonal certificate: {msg}")
    return problems


def cmd_verify(args) -> int:
    if args.spec:
        spec = _bench_spec(args.spec)[0]
    else:
        spec = EnsembleSpec("powerlaw_inv", 8, seed=20260816, count=1, kappa=10.0)
    if spec.n > 12:
        raise _InputError("verification is capped at n <= 12")
    if args.trials < 1:
        raise _InputError("--trials must be >= 1")
    trials = args.trials
    spec = replace(spec, count=trials)
    inject = os.environ.get("SPARSE_ELLIPSOID_INJECT_FAULT", "") == "1"
    violations = 0
    for index, inst in enumerate(generate(spec)):
        problems = _verify_one(inst, inject and index == 0)
        for message in problems:
            violations += 1
            print(f"violation on instance {index}: {message}", file=sys.stderr)
        if problems:
            print(to_json(inst), file=sys.stderr)
    print(f"{trials} trials, {violations} violations")
    return EXIT_OK if violations == 0 else EXIT_VERIFY


def cmd_gen(args) -> int:
    obj = _load_json(args.spec)
    try:
        spec = spec_from_dict(obj)
        manifest = write_ensemble(spec, args.out)
    except ValueError as exc:
        raise _InputError(f"bad ensemble spec {args.spec}: {exc}")
    except RejectionLimit as exc:
        print(f"precondition unmet: {exc}", file=sys.stderr)
        return EXIT_PRECONDITION
    print(manifest)
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="sparse-ellipsoid")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("solve", help="branch-and-bound on one instance file")
    p.add_argument("--instance", required=True)
    p.add_argument("--bound", choices=("none", "cont", "diag"), default="none")
    p.add_argument("--relax-min-dim", type=int, default=20)
    p.add_argument("--node-limit", type=int, default=None)
    p.add_argument("--time-limit", type=float, default=None)
    p.add_argument("--out", default=None)
    p.set_defaults(run=cmd_solve)

    p = sub.add_parser("relax", help="one relaxation bound plus certificate")
    p.add_argument("--instance", required=True)
    p.add_argument("--which", choices=("cont", "diag"), required=True)
    p.add_argument("--out", default=None)
    p.set_defaults(run=cmd_relax)

    p = sub.add_parser("bench", help="CSV benchmark over an ensemble")
    p.add_argument("--spec", required=True, help="ensemble spec or manifest JSON")
    p.add_argument("--mode", choices=("ratios", "bnb"), required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--include-plain-bb", action="store_true")
    p.set_defaults(run=cmd_bench)

    p = sub.add_parser("bounds", help="sandwich bound calculators")
    p.add_argument("--instance", required=True)
    p.add_argument("--which", choices=("eig", "dd", "naa", "prob"), required=True)
    p.add_argument("--scale", default=None, help="JSON vector file")
    p.add_argument("--epsilon", type=float, default=None)
    p.add_argument("--out", default=None)
    p.set_defaults(run=cmd_bounds)

    p = sub.add_parser("verify", help="invariant battery vs brute force")
    p.add_argument("--spec", default=None)
    p.add_argument("--trials", type=int, default=100)
    p.set_defaults(run=cmd_verify)

    p = sub.add_parser("gen", help="write an ensemble to disk")
    p.add_argument("--spec", required=True)
    p.add_argument("--out", required=True)
    p.set_defaults(run=cmd_gen)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
        return args.run(args)
    except _InputError as exc:
        print(f"input error: {exc}", file=sys.stderr)
        return EXIT_INPUT
    except ValueError as exc:
        print(f"input error: {exc}", file=sys.stderr)
        return EXIT_INPUT


if __name__ == "__main__":
    sys.exit(main())
