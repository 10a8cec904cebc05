"""Exact branch-and-bound search, greedy incumbent heuristic, brute force.

Nodes are restrictions (z fixed zero, u committed nonzero). Processing a
node re-derives its reduced instance, iterates the margin test to force
further variables, refreshes the incumbent with the backward greedy
heuristic, optionally tightens the node bound with one of the two
relaxations, and branches on the free index with the smallest single-zero
margin. The frontier is best-node: smallest lower bound first, deeper
nodes preferred on ties, FIFO after that.

Three configurations matter in practice: bound_mode "none" (pure margins),
"continuous", and "diagonal". By default a relaxation is solved only after
a zero-branch and only when the free dimension is at least relax_min_dim;
the root always gets one so that exactly-solvable instances close in one
node.
"""

from __future__ import annotations

import heapq
import time
from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from . import _kernels as _k
from . import cont_relax, diag_relax
from .instance import Infeasible, Instance, Subproblem, reduce, single_zero_margins

__all__ = [
    "BnbConfig",
    "Node",
    "BnbReport",
    "LimitReached",
    "DimensionTooLarge",
    "backward_greedy",
    "branch_variable",
    "solve",
    "brute_force",
]

_BOUND_MODES = ("none", "continuous", "diagonal")


class DimensionTooLarge(Exception):
    """brute_force refuses instances beyond the enumeration budget."""


@dataclass(frozen=True)
class BnbConfig:
    bound_mode: str = "none"
    relax_min_dim: int = 20
    node_limit: Optional[int] = None
    time_limit: Optional[float] = None
    relax_on_zero_branch_only: bool = True

    def __post_init__(self):
        if self.bound_mode not in _BOUND_MODES:
            raise ValueError(f"bound_mode must be one of {_BOUND_MODES}")
        if self.relax_min_dim < 1:
            raise ValueError("relax_min_dim must be >= 1")


@dataclass(frozen=True)
class Node:
    z: np.ndarray
    u: np.ndarray
    lower_bound: int
    depth: int
    from_zero_branch: bool = False


@dataclass(frozen=True)
class BnbReport:
    optimal_cost: int
    support: np.ndarray
    nodes_explored: int
    relaxations_solved: int
    incumbent_history: tuple
    proven_optimal: bool


class LimitReached(Exception):
    """Node or time budget exhausted; report holds the best incumbent and
    frontier_bound the smallest open lower bound (the optimality gap)."""

    def __init__(self, message: str, report: BnbReport, frontier_bound: int):
        super().__init__(message)
        self.report = report
        self.frontier_bound = frontier_bound


def backward_greedy(inst: Instance) -> tuple[int, np.ndarray, np.ndarray]:
    """Grow a zero set greedily: always add the index whose zero keeps the
    constraint minimum smallest, while it stays within gamma.

    Returns (cost, zero_set, x) with x the constraint minimizer given the
    final zero set; cost = N - |zero_set| is always a valid upper bound.
    """
    n = inst.n
    mask = np.asarray(
        _k.greedy_backward_mask(inst.q_inv.entries, inst.c, inst.gamma), dtype=bool
    )
    z = np.flatnonzero(mask).astype(np.int64)
    y = np.flatnonzero(~mask).astype(np.int64)
    x = np.zeros(n)
    if z.size and y.size:
        qyy = inst.q.submatrix(y, y)
        x[y] = inst.c[y] + np.linalg.solve(qyy, inst.q.submatrix(y, z) @ inst.c[z])
    elif y.size:
        x[y] = inst.c[y]
    return n - int(z.size), z, x


def branch_variable(sub: Subproblem) -> int:
    """Free index with the smallest single-zero margin on the reduced
    instance (ties toward the lowest index); returned in parent indexing."""
    if sub.reduced is None or sub.f.size == 0:
        raise ValueError("no free variables to branch on")
    margins = single_zero_margins(sub.reduced).margins
    return int(sub.f[int(np.argmin(margins))])


def _reduce_forcing(inst: Instance, z: np.ndarray, u: np.ndarray) -> Subproblem:
    # reduce, then iterate the margin test until no new variable is forced
    while True:
        sub = reduce(inst, z, u)
        if sub.reduced is None:
            return sub
        forced = single_zero_margins(sub.reduced).forced_nonzero
        if forced.size == 0:
            return sub
        u = np.sort(np.concatenate([u, sub.f[forced]]))


def _relax_bound(reduced: Instance, mode: str) -> int:
    if mode == "continuous":
        return cont_relax.lower_bound(reduced)
    return diag_relax.solve_relaxation(reduced).lower_bound


def solve(inst: Instance, cfg: BnbConfig = BnbConfig()) -> BnbReport:
    """Exact minimum cardinality by best-node branch-and-bound.

    Raises LimitReached when cfg.node_limit or cfg.time_limit trips; the
    exception carries the best incumbent report and the smallest lower
    bound still open.
    """
    t0 = time.monotonic()
    n = inst.n
    empty = np.zeros(0, dtype=np.int64)

    incumbent_cost = n + 1
    incumbent_support: np.ndarray = np.arange(n, dtype=np.int64)
    history: list[tuple[int, int]] = []
    nodes_explored = 0
    relaxations_solved = 0

    frontier: list = []
    seq = 0
    heapq.heappush(frontier, (0, 0, seq, Node(empty, empty, 0, 0)))

    def note_incumbent(cost: int, support: np.ndarray):
        nonlocal incumbent_cost, incumbent_support
        if cost < incumbent_cost:
            incumbent_cost = cost
            incumbent_support = np.sort(support).astype(np.int64)
            history.append((nodes_explored, cost))

    def make_report(proven: bool) -> BnbReport:
        return BnbReport(
            optimal_cost=int(incumbent_cost),
            support=incumbent_support,
            nodes_explored=nodes_explored,
            relaxations_solved=relaxations_solved,
            incumbent_history=tuple(history),
            proven_optimal=proven,
        )

    while frontier:
        lb_key, _, _, node = heapq.heappop(frontier)
        if lb_key >= incumbent_cost:
            continue  # superseded by a better incumbent since insertion

        if cfg.node_limit is not None and nodes_explored >= cfg.node_limit:
            open_bounds = [lb_key] + [e[0] for e in frontier]
            raise LimitReached("node limit", make_report(False), int(min(open_bounds)))
        if cfg.time_limit is not None and time.monotonic() - t0 > cfg.time_limit:
            open_bounds = [lb_key] + [e[0] for e in frontier]
            raise LimitReached("time limit", make_report(False), int(min(open_bounds)))
        nodes_explored += 1

        try:
            sub = _reduce_forcing(inst, node.z, node.u)
        except Infeasible:
            continue
        base = sub.base_cost

        if sub.reduced is None:
            note_incumbent(base, sub.u)
            continue

        bound = max(node.lower_bound, base)
        if bound >= incumbent_cost:
            continue

        # incumbent refresh
        g_cost, g_zero, _g_x = backward_greedy(sub.reduced)
        g_support_f = np.setdiff1d(sub.f, sub.f[g_zero])
        note_incumbent(base + g_cost, np.concatenate([sub.u, g_support_f]))
        if bound >= incumbent_cost:
            continue

        if cfg.bound_mode != "none":
            at_root = nodes_explored == 1
            policy = sub.f.size >= cfg.relax_min_dim and (
                node.from_zero_branch or not cfg.relax_on_zero_branch_only
            )
            if at_root or policy:
                relaxations_solved += 1
                bound = max(bound, base + _relax_bound(sub.reduced, cfg.bound_mode))
                if bound >= incumbent_cost:
                    continue

        b = branch_variable(sub)
        seq += 1
        child_zero = Node(
            z=np.sort(np.append(node.z, b)),
            u=sub.u,
            lower_bound=bound,
            depth=node.depth + 1,
            from_zero_branch=True,
        )
        heapq.heappush(frontier, (bound, -child_zero.depth, seq, child_zero))
        seq += 1
        nz_bound = max(bound, base + 1)
        child_nonzero = Node(
            z=node.z,
            u=np.sort(np.append(sub.u, b)),
            lower_bound=nz_bound,
            depth=node.depth + 1,
            from_zero_branch=False,
        )
        heapq.heappush(frontier, (nz_bound, -child_nonzero.depth, seq, child_nonzero))

    return make_report(True)


def brute_force(inst: Instance) -> tuple[int, np.ndarray]:
    """Exact optimum by decreasing-size zero-set enumeration; N <= 20."""
    if inst.n > 20:
        raise DimensionTooLarge(f"n = {inst.n} exceeds the enumeration cap of 20")
    k, zidx = _k.brute_force_max_zeros(inst.q_inv.entries, inst.c, inst.gamma)
    support = np.setdiff1d(np.arange(inst.n, dtype=np.int64), zidx)
    return inst.n - int(k), support
