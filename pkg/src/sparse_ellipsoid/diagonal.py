"""Exact solver for diagonal matrices.

With Q = diag(d) the constraint separates per coordinate: zeroing index n
costs d_n c_n² of budget, so the best zero set of size K is the K smallest
such products and the optimum reduces to a prefix-sum scan.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import _kernels as _k

__all__ = ["DiagInstance", "sum_k_smallest", "solve_diagonal"]


@dataclass(frozen=True)
class DiagInstance:
    d: np.ndarray
    c: np.ndarray
    gamma: float

    def __post_init__(self):
        d = np.asarray(self.d, dtype=np.float64).ravel()
        c = np.asarray(self.c, dtype=np.float64).ravel()
        if d.size < 1 or d.size != c.size:
            raise ValueError("d and c must be same nonzero length")
        if not (np.isfinite(d).all() and np.isfinite(c).all()):
            raise ValueError("entries must be finite")
        if not (d > 0.0).all():
            raise ValueError("diagonal must be strictly positive")
        g = float(self.gamma)
        if not np.isfinite(g) or g <= 0.0:
            raise ValueError("gamma must be positive and finite")
        object.__setattr__(self, "d", d)
        object.__setattr__(self, "c", c)
        object.__setattr__(self, "gamma", g)

    @property
    def n(self) -> int:
        return self.d.size


def sum_k_smallest(values, k: int) -> float:
    """Sum of the k smallest entries; the empty sum is 0."""
    arr = np.asarray(values, dtype=np.float64).ravel()
    if not 0 <= k <= arr.size:
        raise ValueError("k out of range")
    return float(_k.sum_k_smallest_kernel(arr, k))


def solve_diagonal(di: DiagInstance) -> tuple[int, int, np.ndarray]:
    """Exact optimum for a diagonal instance.

    Returns (min_cardinality, max_zeros, zero_set): max_zeros is the largest
    K with the K smallest products d_n c_n² summing to <= gamma, and the
    zero set collects those K indices (ties resolved toward lower indices).
    """
    products = di.d * di.c**2
    order = np.argsort(products, kind="stable")
    k = 0
    total = 0.0
    for idx in order:
        if total + products[idx] > di.gamma:
            break
        total += products[idx]
        k += 1
    zero_set = np.sort(order[:k]).astype(np.int64)
    return di.n - k, k, zero_set
