"""Instance ensembles for experiments.

Three random families (eigenvalue spectra drawn from power-law or uniform
densities under a Haar-random basis, and sparse random couplings with unit
diagonal) plus four constructed families realizing the extreme and
tightness cases of the relaxation analysis. Every generated instance uses
gamma = 1 and a center strictly inside the feasibility box, so no variable
is forced nonzero a priori.
"""

from __future__ import annotations

import json
import os
from dataclasses import dataclass
from typing import Optional

import numpy as np

from .instance import Instance, single_zero_margins, to_json
from .linalg import NotPD, SymMatrix, cholesky, inverse

__all__ = [
    "RNG_ID",
    "RejectionLimit",
    "EnsembleSpec",
    "random_orthogonal",
    "generate",
    "write_ensemble",
    "spec_to_dict",
    "spec_from_dict",
]

# All randomness flows through numpy's default 64-bit-seedable generator.
RNG_ID = "numpy-pcg64"

_EIG_FAMILIES = ("powerlaw_inv", "uniform", "powerlaw_inv_sq")
_CONSTRUCTED = ("best_case_cont", "worst_case_cont", "tight_eig", "tight_dd")
_FAMILIES = _EIG_FAMILIES + ("offdiag_uniform",) + _CONSTRUCTED


class RejectionLimit(Exception):
    """Positive-definite resampling failed 1000 times in a row."""


@dataclass(frozen=True)
class EnsembleSpec:
    """What to generate: family name, size, seed, count, and the family's
    shape parameter (kappa for the eigenvalue families, a for
    offdiag_uniform)."""

    family: str
    n: int
    seed: int
    count: int
    kappa: Optional[float] = None
    a: Optional[float] = None

    def __post_init__(self) -> None:
        if self.family not in _FAMILIES:
            raise ValueError(f"unknown ensemble family {self.family!r}")
        if self.n < 2:
            raise ValueError("n must be at least 2")
        if self.family == "tight_eig" and self.n < 5:
            raise ValueError("tight_eig requires n >= 5")
        if not 0 <= self.seed < 2**64:
            raise ValueError("seed must fit in 64 bits")
        if self.count < 0:
            raise ValueError("count must be nonnegative")
        if self.family in _EIG_FAMILIES:
            if self.kappa is None:
                raise ValueError(f"{self.family} requires kappa")
            if not np.isfinite(self.kappa) or self.kappa < 1.0:
                raise ValueError("kappa must be a finite real >= 1")
        if self.family == "offdiag_uniform":
            if self.a is None:
                raise ValueError("offdiag_uniform requires a")
            if not 0.0 < self.a < 0.85:
                raise ValueError("a must lie in (0, 0.85)")


def spec_to_dict(spec: EnsembleSpec) -> dict:
    out = {
        "class": spec.family,
        "n": spec.n,
        "seed": spec.seed,
        "count": spec.count,
    }
    if spec.kappa is not None:
        out["kappa"] = spec.kappa
    if spec.a is not None:
        out["a"] = spec.a
    return out


def spec_from_dict(obj: dict) -> EnsembleSpec:
    if not isinstance(obj, dict):
        raise ValueError("ensemble spec must be a JSON object")
    for key in ("class", "n", "seed", "count"):
        if key not in obj:
            raise ValueError(f"ensemble spec missing key {key!r}")
    return EnsembleSpec(
        family=str(obj["class"]),
        n=int(obj["n"]),
        seed=int(obj["seed"]),
        count=int(obj["count"]),
        kappa=None if obj.get("kappa") is None else float(obj["kappa"]),
        a=None if obj.get("a") is None else float(obj["a"]),
    )


def random_orthogonal(n: int, rng) -> np.ndarray:
    """Haar-distributed orthogonal matrix: QR of an i.i.d. standard-normal
    matrix with R's diagonal signs folded in so they are all positive."""
    if n < 1:
        raise ValueError("n must be at least 1")
    basis, r = np.linalg.qr(rng.standard_normal((n, n)))
    flip = np.where(np.diag(r) < 0.0, -1.0, 1.0)
    return basis * flip[None, :]


def _sample_eigenvalues(family: str, n: int, kappa: float, rng) -> np.ndarray:
    # densities on [1, kappa]; u in [0, 1)
    u = rng.random(n)
    if family == "powerlaw_inv":
        lam = np.exp(u * np.log(kappa))
    elif family == "powerlaw_inv_sq":
        lam = kappa / (kappa - u * (kappa - 1.0))
    else:
        lam = 1.0 + u * (kappa - 1.0)
    # replace the extreme draws so the condition number is exact
    lam[int(np.argmin(lam))] = 1.0
    lam[int(np.argmax(lam))] = kappa
    return lam


def _sample_center(rng, q: SymMatrix) -> np.ndarray:
    # strictly inside +-sqrt((Q^-1)_nn): endpoint draws are resampled
    half = np.sqrt(np.diag(inverse(q).entries))
    frac = rng.uniform(-1.0, 1.0, size=q.n)
    while True:
        at_edge = np.flatnonzero((frac <= -1.0) | (frac >= 1.0))
        if at_edge.size == 0:
            break
        frac[at_edge] = rng.uniform(-1.0, 1.0, size=at_edge.size)
    return frac * half


def _offdiag_matrix(n: int, a: float, rng) -> SymMatrix:
    rows, cols = np.triu_indices(n, k=1)
    for _ in range(1000):
        q = np.eye(n)
        vals = rng.uniform(-a, a, size=rows.size) / np.sqrt(n)
        q[rows, cols] = vals
        q[cols, rows] = vals
        sym = SymMatrix(q)
        try:
            cholesky(sym)
        except NotPD:
            continue
        return sym
    raise RejectionLimit(f"no positive definite draw in 1000 tries (a={a})")


def _mixed_sign_unit(n: int) -> np.ndarray:
    v = np.full(n, -1.0 / np.sqrt(n))
    v[: (n + 1) // 2] = 1.0 / np.sqrt(n)
    return v


def _constructed(family: str, n: int) -> Instance:
    if family == "best_case_cont":
        lam1, lam2 = 1.0 / n, float(n)
        v = _mixed_sign_unit(n)
    elif family == "worst_case_cont":
        lam1, lam2 = 1.0 / (n - 1), (n - 1) / 2.0
        v = np.full(n, 1.0 / np.sqrt(n))
    elif family == "tight_eig":
        lam1 = 1.0 / n
        lam2 = 1.0 / (2 * ((n + 1) // 2) - int(np.sqrt(n)) - 1)
        v = _mixed_sign_unit(n)
    else:
        lam1 = 1.0 / n
        lam2 = 1.0 / n + 1.0 / ((n - 1) * (2 * n - 3))
        v = _mixed_sign_unit(n)
    q = lam2 * np.eye(n) - (lam2 - lam1) * np.outer(v, v)
    inst = Instance(SymMatrix(q), np.ones(n), 1.0)
    forced = single_zero_margins(inst).forced_nonzero
    if forced.size:
        raise AssertionError(f"{family} n={n} forces indices {forced.tolist()}")
    return inst


def _one(spec: EnsembleSpec, rng) -> Instance:
    if spec.family in _CONSTRUCTED:
        return _constructed(spec.family, spec.n)
    if spec.family == "offdiag_uniform":
        q = _offdiag_matrix(spec.n, spec.a, rng)
    else:
        lam = _sample_eigenvalues(spec.family, spec.n, spec.kappa, rng)
        basis = random_orthogonal(spec.n, rng)
        q = SymMatrix((basis * lam[None, :]) @ basis.T)
    return Instance(q, _sample_center(rng, q), 1.0)


def generate(spec: EnsembleSpec) -> list[Instance]:
    """Materialize spec.count instances. Deterministic in the spec: one
    generator seeded with spec.seed streams through all draws in order."""
    rng = np.random.default_rng(spec.seed)
    return [_one(spec, rng) for _ in range(spec.count)]


def write_ensemble(spec: EnsembleSpec, out_dir: str) -> str:
    """Write one JSON file per instance plus manifest.json; returns the
    manifest path."""
    os.makedirs(out_dir, exist_ok=True)
    names = []
    for i, inst in enumerate(generate(spec)):
        name = f"{spec.family}_n{spec.n}_s{spec.seed}_{i:04d}.json"
        with open(os.path.join(out_dir, name), "w", encoding="utf-8") as fh:
            fh.write(to_json(inst))
        names.append(name)
    manifest = {"spec": spec_to_dict(spec), "rng": RNG_ID, "files": names}
    if spec.family in _EIG_FAMILIES:
        # convention note: support of the spectral densities before pinning
        manifest["eigenvalue_support"] = "[1, kappa], extreme draws pinned"
    path = os.path.join(out_dir, "manifest.json")
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(manifest, fh, indent=1)
        fh.write("\n")
    return path
