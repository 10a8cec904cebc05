"""Cardinality minimization inside a positive-definite ellipsoid.

Exact branch-and-bound, continuous and diagonal relaxations, and
closed-form approximation-ratio calculators for

    min ||x||_0  subject to  (x - c)ᵀ Q (x - c) <= gamma,  Q positive definite.
"""

from .bnb import (
    BnbConfig,
    BnbReport,
    DimensionTooLarge,
    LimitReached,
    backward_greedy,
    branch_variable,
    brute_force,
    solve,
)
from .bounds import (
    AlignmentCertificate,
    AlignmentTooWeak,
    DegenerateRatio,
    NotDiagonallyDominant,
    OrderingBounds,
    ProbBoundReport,
    alignment_certificate,
    default_ordering,
    diag_dom_bounds,
    eig_bounds,
    near_aligned_bounds,
    prob_bound,
)
from .cont_relax import (
    BoxConstants,
    DegenerateBox,
    DualCertificate,
    InfeasiblePoint,
    box_constants,
    lower_bound,
    primal_value,
    prop1_upper_bound,
    solve_dual,
)
from .diag_relax import (
    DiagonalCertificate,
    DiagRelaxResult,
    solve_e_d,
    solve_relaxation,
)
from .diagonal import DiagInstance, solve_diagonal, sum_k_smallest
from .generators import (
    RNG_ID,
    EnsembleSpec,
    RejectionLimit,
    generate,
    random_orthogonal,
    write_ensemble,
)
from .instance import (
    Infeasible,
    Instance,
    MarginReport,
    Subproblem,
    from_json,
    preprocess,
    reduce,
    single_zero_margins,
    to_json,
    zero_set_feasible,
)
from .linalg import (
    EigenDecomp,
    NoConvergence,
    NotPD,
    SymMatrix,
    cholesky,
    eig_sym,
    inverse,
    schur_complement,
)

__version__ = "0.1.0"

__all__ = [
    "AlignmentCertificate",
    "AlignmentTooWeak",
    "BnbConfig",
    "BnbReport",
    "BoxConstants",
    "DegenerateBox",
    "DegenerateRatio",
    "DiagInstance",
    "DiagonalCertificate",
    "DiagRelaxResult",
    "DimensionTooLarge",
    "DualCertificate",
    "EigenDecomp",
    "EnsembleSpec",
    "Infeasible",
    "InfeasiblePoint",
    "Instance",
    "LimitReached",
    "MarginReport",
    "NoConvergence",
    "NotDiagonallyDominant",
    "NotPD",
    "OrderingBounds",
    "ProbBoundReport",
    "RNG_ID",
    "RejectionLimit",
    "Subproblem",
    "SymMatrix",
    "alignment_certificate",
    "backward_greedy",
    "box_constants",
    "branch_variable",
    "brute_force",
    "cholesky",
    "default_ordering",
    "diag_dom_bounds",
    "eig_bounds",
    "eig_sym",
    "from_json",
    "generate",
    "inverse",
    "lower_bound",
    "near_aligned_bounds",
    "preprocess",
    "primal_value",
    "prob_bound",
    "prop1_upper_bound",
    "random_orthogonal",
    "reduce",
    "schur_complement",
    "single_zero_margins",
    "solve",
    "solve_diagonal",
    "solve_dual",
    "solve_e_d",
    "solve_relaxation",
    "sum_k_smallest",
    "to_json",
    "write_ensemble",
    "zero_set_feasible",
    "__version__",
]
