"""Term-based convex variational optimization.

Declare primal variables on cartesian grids, attach functional terms, and
let the engine dualize operator-bearing terms, derive diagonal step sizes
and solve the resulting saddle-point problem with a first-order
primal-dual iteration.
"""

from .linalg import (
    GridDims,
    SparseOp,
    devectorize,
    hstack,
    kron,
    vectorize,
    vstack,
)
from .operators import (
    build_curl2d,
    build_diagonal,
    build_divergence,
    build_gradient,
    build_identity,
    build_partial,
)
from .problem import Problem
from .solver import (
    DivergenceError,
    ResidualReport,
    RunSummary,
    SolverState,
    StopConfig,
    compute_residual,
    compute_step_sizes,
    iterate_once,
    resume,
    run,
)
from .terms import (
    ProxKind,
    Term,
    eval_energy,
    make_data_term,
    make_gradient_term,
    make_identity_term,
    make_labeling_term,
    make_operator_term,
    make_optical_flow_term,
    make_vectorfield_term,
)

__version__ = "0.1.0"

__all__ = [
    "GridDims",
    "SparseOp",
    "vectorize",
    "devectorize",
    "kron",
    "vstack",
    "hstack",
    "build_identity",
    "build_diagonal",
    "build_partial",
    "build_gradient",
    "build_divergence",
    "build_curl2d",
    "ProxKind",
    "Term",
    "make_data_term",
    "make_gradient_term",
    "make_operator_term",
    "make_optical_flow_term",
    "make_labeling_term",
    "make_vectorfield_term",
    "make_identity_term",
    "eval_energy",
    "Problem",
    "StopConfig",
    "ResidualReport",
    "RunSummary",
    "SolverState",
    "DivergenceError",
    "compute_step_sizes",
    "iterate_once",
    "compute_residual",
    "run",
    "resume",
    "__version__",
]
