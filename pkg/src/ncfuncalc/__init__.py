"""Noncommutative function calculus on tuples of square complex matrices.

Evaluate free polynomials, truncated power series, and transfer-function
realizations at every matrix dimension; take higher directional derivatives
through block-bidiagonal jets; extract Taylor expansions at the scalar
point 0; and verify the structural properties (gradedness, direct sums,
intertwining, symmetry) that characterize such functions.
"""

from .freepoly import FreePoly, Word, variables
from .linalg import (
    BlockLayout,
    MatrixTuple,
    NonConvergenceError,
    SingularMatrixError,
    bidiagonal_block,
    direct_sum,
    extract_block,
    inverse,
    kron,
    matmul,
    operator_norm,
)
from .ncderiv import (
    DeltaResult,
    JetResult,
    StructureViolationError,
    delta_k,
    dk_diag,
    dk_fd,
    dk_multilinear,
    jet1,
)
from .ncfun import (
    DomainDescriptor,
    DomainViolationError,
    NCFunctionHandle,
    SeriesFunction,
    from_poly,
    from_realization,
    from_series,
)
from .realization import (
    NotIsometricError,
    PolyMatrix,
    Realization,
    ResolventSingularError,
    SamplerStarvationError,
    ScanReport,
    check_isometry,
    contractivity_scan,
    delta_polydisk,
    delta_rowball,
    eval_delta,
    eval_realization,
    identity_realization,
    in_ball,
    in_exhaustion,
    mobius_realization,
)
from .taylor import (
    ExtractionError,
    NonScalarResultError,
    TaylorExpansion,
    circle_norm_estimate,
    tail_bound,
    taylor_expand,
    word_coefficient,
)
from .verify import (
    CONTROL_NAMES,
    NonLinearInputError,
    PreconditionViolationError,
    PropertyReport,
    SuiteConfig,
    check_delta_structure,
    check_direct_sum,
    check_intertwining,
    check_symmetry,
    check_unipotent_converse,
    control_handle,
    recover_klinear,
    run_suite,
    stack_tuples,
)

__version__ = "0.1.0"

__all__ = [
    "__version__",
    "FreePoly",
    "Word",
    "variables",
    "BlockLayout",
    "MatrixTuple",
    "NonConvergenceError",
    "SingularMatrixError",
    "bidiagonal_block",
    "direct_sum",
    "extract_block",
    "inverse",
    "kron",
    "matmul",
    "operator_norm",
    "DeltaResult",
    "JetResult",
    "StructureViolationError",
    "delta_k",
    "dk_diag",
    "dk_fd",
    "dk_multilinear",
    "jet1",
    "DomainDescriptor",
    "DomainViolationError",
    "NCFunctionHandle",
    "SeriesFunction",
    "from_poly",
    "from_realization",
    "from_series",
    "NotIsometricError",
    "PolyMatrix",
    "Realization",
    "ResolventSingularError",
    "SamplerStarvationError",
    "ScanReport",
    "check_isometry",
    "contractivity_scan",
    "delta_polydisk",
    "delta_rowball",
    "eval_delta",
    "eval_realization",
    "identity_realization",
    "in_ball",
    "in_exhaustion",
    "mobius_realization",
    "ExtractionError",
    "NonScalarResultError",
    "TaylorExpansion",
    "circle_norm_estimate",
    "tail_bound",
    "taylor_expand",
    "word_coefficient",
    "CONTROL_NAMES",
    "NonLinearInputError",
    "PreconditionViolationError",
    "PropertyReport",
    "SuiteConfig",
    "check_delta_structure",
    "check_direct_sum",
    "check_intertwining",
    "check_symmetry",
    "check_unipotent_converse",
    "control_handle",
    "recover_klinear",
    "run_suite",
    "stack_tuples",
]
