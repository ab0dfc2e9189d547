"""hessquot: verification lab and finite-difference solver for
sigma2-type Hessian operators (the quotient sigma2/sigma1 and sigma2
itself) on the k=2 Garding cone."""

from .errors import (
    ConeViolationError,
    DegenerateConstraintsError,
    DegenerateSpectrumError,
    DomainError,
    HessquotError,
    LinearSolveError,
)
from .grid import Box, GridFunction, hessian_sigmas
from .harness import (
    DoublingReport,
    ScanDiagnostics,
    ScanResult,
    TestFunctionParams,
    compare_to_baseline,
    doubling_report,
    doubling_study,
    doubling_to_csv,
    dynamic_condition_margin,
    load_baseline,
    sup_laplacian,
    test_function_scan,
)
from .lagrange import (
    ConstraintData,
    LagrangeSolution,
    closed_form_minimize,
    feasible_sample_check,
    kkt_oracle,
)
from .presets import (
    PRESET_NAMES,
    SmoothField,
    doubling_family,
    gaussian_bump_field,
    preset,
    quadratic_field,
)
from .solver import (
    ProblemSpec,
    SolveReport,
    SolverConfig,
    convergence_study,
    manufacture,
    newton_solve,
)
from .inequalities import (
    CheckReport,
    ConcavityGain,
    concavity_gain,
    concavity_quadratic,
    grad_bounds_margins,
    grad_floor_margin,
    reports_to_csv,
    run_suite,
    semiconvexity_constant,
    tail_trace_bound_margin,
)
from .symmetric import (
    OperatorKind,
    QuotientEval,
    Spectrum,
    cone_contains,
    elementary_symmetric,
    matrix_derivative,
    quotient_eval,
    sample_gamma2,
    sample_gamma2_array,
    sigma_without,
)

__version__ = "0.1.0"

__all__ = [
    "Box",
    "CheckReport",
    "ConcavityGain",
    "ConeViolationError",
    "ConstraintData",
    "DegenerateConstraintsError",
    "DegenerateSpectrumError",
    "DomainError",
    "DoublingReport",
    "GridFunction",
    "HessquotError",
    "LagrangeSolution",
    "LinearSolveError",
    "OperatorKind",
    "PRESET_NAMES",
    "ProblemSpec",
    "QuotientEval",
    "ScanDiagnostics",
    "ScanResult",
    "SmoothField",
    "SolveReport",
    "SolverConfig",
    "Spectrum",
    "TestFunctionParams",
    "__version__",
    "closed_form_minimize",
    "compare_to_baseline",
    "concavity_gain",
    "concavity_quadratic",
    "cone_contains",
    "convergence_study",
    "doubling_family",
    "doubling_report",
    "doubling_study",
    "doubling_to_csv",
    "dynamic_condition_margin",
    "elementary_symmetric",
    "feasible_sample_check",
    "gaussian_bump_field",
    "grad_bounds_margins",
    "grad_floor_margin",
    "hessian_sigmas",
    "kkt_oracle",
    "load_baseline",
    "manufacture",
    "matrix_derivative",
    "newton_solve",
    "preset",
    "quadratic_field",
    "quotient_eval",
    "reports_to_csv",
    "run_suite",
    "sample_gamma2",
    "sample_gamma2_array",
    "semiconvexity_constant",
    "sigma_without",
    "sup_laplacian",
    "tail_trace_bound_margin",
    "test_function_scan",
]
