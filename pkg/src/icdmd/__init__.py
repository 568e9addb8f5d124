"""Invariant-consistent fitting of linear Koopman surrogate models.

Fit the least-squares dictionary model A subject to exact equality
constraints (AD = G+, E^T A = F+^T) that encode known fixed points, limit
cycles, eigenfunctions, or delay structure; then extract the induced
eigenfunctions at eigenvalue 1 whose level sets estimate invariant sets.
"""

from ._threads import apply_thread_cap as _apply_thread_cap

_apply_thread_cap()  # must run before numpy first loads its BLAS

from .constraints import (  # noqa: E402
    FIXED_POINT,
    LIMIT_CYCLE,
    ConstraintSet,
    InvariantTag,
    ValidationReport,
    drop_duplicate_columns,
    empty_constraints,
    from_eigenfunction,
    from_fixed_points,
    from_limit_cycle,
    ho_dmd_constraints,
    merge,
    merge_all,
    require_valid,
    validate,
)
from .dictionary import (  # noqa: E402
    Dictionary,
    indicator_dictionary,
    trig_dictionary,
)
from .dynamics import (  # noqa: E402
    DataMatrices,
    OdeSystem,
    SamplingPlan,
    build_data_matrices,
    builtin,
    builtin_names,
    flow,
    periodic_orbit,
    sample_grid,
)
from .errors import (  # noqa: E402
    ConfigError,
    ConstraintError,
    DimensionError,
    DomainError,
    IcdmdError,
    SolverError,
    SpectralError,
    UnsupportedError,
)
from .kkt import kkt_oracle  # noqa: E402
from .linalg import (  # noqa: E402
    DEFAULT_TOL,
    RankTolerance,
    matrix_rank,
    min_norm_right_lstsq,
    orthonormal_complement_basis,
    pseudo_inverse,
)
from .pipeline import (  # noqa: E402
    ExperimentConfig,
    ExperimentResult,
    InvarianceDiagnostics,
    ModelRecord,
    RegionClassification,
    classify_regions,
    export_result,
    group_by_label,
    invariance_score,
    preset_config,
    run_experiment,
)
from .solver import (  # noqa: E402
    AffineModel,
    ICDMDModel,
    compute_c0,
    frobenius_objective,
    solve_affine,
    solve_edmd,
    solve_icdmd,
)
from .spectral import (  # noqa: E402
    EigenfunctionSet,
    Equalizer,
    build_equalizer,
    edmd_nearest_span_fit,
    evaluate_eigenfunctions,
    induced_eigenfunctions,
)

__version__ = "0.1.0"

__all__ = [
    "AffineModel",
    "ConfigError",
    "ConstraintError",
    "ConstraintSet",
    "DEFAULT_TOL",
    "DataMatrices",
    "Dictionary",
    "DimensionError",
    "DomainError",
    "EigenfunctionSet",
    "Equalizer",
    "ExperimentConfig",
    "ExperimentResult",
    "FIXED_POINT",
    "ICDMDModel",
    "IcdmdError",
    "InvarianceDiagnostics",
    "InvariantTag",
    "LIMIT_CYCLE",
    "ModelRecord",
    "OdeSystem",
    "RankTolerance",
    "RegionClassification",
    "SamplingPlan",
    "SolverError",
    "SpectralError",
    "UnsupportedError",
    "ValidationReport",
    "build_data_matrices",
    "build_equalizer",
    "builtin",
    "builtin_names",
    "classify_regions",
    "compute_c0",
    "drop_duplicate_columns",
    "edmd_nearest_span_fit",
    "empty_constraints",
    "evaluate_eigenfunctions",
    "export_result",
    "flow",
    "frobenius_objective",
    "from_eigenfunction",
    "from_fixed_points",
    "from_limit_cycle",
    "group_by_label",
    "ho_dmd_constraints",
    "indicator_dictionary",
    "induced_eigenfunctions",
    "invariance_score",
    "kkt_oracle",
    "matrix_rank",
    "merge",
    "merge_all",
    "min_norm_right_lstsq",
    "orthonormal_complement_basis",
    "periodic_orbit",
    "preset_config",
    "pseudo_inverse",
    "require_valid",
    "run_experiment",
    "sample_grid",
    "solve_affine",
    "solve_edmd",
    "solve_icdmd",
    "trig_dictionary",
    "validate",
]
