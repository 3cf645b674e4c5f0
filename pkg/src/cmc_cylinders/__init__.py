"""Constant mean curvature cylinders with umbilics from loop-group data."""

__version__ = "0.1.0"

from .loops import (
    LoopError,
    MatrixLoop,
    ScalarLoop,
    SymbolNotPositiveError,
    lambda_grid,
    matrix_spectral_factor,
    scalar_spectral_factor,
)
from .potential import (
    LaurentSpec,
    PotentialError,
    eval_Q,
    expansion_gauge,
    gauge_transform,
    kappa,
    superposition_split,
    symmetric_spec,
    validate_symmetry,
)
from .flow import (
    FlowError,
    FrameField,
    PathSpec,
    integrate,
    lambda_jet_at_one,
    monodromy_circle,
)
from .monodromy import (
    MonodromyError,
    MonodromyReport,
    analyze_monodromy,
    closing_check,
    extract_A,
    find_scale,
    fit_series_coefficient,
    p1_residue_oracle,
    trace_profile,
    weight,
    weight_preservation_check,
)
from .unitarize import (
    DiagonalUnitarizer,
    UnitarizeError,
    build_unitarizer,
)
from .iwasawa import (
    ImmersionPoint,
    IwasawaError,
    IwasawaFactors,
    iwasawa_factor,
    sym_point,
)
from .surface import (
    DomainGrid,
    SurfaceError,
    SurfaceMesh,
    build_surface,
    export_obj,
    find_umbilics,
    grid_faces,
    mean_curvature_probe,
    verify_symmetry_planes,
)
from .config import (
    ConfigError,
    DEFAULTS,
    RunConfig,
    load_config,
)

__all__ = [
    "ConfigError",
    "DEFAULTS",
    "DiagonalUnitarizer",
    "DomainGrid",
    "FlowError",
    "FrameField",
    "ImmersionPoint",
    "IwasawaError",
    "IwasawaFactors",
    "LaurentSpec",
    "LoopError",
    "MatrixLoop",
    "MonodromyError",
    "MonodromyReport",
    "PathSpec",
    "PotentialError",
    "RunConfig",
    "ScalarLoop",
    "SurfaceError",
    "SurfaceMesh",
    "SymbolNotPositiveError",
    "UnitarizeError",
    "analyze_monodromy",
    "build_surface",
    "build_unitarizer",
    "closing_check",
    "eval_Q",
    "expansion_gauge",
    "export_obj",
    "extract_A",
    "find_scale",
    "find_umbilics",
    "fit_series_coefficient",
    "gauge_transform",
    "grid_faces",
    "integrate",
    "iwasawa_factor",
    "kappa",
    "lambda_grid",
    "lambda_jet_at_one",
    "load_config",
    "matrix_spectral_factor",
    "mean_curvature_probe",
    "monodromy_circle",
    "p1_residue_oracle",
    "scalar_spectral_factor",
    "superposition_split",
    "sym_point",
    "symmetric_spec",
    "trace_profile",
    "validate_symmetry",
    "verify_symmetry_planes",
    "weight",
    "weight_preservation_check",
    "__version__",
]
