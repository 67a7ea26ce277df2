"""Drawstring metrics toolkit.

Numerically constructs rotationally symmetric warped-product metrics on
solid cylinders and tori that shorten a core circle while certifying a
scalar-curvature lower bound, plus growth-model demonstrations of the
entropy-increase mechanism behind such constructions.
"""

from .errors import (
    DomainError,
    DrawstringError,
    EnumerationBudgetError,
    FdOracleUnresolvedError,
    GridError,
    MalformedProfileError,
    QuadratureError,
    ShootingError,
    SmoothingError,
)
from .piecewise import ExprSegment, LogSplineSegment, PiecewiseC2Function, SplineSegment
from .warped import (
    CurvatureReport,
    WarpedProfile,
    curvature_scan,
    hyperbolic_profile,
    measure_profile,
    product_profile,
    scalar_curvature,
    scalar_curvature_samples,
)
from .fd_oracle import fd_scalar_curvature_oracle
from .smoothing import SmoothingConfig, flatten_u, mollify_f
from .drawstring_core import (
    DrawstringResult,
    DrawstringSpec,
    build_product_drawstring,
    verify_drawstring_contract,
)
from .gluing import GlueParams, assemble_glued_profile, forge, select_parameters, verify_glued_conditions
from .tube import (
    DistanceReport,
    TubeModel,
    build_tube_metrics,
    project_to_core,
    tube_distance,
    verify_squeeze_claims,
)
from .entropy import GrowthModel, ball_growth_bfs, compare_entropy, growth_rate_transfer
from .io import export_profile, load_profile, write_json_report

__version__ = "0.1.0"
