"""Sparse sensor placement toolkit.

Selects near-optimal measurement locations from high-dimensional snapshot
data — unconstrained, cost-weighted, spatially constrained, or prior-driven
— reconstructs full fields from sparse noisy readings, and quantifies the
noise-induced uncertainty of the reconstruction.
"""

from .basis import (
    BasisModes,
    GaussianPrior,
    decreasing_prior,
    fit_custom,
    fit_identity,
    fit_random_projection,
    fit_svd,
    flat_prior,
)
from .constraints import (
    Circle,
    ConstraintSpec,
    Cylinder,
    Ellipse,
    ExpressionRegion,
    ImageGrid,
    Line,
    Parabola,
    PointCloud,
    Polygon,
    get_constraint_indices,
    parse_constraint_expression,
)
from .errors import (
    ConfigError,
    CurvePointError,
    DegeneratePrior,
    InfeasibleConstraint,
    InvalidCount,
    InvalidInput,
    InvalidMeasurement,
    InvalidPoint,
    InvalidRank,
    NotFitted,
    NotPositiveDefinite,
    ParseError,
    RankDeficiencyWarning,
    RankDeficientBasis,
    SenseplaceError,
    UnknownVariable,
)
from .numerics import PivotTrace, SvdResult, pseudoinverse, qr_pivot_greedy, spd_solve, svd_truncated
from .optimizers import (
    PairEnergies,
    SensorSelection,
    ccqr_select,
    exact_objective,
    gqr_select,
    one_point_energies,
    pair_energies,
    qr_select,
    tpgr_select,
)
from .pipeline import RmseCurve, SensorModel, fit_basis, resolve_prior, rmse_curve
from .reconstruct import (
    Reconstruction,
    ReconstructionMatrix,
    build_ls,
    build_rls,
    predict,
    reconstruct_states,
    score_rmse,
)
from .synthetic import smooth_field_snapshots
from .uq import one_pt_energy_landscape, two_pt_energy_landscape, uncertainty_heatmap

__version__ = "0.1.0"
