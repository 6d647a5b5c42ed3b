"""Carrying simplices of competitive Kolmogorov maps.

The library certifies the structural assumptions of a map F(x) = diag[x] f(x),
then brackets its globally attracting unordered invariant hypersurface between
an increasing and a decreasing sequence of radially represented manifolds
iterated under the graph transform, and verifies the result against the
defining properties of the surface.
"""

from .assumptions import (
    AssumptionError,
    AssumptionReport,
    check_as2,
    check_as3,
    check_as4,
    find_epsilon,
    find_kappa,
    jury_condition_ricker2d,
    run_assumption_checks,
    spectral_radius,
)
from .geometry import (
    BarycentricGrid,
    RadialManifold,
    box_boundary_manifold,
    constant_manifold,
    eval_radial,
    harnack,
    hausdorff_points,
    is_weakly_unordered,
    make_grid,
    order_function,
    project_e_perp,
    radial_project,
    restricted_harnack,
    sup_gap,
)
from .maps import (
    AxisMap,
    KolmogorovMap,
    MapDomainError,
    axis_map,
    eval_DF,
    eval_F,
    eval_Z,
    eval_df,
    eval_f,
    make_map,
)
from .simplex import (
    ConvergenceReport,
    VerificationReport,
    attract_trajectory,
    compute_cs,
    gamma_membership,
    induced_map,
    iterate_manifold,
    shadow_point,
    surface_distance,
    verify_cs,
)
from .transform import (
    CoverageError,
    FoldError,
    PushforwardCloud,
    bisection_resample,
    graph_step,
    pushforward,
    resample,
)

__version__ = "0.1.0"
