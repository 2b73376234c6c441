"""Numerical laboratory for drift Laplacians on flat periodic models.

Builds weighted circles and tori, evolves the heat flow of the drift
Laplacian with conservative implicit schemes, and checks differential
Harnack inequalities, W-entropy identities, and super-Ricci-flow
monotonicity quantitatively on the grid.
"""

from .geometry import (
    BallRatioReport,
    CurvatureField,
    WeightedManifold,
    ball_volume_ratio_check,
    build_manifold,
    circle,
    flat_torus,
    geodesic_distance,
    ricci_bakry_emery,
)
from .harnack import (
    HarnackReport,
    hamilton_harnack_defect,
    integrated_harnack_check,
    kernel_dt_log_bounds,
    li_yau_defect,
    sup_bound_defect,
)
from .heatflow import (
    HeatState,
    PositivityError,
    SolverConvergenceError,
    dt_log_u,
    evolve,
    grad_log_u,
    initial_delta,
    kernel_state,
    make_state,
    step,
    uniform_state,
)
from .entropy import (
    EntropySeries,
    WDecomposition,
    build_series,
    entropy_H,
    entropy_second_derivative,
    phi_mK,
    phi_mK_prime,
    tilde_w_comparison,
    tilde_w_entropy,
    w_derivative_decomposition,
    w_entropy,
    w_monotonicity_check,
)
from .operators import (
    bochner_residual,
    gamma2,
    gradient,
    hessian,
    integrate_mu,
    laplacian,
    mu_inner,
    witten_laplacian,
)
from .ricciflow import (
    FlowSpec,
    entropy_dissipation_on_flow,
    evolve_heat_on_flow,
    fit_super_flow_constant,
    make_flow,
    super_ricci_flow_margin,
    w_decomposition_on_flow,
    w_entropy_on_flow,
)

__version__ = "0.1.0"
