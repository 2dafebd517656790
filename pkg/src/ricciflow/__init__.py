"""Finite-difference Ricci flow and Ricci soliton toolkit.

Curvature tensors, geometric flows, and soliton certification on
periodic and truncated chart grids, with declarative scenario files and
refinement-ladder reports on top.
"""

from .exceptions import (
    ClosedManifoldRequiredError,
    ConfigError,
    CurvatureBlowupError,
    DegenerateMetricError,
    ExtinctionError,
    GridError,
    HistoryError,
    InapplicableCheckError,
    RicciFlowError,
    ScenarioError,
    StabilityError,
)
from .grid import ChartGrid, TensorField
from .metric import MetricState
from .operators import (
    connection_laplacian,
    covariant_derivative,
    divergence,
    gradient,
    hessian,
    laplace_beltrami,
    lie_metric,
    lie_riemann,
    lie_sym2,
    rough_laplacian,
    sampson_laplacian,
    weitzenboeck_ricci,
    yano_laplacian,
)
from .quadrature import (
    ball_volume,
    distance_field,
    grad_pairing,
    inner_product,
    integrate,
    volume,
    volume_growth,
)
from .families import (
    FamilyInstance,
    RoundSphere,
    TrigPoly,
    cigar,
    conformal_torus,
    flat_torus,
    gaussian_shrinker,
    product_with_circle,
    random_trig_poly,
    sphere_band,
)
from .flow import (
    FlowConfig,
    FlowTrajectory,
    SphereFlowResult,
    monitor_maximum_principle,
    ricci_evolution_residual,
    riemann_evolution_residual,
    run_flow,
    run_sphere_flow,
    scalar_evolution_residual,
)
from .soliton import (
    Certificate,
    SolitonSpec,
    certify,
    classify,
    from_family,
    grad_s_integral_test,
    isometry_test,
    kato_pointwise_check,
    lie_riemann_integral_identity,
    lie_riemann_trace_residual,
    lie_ricci_trace_residual,
)
from .reports import ResidualReport, fit_convergence_order
from .scenario import load_scenario, run_ladder, run_scenario, validate_scenario

__version__ = "0.1.0"

__all__ = [
    "ChartGrid",
    "TensorField",
    "MetricState",
    "FamilyInstance",
    "RoundSphere",
    "TrigPoly",
    "FlowConfig",
    "FlowTrajectory",
    "SphereFlowResult",
    "Certificate",
    "SolitonSpec",
    "ResidualReport",
    "RicciFlowError",
    "GridError",
    "ConfigError",
    "ScenarioError",
    "DegenerateMetricError",
    "CurvatureBlowupError",
    "StabilityError",
    "HistoryError",
    "ExtinctionError",
    "ClosedManifoldRequiredError",
    "InapplicableCheckError",
    "covariant_derivative",
    "gradient",
    "divergence",
    "hessian",
    "laplace_beltrami",
    "connection_laplacian",
    "rough_laplacian",
    "lie_metric",
    "lie_sym2",
    "lie_riemann",
    "weitzenboeck_ricci",
    "sampson_laplacian",
    "yano_laplacian",
    "integrate",
    "volume",
    "inner_product",
    "grad_pairing",
    "distance_field",
    "ball_volume",
    "volume_growth",
    "flat_torus",
    "conformal_torus",
    "cigar",
    "gaussian_shrinker",
    "sphere_band",
    "product_with_circle",
    "random_trig_poly",
    "run_flow",
    "run_sphere_flow",
    "scalar_evolution_residual",
    "ricci_evolution_residual",
    "riemann_evolution_residual",
    "monitor_maximum_principle",
    "from_family",
    "certify",
    "classify",
    "kato_pointwise_check",
    "isometry_test",
    "grad_s_integral_test",
    "lie_ricci_trace_residual",
    "lie_riemann_trace_residual",
    "lie_riemann_integral_identity",
    "load_scenario",
    "validate_scenario",
    "run_scenario",
    "run_ladder",
    "fit_convergence_order",
    "__version__",
]
