"""Vector fields as maps into tangent bundles with Kaluza-Klein metrics.

Numerical engine for the bundle connection, tension fields, energies and
the desk-scale verification of harmonic-section classifications on
spheres and two-tori.
"""

from .energyflow import (
    ConformalChange,
    DiscreteField,
    FlowResult,
    conformal_energy_delta,
    energy,
    grid_variation_duality_residual,
    random_unit_field,
    unit_flow_torus,
    variation_duality_residual,
    yano_integral,
)
from .geometry import (
    ConformalTorus,
    FieldCalculus,
    FlatTorus,
    OffManifoldError,
    PointTangent,
    RoundSphere,
    SmoothScalar2D,
    UnsupportedOperation,
    field_calculus,
    gaussian_curvature,
    point_tangent,
    product_sine_scalar,
    riemann,
    scalar_laplacian,
    tangent_project,
)
from .fields import (
    AxisInfo,
    Conformal,
    DegenerateFieldError,
    KillingRotation,
    Normalized,
    ParallelTorus,
    QuadraticGradient,
    Scaled,
    UnitAngleField,
    axis_info,
    closed_form_oracle,
    evaluate,
)
from .kkmetrics import (
    KKMetricSpec,
    LiftPair,
    MetricDegeneracyError,
    ScalarProfile,
    connection_eval,
    exponential_profile,
    koszul_residuals,
    metric_on_lifts,
    power_profile,
    presets,
    validate,
)
from .profiles import (
    FEASIBLE,
    Obstruction,
    ProfileConstructionError,
    ProfileProblem,
    closed_form_B,
    construct_B_from_C,
    enlarged_metric,
    obstruction_check,
    profile_ode_residual,
)
from .quadrature import (
    Quadrature,
    sphere2_quadrature,
    sphere3_quadrature,
    sphere_mc_quadrature,
    torus_quadrature,
)
from .tension import (
    ResidualReport,
    TensionResult,
    constant_norm_condition,
    conformal_defect,
    evaluate_residuals,
    identity_checks,
    surface_identity_residual,
    tension,
    tension_via_connection,
    unit_section_residual,
    yano_integrand,
)

__version__ = "0.1.0"
