"""Numerical geometry of weighted Finsler manifolds and Finsler spacetimes.

Everything is derived from a user-supplied 2-homogeneous Lagrangian by exact
forward-mode differentiation: fundamental and Cartan tensors, sprays and
connections, geodesics, curvature, transverse Jacobi data, and the weighted
comparison checks (Bishop, Bonnet-Myers, Laplacian/d'Alembertian comparison,
Bishop-Gromov, Raychaudhuri) over a two-parameter (N, eps) family.
"""

from .comparison import (
    bishop_profile,
    check_bishop,
    check_bishop_gromov,
    check_bonnet_myers,
    check_laplacian_comparison,
    comparison_s,
    validate_hypotheses,
)
from .connection import integrate_geodesic
from .core import (
    ChartedSpace,
    Covec,
    MetricAtVector,
    Pt,
    Vec,
    cartan_tensor,
    derive,
    finsler_norm,
    fundamental_tensor,
    inner_product,
    validate_homogeneity,
)
from .curvature import (
    first_conjugate_point,
    matrix_lemma_residuals,
    transverse_data,
)
from .errors import (
    AdmissibilityError,
    FinslerError,
    HypothesisRejection,
    NumericalError,
    ValidationError,
)
from .lorentz import (
    CausalClass,
    LagrangeTensorData,
    check_lorentz_laplacian,
    check_raychaudhuri,
    check_spacetime_bishop_myers,
    classify,
    hessian_symmetry_check,
    lagrange_tensor,
    legendre,
    legendre_inverse,
    polar_cone_margin,
    radial_dalembertian,
    riccati_residual,
    sclv_volume_check,
)
from .report import CheckReport
from .runner import report_json, run_scenario
from .scenario import Scenario, load_scenario, scenario_from_dict
from .weighted import (
    comparison_params,
    eps_threshold,
    epsilon_range_constant,
    monotonicity_check,
    weight_from_density,
    weighted_ricci,
)
from .zoo import build_zoo

__version__ = "0.1.0"

__all__ = [
    "ChartedSpace", "Pt", "Vec", "Covec", "MetricAtVector",
    "fundamental_tensor", "cartan_tensor", "inner_product", "finsler_norm",
    "derive", "validate_homogeneity",
    "CausalClass", "classify", "legendre", "legendre_inverse",
    "polar_cone_margin", "LagrangeTensorData", "lagrange_tensor",
    "check_raychaudhuri", "riccati_residual", "check_spacetime_bishop_myers",
    "radial_dalembertian", "check_lorentz_laplacian", "sclv_volume_check",
    "hessian_symmetry_check",
    "CheckReport",
    "integrate_geodesic", "transverse_data", "first_conjugate_point",
    "matrix_lemma_residuals",
    "bishop_profile", "check_bishop", "check_bonnet_myers",
    "check_laplacian_comparison", "check_bishop_gromov", "comparison_s",
    "validate_hypotheses",
    "comparison_params", "eps_threshold", "epsilon_range_constant",
    "weighted_ricci", "weight_from_density", "monotonicity_check",
    "build_zoo",
    "Scenario", "load_scenario", "scenario_from_dict",
    "run_scenario", "report_json",
    "FinslerError", "ValidationError", "AdmissibilityError",
    "NumericalError", "HypothesisRejection",
    "__version__",
]
