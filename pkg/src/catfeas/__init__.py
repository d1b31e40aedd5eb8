"""Alternating projections for convex feasibility on spherical caps of positive curvature."""

from .convex_sets import (
    GeodesicBall,
    GeodesicSegment,
    IntersectionOracle,
    SphericalHull,
    contains,
    distance_to_intersection,
    distance_to_set,
    oracle_project,
    project,
)
from .errors import CatFeasError
from .model_space import ModelSpace, angle, comparison_triangle, distance, slerp
from .scenarios import ScenarioSpec, paper_example, phi_embed, phi_extract, random_ball_pair
from .solver import (
    SolverConfig,
    alternate,
    asymptotic_center,
    check_asymptotic_regularity,
    check_fejer,
    check_linear_rate,
    check_max_inequality,
    diagnose,
    estimate_c_m,
    estimate_regularity_k,
    rate_bound_n_epsilon,
)

__version__ = "0.1.0"
