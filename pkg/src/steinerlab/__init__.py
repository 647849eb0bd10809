"""Affine surface areas of convex bodies and Steiner symmetrization experiments."""
__version__ = "0.1.0"

from .bodies import (
    AffineImage,
    Ball,
    ConvexBody,
    Ellipsoid,
    Frame,
    GraphBody,
    GraphPair,
    PerturbedBall,
    PNormBall,
    QuadratureSpec,
    RadialBody,
    body_from_dict,
    hausdorff_distance,
    polar_volume,
    radial,
    support,
    to_graph_pair,
    volume,
)
from .differential import (
    JetEvaluation,
    curvature_ratio,
    det_root_gap,
    gauss_curvature,
    jet,
    outer_normal,
    support_bracket,
)
from .errors import DomainError, GeometryError, InputError
from .generators import (
    ClassReport,
    Generator,
    constant,
    lp_generator,
    parse_generator,
    power_conc,
    power_conv,
    tabulated,
    validate_class,
)
from .steiner import (
    SymmetralBody,
    SymmetrizationTrace,
    midpoint_planarity,
    steiner_symmetral,
    successive_symmetrization,
)
from .surface import SurfaceResult, affine_surface_area, as_infinity, as_p, surface_areas

__all__ = [
    "AffineImage", "Ball", "ConvexBody", "Ellipsoid", "Frame", "GraphBody", "GraphPair", "PerturbedBall",
    "PNormBall", "QuadratureSpec", "RadialBody", "body_from_dict", "hausdorff_distance", "polar_volume",
    "radial", "support", "to_graph_pair", "volume",
    "JetEvaluation", "curvature_ratio", "det_root_gap", "gauss_curvature", "jet", "outer_normal",
    "support_bracket",
    "DomainError", "GeometryError", "InputError",
    "ClassReport", "Generator", "constant", "lp_generator", "parse_generator", "power_conc", "power_conv",
    "tabulated", "validate_class",
    "SymmetralBody", "SymmetrizationTrace", "midpoint_planarity", "steiner_symmetral",
    "successive_symmetrization",
    "SurfaceResult", "affine_surface_area", "as_infinity", "as_p", "surface_areas",
]
