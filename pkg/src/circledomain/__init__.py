"""Circle domains: gap ratios, transboundary modulus and Koebe uniformization."""

from . import errors
from .domain_model import (
    Component,
    DiskShape,
    DomainSpec,
    PointShape,
    PolygonShape,
    classify,
    kappa,
    load_domain,
    transform_spec,
    validate_domain,
)
from .exhaustion_driver import (
    ExhaustionPlan,
    ExhaustionTrace,
    kernel_report,
    plan_exhaustion,
    run_exhaustion,
    witness_metric,
)
from .gap_ratio import build_radii_ladder, el_upper_bound, gr_pair, gr_point, rho_estimate
from .koebe_uniformizer import CircleDomain, NumericMap, exterior_map, koebe_iterate, map_apply, roundness
from .sphere_geom import (
    INF,
    MobiusTransform,
    affine,
    cross_ratio,
    hausdorff_distance,
    inversion,
    mobius_apply,
    mobius_compose,
    mobius_inverse,
    similarity,
)
from .transboundary_modulus import (
    EnclosingFamily,
    SeparatingFamily,
    build_quotient_grid,
    solve_modulus,
    invariance_sweep,
    verify_conformal_invariance,
)

__all__ = [
    "INF",
    "CircleDomain",
    "Component",
    "DiskShape",
    "DomainSpec",
    "EnclosingFamily",
    "ExhaustionPlan",
    "ExhaustionTrace",
    "MobiusTransform",
    "NumericMap",
    "PointShape",
    "PolygonShape",
    "SeparatingFamily",
    "affine",
    "build_quotient_grid",
    "build_radii_ladder",
    "classify",
    "cross_ratio",
    "el_upper_bound",
    "errors",
    "exterior_map",
    "gr_pair",
    "gr_point",
    "hausdorff_distance",
    "inversion",
    "kappa",
    "kernel_report",
    "koebe_iterate",
    "load_domain",
    "map_apply",
    "mobius_apply",
    "mobius_compose",
    "mobius_inverse",
    "plan_exhaustion",
    "rho_estimate",
    "roundness",
    "run_exhaustion",
    "similarity",
    "solve_modulus",
    "transform_spec",
    "validate_domain",
    "invariance_sweep",
    "verify_conformal_invariance",
    "witness_metric",
]
