"""Discrete transboundary extremal length on a quotient grid."""

from .grid import (
    OMEGA,
    Enclosure,
    QuotientGrid,
    beta_curve,
    build_quotient_grid,
    component_cells,
    enclosure_from_polygon,
)
from .solver import ELResult, invariance_sweep, metric_area, solve_modulus, verify_conformal_invariance
from .walks import (
    EnclosingFamily,
    FamilyGraph,
    SeparatingFamily,
    curve_length,
    prepare_family,
    scan_sources,
    shortest_family_curve,
)

__all__ = [
    "OMEGA",
    "ELResult",
    "EnclosingFamily",
    "Enclosure",
    "FamilyGraph",
    "QuotientGrid",
    "SeparatingFamily",
    "beta_curve",
    "build_quotient_grid",
    "component_cells",
    "curve_length",
    "enclosure_from_polygon",
    "invariance_sweep",
    "metric_area",
    "prepare_family",
    "scan_sources",
    "shortest_family_curve",
    "solve_modulus",
    "verify_conformal_invariance",
]
