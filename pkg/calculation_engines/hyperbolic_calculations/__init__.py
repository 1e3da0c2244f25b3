"""
Hyperbolic Geometry Calculations Package
"""
from .mobius_calc import hyperbolic_geometry, HyperbolicGeometry
from .schottky_calc import (
    schottky_construction, SchottkyConstruction, conjugated_dilation, factor_index,
    arc_contains, arc_from_interval,
)
from .validation_calc import schottky_validation, SchottkyValidation

__all__ = [
    "hyperbolic_geometry",
    "schottky_construction",
    "schottky_validation",
    "HyperbolicGeometry",
    "SchottkyConstruction",
    "SchottkyValidation",
    "conjugated_dilation",
    "factor_index",
    "arc_contains",
    "arc_from_interval",
]
