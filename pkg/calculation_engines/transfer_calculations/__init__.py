"""
Transfer Operator Calculations Package
"""
from .mesh_calc import mesh_construction, MeshConstruction, BoundaryMesh
from .operator_calc import transfer_assembly, TransferAssembly, TransferOperator, FoldedTail, point_owner
from .spectral_calc import spectral_radius_calc, SpectralRadiusCalculation
from .critical_calc import (
    critical_exponent_calc, CriticalExponentCalculation, factor_exponent, verdict_for,
    CONVERGENT, DIVERGENT, UNDETERMINED,
)
from .doob_calc import doob_transform, DoobTransform

__all__ = [
    "mesh_construction",
    "transfer_assembly",
    "spectral_radius_calc",
    "critical_exponent_calc",
    "doob_transform",
    "MeshConstruction",
    "BoundaryMesh",
    "TransferAssembly",
    "TransferOperator",
    "FoldedTail",
    "SpectralRadiusCalculation",
    "CriticalExponentCalculation",
    "DoobTransform",
    "point_owner",
    "factor_exponent",
    "verdict_for",
    "CONVERGENT",
    "DIVERGENT",
    "UNDETERMINED",
]
