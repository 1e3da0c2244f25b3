"""
Clairaut Geodesic Calculations Package
"""
from .clairaut_integrals_calc import clairaut_integrals_calc, ClairautIntegralsCalculation, ArcIntegrand, checked_quad
from .geodesic_calc import cusp_geodesic_calc, CuspGeodesicCalculation
from .envelope_calc import envelope_check_calc, EnvelopeCheckCalculation
from .distance_table_calc import distance_table_calc, DistanceTableCalculation, DistanceTable
from .factor_tail_calc import factor_tail_calc, FactorTailCalculation

__all__ = [
    "clairaut_integrals_calc",
    "cusp_geodesic_calc",
    "envelope_check_calc",
    "distance_table_calc",
    "factor_tail_calc",
    "ClairautIntegralsCalculation",
    "CuspGeodesicCalculation",
    "EnvelopeCheckCalculation",
    "DistanceTableCalculation",
    "DistanceTable",
    "FactorTailCalculation",
    "ArcIntegrand",
    "checked_quad",
]
