"""
Calculation Engines Package
Numerical calculations for Schottky groups with perturbed cusps
"""

# This package keeps the numerics separate from configuration and output.
# Every calculation is a singleton with typed inputs and pydantic outputs.

__version__ = "1.0.0"
__all__ = [
    # Interfaces
    "BaseCalculation",

    # Slowly varying functions
    "eval_l_calc",
    "potter_bound_calc",
    "a_sequence_calc",

    # Cusp profile
    "build_profile_calc",
    "profile_eval_calc",
    "inverse_height_calc",

    # Clairaut geodesics
    "clairaut_integrals_calc",
    "cusp_geodesic_calc",
    "distance_table_calc",
    "envelope_check_calc",
    "factor_tail_calc",

    # Hyperbolic plane and Schottky data
    "hyperbolic_geometry",
    "schottky_construction",
    "schottky_validation",

    # Symbolic coding
    "word_enumeration",
    "extended_cocycle",
    "ball_enumeration",
    "contraction_profile_calc",

    # Transfer operator
    "mesh_construction",
    "transfer_assembly",
    "spectral_radius_calc",
    "critical_exponent_calc",
    "doob_transform",

    # Counting
    "level_constant_calc",
    "renewal_calc",
    "direct_sum_calc",
    "orbit_counting_calc",
]

# Import base classes
from calculation_engines.interfaces.base_calculation import BaseCalculation

# Import all calculation modules
from calculation_engines.svf_calculations.eval_l_calc import eval_l_calc
from calculation_engines.svf_calculations.potter_bound_calc import potter_bound_calc
from calculation_engines.svf_calculations.a_sequence_calc import a_sequence_calc

from calculation_engines.profile_calculations.build_profile_calc import build_profile_calc
from calculation_engines.profile_calculations.profile_eval_calc import profile_eval_calc
from calculation_engines.profile_calculations.inverse_height_calc import inverse_height_calc

from calculation_engines.clairaut_calculations.clairaut_integrals_calc import clairaut_integrals_calc
from calculation_engines.clairaut_calculations.geodesic_calc import cusp_geodesic_calc
from calculation_engines.clairaut_calculations.distance_table_calc import distance_table_calc
from calculation_engines.clairaut_calculations.envelope_calc import envelope_check_calc
from calculation_engines.clairaut_calculations.factor_tail_calc import factor_tail_calc

from calculation_engines.hyperbolic_calculations.mobius_calc import hyperbolic_geometry
from calculation_engines.hyperbolic_calculations.schottky_calc import schottky_construction
from calculation_engines.hyperbolic_calculations.validation_calc import schottky_validation

from calculation_engines.coding_calculations.words_calc import word_enumeration
from calculation_engines.coding_calculations.cocycle_calc import extended_cocycle
from calculation_engines.coding_calculations.ball_calc import ball_enumeration
from calculation_engines.coding_calculations.contraction_calc import contraction_profile_calc

from calculation_engines.transfer_calculations.mesh_calc import mesh_construction
from calculation_engines.transfer_calculations.operator_calc import transfer_assembly
from calculation_engines.transfer_calculations.spectral_calc import spectral_radius_calc
from calculation_engines.transfer_calculations.critical_calc import critical_exponent_calc
from calculation_engines.transfer_calculations.doob_calc import doob_transform

from calculation_engines.counting_calculations.level_constant_calc import level_constant_calc
from calculation_engines.counting_calculations.renewal_calc import renewal_calc
from calculation_engines.counting_calculations.direct_sum_calc import direct_sum_calc
from calculation_engines.counting_calculations.counting_calc import orbit_counting_calc
