"""
Orbit Counting Calculations Package
"""
from .level_constant_calc import (
    level_constant_calc, LevelConstantCalculation, counting_shape, influent_factors,
)
from .renewal_calc import renewal_calc, RenewalCalculation, ShiftGrid, tail_level_sum
from .direct_sum_calc import direct_sum_calc, DirectSumCalculation
from .counting_calc import orbit_counting_calc, OrbitCountingCalculation, normalized_ratios

__all__ = [
    "level_constant_calc",
    "renewal_calc",
    "direct_sum_calc",
    "orbit_counting_calc",
    "LevelConstantCalculation",
    "RenewalCalculation",
    "DirectSumCalculation",
    "OrbitCountingCalculation",
    "ShiftGrid",
    "counting_shape",
    "influent_factors",
    "normalized_ratios",
    "tail_level_sum",
]
