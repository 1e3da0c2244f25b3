"""
Slowly Varying Function Calculations Package
"""
from .eval_l_calc import eval_l_calc, EvalLCalculation
from .potter_bound_calc import potter_bound_calc, PotterBoundCalculation
from .a_sequence_calc import a_sequence_calc, ASequenceCalculation

__all__ = [
    "eval_l_calc",
    "potter_bound_calc",
    "a_sequence_calc",
    "EvalLCalculation",
    "PotterBoundCalculation",
    "ASequenceCalculation",
]
