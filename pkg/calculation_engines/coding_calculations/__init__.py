"""
Symbolic Coding Calculations Package
"""
from .words_calc import word_enumeration, WordEnumeration, alphabet, compose, orbit_point, letter_caps
from .cocycle_calc import extended_cocycle, ExtendedCocycle, push, EXACT
from .ball_calc import ball_enumeration, BallEnumeration
from .contraction_calc import contraction_profile_calc, ContractionProfileCalculation

__all__ = [
    "word_enumeration",
    "extended_cocycle",
    "ball_enumeration",
    "contraction_profile_calc",
    "WordEnumeration",
    "ExtendedCocycle",
    "BallEnumeration",
    "ContractionProfileCalculation",
    "alphabet",
    "compose",
    "orbit_point",
    "letter_caps",
    "push",
    "EXACT",
]
