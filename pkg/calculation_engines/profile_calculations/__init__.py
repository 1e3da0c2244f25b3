"""
Cusp Profile Calculations Package
"""
from .profile_eval_calc import profile_eval_calc, ProfileEvaluation
from .build_profile_calc import build_profile_calc, BuildProfileCalculation, certify, glue_coefficients
from .inverse_height_calc import inverse_height_calc, InverseHeightCalculation

__all__ = [
    "profile_eval_calc",
    "build_profile_calc",
    "inverse_height_calc",
    "ProfileEvaluation",
    "BuildProfileCalculation",
    "InverseHeightCalculation",
    "certify",
    "glue_coefficients",
]
