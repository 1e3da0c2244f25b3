"""
Cusp Profile Construction
Builds T_{alpha,L} with a C^2 glue on [0, a] and certifies it on a grid

LOGIC:
  - Glue psi = c3 x^3 + c4 x^4 + c5 x^5 in x = t/a, so psi, psi', psi''
    vanish at t = 0 where T = e^{-t}
  - c3..c5 solve the 3x3 system matching psi, psi', psi'' of
    alpha log t - log L(t) at t = a
  - Ladder a = a0, 2 a0, 4 a0, ... with a0 = max(4 alpha + 1, initial_guess)
    until the certificate passes:
      psi' < 1 (T decreasing)
      A^2 <= (1 - psi')^2 + psi'' <= B^2 (curvature pinching)
    on pre-glue points, glue_grid points in [0, a] and a geometric tail
    grid [a, 1e6]

ROLE:
  Single entry point for every CuspProfile used by the lab, including the
  hyperbolic test profile (T = e^{-t} everywhere, K = -1).

SIGNIFICANCE:
  The existence of the C^2 extension is only asserted abstractly; the grid
  certificate turns it into something each run can check and report.
"""
import logging
from dataclasses import replace
from typing import List, Optional, Tuple

import numpy as np

from calculation_engines.interfaces.base_calculation import BaseCalculation
from calculation_engines.interfaces.calculation_input_models import CuspProfile, SlowlyVaryingSpec
from calculation_engines.interfaces.calculation_output_models import ProfileCertificate
from calculation_engines.profile_calculations.profile_eval_calc import profile_eval_calc
from calculation_engines.svf_calculations.eval_l_calc import eval_l_calc
from shared.middleware.error_handler import DomainError, ProfileConstructionError

logger = logging.getLogger(__name__)

CERTIFICATE_TOL = 1e-12
TAIL_END = 1e6
TAIL_POINTS = 2000
PRE_GLUE_POINTS = 50
MAX_REPORTED_FAILURES = 20

# Rows: psi, a psi', a^2 psi'' at x = 1 for the monomials x^3, x^4, x^5
_SEAM_MATRIX = np.array([
    [1.0, 1.0, 1.0],
    [3.0, 4.0, 5.0],
    [6.0, 12.0, 20.0],
])


def glue_coefficients(alpha: float, L: SlowlyVaryingSpec, glue_end: float) -> Tuple[float, ...]:
    """Six coefficients of psi in x = t/glue_end, lowest degree first"""
    a = glue_end
    L0, L1, L2 = eval_l_calc.derivatives(L, a)
    ratio = L1 / L0
    g0 = alpha * np.log(a) - np.log(L0)
    g1 = alpha / a - ratio
    g2 = -alpha / a ** 2 - (L2 / L0 - ratio ** 2)
    c3, c4, c5 = np.linalg.solve(_SEAM_MATRIX, np.array([g0, g1 * a, g2 * a ** 2]))
    return (0.0, 0.0, 0.0, float(c3), float(c4), float(c5))


def certificate_grid(glue_end: float, glue_grid: int) -> np.ndarray:
    pre = np.linspace(-5.0, 0.0, PRE_GLUE_POINTS, endpoint=False)
    glue = np.linspace(0.0, glue_end, glue_grid) if glue_end > 0 else np.zeros(1)
    tail = np.geomspace(max(glue_end, 1e-3), TAIL_END, TAIL_POINTS)
    return np.unique(np.concatenate([pre, glue, tail]))


def certify(profile: CuspProfile, glue_grid: int, ladder: Optional[List[float]] = None) -> ProfileCertificate:
    """Grid certificate for monotonicity and pinching of a profile"""
    t = certificate_grid(profile.glue_end, glue_grid)
    _, dlog, ddlog = profile_eval_calc.log_T_derivs(profile, t)
    pinch = dlog ** 2 + ddlog

    decreasing = dlog < 0.0
    lower_ok = pinch >= profile.pinch_A ** 2 - CERTIFICATE_TOL
    upper_ok = pinch <= profile.pinch_B ** 2 + CERTIFICATE_TOL
    ok = decreasing & lower_ok & upper_ok
    failing = t[~ok][:MAX_REPORTED_FAILURES]

    return ProfileCertificate(
        passed=bool(np.all(ok)),
        glue_end=profile.glue_end,
        grid_points=int(t.size),
        min_K=float(np.min(-pinch)),
        max_K=float(np.max(-pinch)),
        max_log_dT=float(np.max(dlog)),
        failing_points=[float(x) for x in failing],
        ladder=list(ladder or [profile.glue_end]),
    )


class BuildProfileCalculation(BaseCalculation):
    """Quintic-glued cusp profile with a search ladder on the glue end"""

    @property
    def calculation_name(self) -> str:
        return "build_profile"

    @property
    def description(self) -> str:
        return "Constructs and certifies the cusp profile T_{alpha,L}"

    def validate_inputs(self, alpha: float = None, L: SlowlyVaryingSpec = None,
                        A: float = None, B: float = None, **kwargs) -> bool:
        if alpha is None or L is None or A is None or B is None:
            return False
        return alpha > 1.0 and 0.0 < A <= 1.0 <= B

    def calculate(
        self,
        alpha: float,
        L: SlowlyVaryingSpec,
        A: float,
        B: float,
        glue_grid: int = 10_000,
        initial_guess: Optional[float] = None,
        ladder_cap: int = 8,
        **kwargs
    ) -> CuspProfile:
        """
        Build a certified profile.

        Args:
            alpha: Cusp exponent, > 1
            L: Slowly varying modulation
            A: Lower pinching constant in (0, 1)
            B: Upper pinching constant > 1
            glue_grid: Certificate points inside the glue region
            initial_guess: Optional first rung of the ladder
            ladder_cap: Number of rungs tried

        Returns:
            CuspProfile carrying its certificate
        """
        if alpha <= 1.0 or not 0.0 < A < 1.0 < B:
            raise DomainError(
                "build_profile needs alpha > 1 and 0 < A < 1 < B",
                {"alpha": alpha, "A": A, "B": B}
            )
        glue_end = max(4.0 * alpha + 1.0, initial_guess or 0.0)
        tried: List[float] = []
        certificate = None

        for _ in range(ladder_cap):
            tried.append(glue_end)
            profile = CuspProfile(
                alpha=alpha,
                L=L,
                glue_end=glue_end,
                glue_coeffs=glue_coefficients(alpha, L, glue_end),
                pinch_A=A,
                pinch_B=B,
            )
            certificate = certify(profile, glue_grid, tried)
            logger.debug(
                "Profile ladder rung",
                extra={"glue_end": glue_end, "passed": certificate.passed,
                       "min_K": certificate.min_K, "max_K": certificate.max_K}
            )
            if certificate.passed:
                logger.info("Profile certified", extra={"alpha": alpha, "glue_end": glue_end})
                return replace(profile, certificate=certificate)
            glue_end *= 2.0

        raise ProfileConstructionError(
            f"Profile certificate failed after {ladder_cap} ladder rungs",
            {"ladder": tried, "failing_points": certificate.failing_points if certificate else []}
        )

    def hyperbolic_profile(self) -> CuspProfile:
        """Test-mode profile T = e^{-t}: alpha = 0, L = 1, no glue, K = -1"""
        profile = CuspProfile(
            alpha=0.0,
            L=SlowlyVaryingSpec.constant(1.0),
            glue_end=0.0,
            glue_coeffs=(0.0,) * 6,
            pinch_A=1.0,
            pinch_B=1.0,
            hyperbolic=True,
        )
        return replace(profile, certificate=certify(profile, 100))


# Singleton instance
build_profile_calc = BuildProfileCalculation()
