"""
Clairaut Integrals
Height and length integrals of a cusp excursion with endpoint regularization

LOGIC:
  For a base height b write T_b(t) = T(t + b) and phi(t) = -log T_b(t).
  With Delta(h, s) = phi(h) - phi(h - s) and f = T_b(h)/T_b(h - s) = e^{-Delta}:
  - I(h) = int_0^h f^2 / sqrt(1 - f^2) ds       (translation n/2 = I e^{phi(h)})
  - J(h) = int_0^h (1/sqrt(1 - f^2) - 1) ds     (length d = 2h + 2J)
  1 - f^2 ~ 2 phi'(h) s near s = 0, so s = w^2 removes the s^{-1/2}
  singularity; both integrands tend to sqrt(2/phi'(h)) at w = 0.
  1 - f^2 is formed with expm1 and Delta by its Taylor series for tiny s.

ROLE:
  Shared kernel of the geodesic solver, the envelope check, the distance
  table and the integral constants.
"""
import logging
import math
from typing import Callable, Dict, Tuple

import numpy as np
from scipy.integrate import quad

from calculation_engines.interfaces.base_calculation import BaseCalculation
from calculation_engines.interfaces.calculation_input_models import CuspProfile, QuadratureSpec
from calculation_engines.profile_calculations.profile_eval_calc import profile_eval_calc
from shared.middleware.error_handler import NumericError

logger = logging.getLogger(__name__)

SERIES_THRESHOLD = 1e-6
_ACCEPT_ABS = 1e-10
_ACCEPT_REL = 1e-9


def checked_quad(func: Callable[[float], float], lo: float, hi: float, what: str,
                 quad_spec: QuadratureSpec = QuadratureSpec(), **options) -> Tuple[float, float]:
    """
    scipy quad that raises NumericError when QUADPACK gives up.

    A warning whose error estimate still meets a loose floor is accepted
    and logged; otherwise the worst panel is reported.
    """
    result = quad(func, lo, hi, full_output=1, epsabs=quad_spec.epsabs,
                  epsrel=quad_spec.epsrel, limit=quad_spec.limit, **options)
    value, abserr = result[0], result[1]
    if len(result) > 3:
        if abserr <= max(_ACCEPT_ABS, _ACCEPT_REL * abs(value)):
            logger.debug("Quadrature warning accepted", extra={"what": what, "abserr": abserr})
            return value, abserr
        info = result[2]
        last = int(info.get("last", 0))
        worst = None
        if last > 0 and "elist" in info:
            errors = np.asarray(info["elist"][:last])
            k = int(np.argmax(errors))
            worst = [float(info["alist"][k]), float(info["blist"][k]), float(errors[k])]
        raise NumericError(
            f"Quadrature for {what} did not converge: {result[3]}",
            {"what": what, "interval": [lo, hi], "abserr": abserr, "worst_panel": worst}
        )
    return value, abserr


class ArcIntegrand:
    """Integrands of one excursion of apex height h above base b"""

    def __init__(self, profile: CuspProfile, h: float, base: float):
        self.profile = profile
        self.h = h
        self.base = base
        _, dlog, ddlog = profile_eval_calc.log_T_derivs(profile, np.array([h + base]))
        self.phi_h = self.phi(h)
        self.dphi_h = -float(dlog[0])
        self.ddphi_h = -float(ddlog[0])

    def phi(self, t: float) -> float:
        return -profile_eval_calc.log_T_scalar(self.profile, t + self.base)

    def delta(self, s: float) -> float:
        if s < SERIES_THRESHOLD * max(1.0, self.h):
            return self.dphi_h * s - 0.5 * self.ddphi_h * s * s
        return self.phi_h - self.phi(self.h - s)

    def f(self, s: float) -> float:
        return math.exp(-self.delta(s))

    def _parts(self, w: float) -> Tuple[float, float]:
        d = self.delta(w * w)
        return math.exp(-2.0 * d), -math.expm1(-2.0 * d)

    def _limit(self) -> float:
        return math.sqrt(2.0 / self.dphi_h)

    def height_integrand(self, w: float) -> float:
        """2w f^2 / sqrt(1 - f^2) at s = w^2"""
        if w == 0.0:
            return self._limit()
        f2, gap = self._parts(w)
        if gap <= 0.0:
            return self._limit()
        return 2.0 * w * f2 / math.sqrt(gap)

    def length_integrand(self, w: float) -> float:
        """2w (1/sqrt(1 - f^2) - 1) in the cancellation-free form"""
        if w == 0.0:
            return self._limit()
        f2, gap = self._parts(w)
        if gap <= 0.0:
            return self._limit()
        root = math.sqrt(gap)
        return 2.0 * w * f2 / (root * (1.0 + root))

    def height_integrand_s(self, s: float) -> float:
        """sqrt(s) f^2 / sqrt(1 - f^2), paired with the weight s^{-1/2}"""
        if s == 0.0:
            return 1.0 / math.sqrt(2.0 * self.dphi_h)
        d = self.delta(s)
        return math.sqrt(s) * math.exp(-2.0 * d) / math.sqrt(-math.expm1(-2.0 * d))


class ClairautIntegralsCalculation(BaseCalculation):
    """I(h) and J(h) for an excursion above a base height"""

    @property
    def calculation_name(self) -> str:
        return "clairaut_integrals"

    @property
    def description(self) -> str:
        return "Clairaut height and length integrals with s = w^2 regularization"

    def validate_inputs(self, profile: CuspProfile = None, h: float = None, **kwargs) -> bool:
        return profile is not None and h is not None and h > 0

    def calculate(self, profile: CuspProfile, h: float, base: float = 0.0,
                  quad_spec: QuadratureSpec = QuadratureSpec(), **kwargs) -> Dict[str, float]:
        """
        Evaluate both integrals.

        Args:
            profile: Cusp profile
            h: Apex height above the base
            base: Height of the base horocycle in profile coordinates
            quad_spec: Quadrature tolerances

        Returns:
            Dict with I, J and their error estimates
        """
        integrand = ArcIntegrand(profile, h, base)
        top = math.sqrt(h)
        I, err_I = checked_quad(integrand.height_integrand, 0.0, top, "height integral", quad_spec)
        J, err_J = checked_quad(integrand.length_integrand, 0.0, top, "length integral", quad_spec)
        return {"I": I, "J": J, "err_I": err_I, "err_J": err_J, "phi_h": integrand.phi_h,
                "dphi_h": integrand.dphi_h}

    def height_integral(self, profile: CuspProfile, h: float, base: float,
                        quad_spec: QuadratureSpec = QuadratureSpec()) -> Tuple[float, float, float]:
        """(I, error, phi(h)) without the length integral"""
        integrand = ArcIntegrand(profile, h, base)
        I, err = checked_quad(integrand.height_integrand, 0.0, math.sqrt(h), "height integral", quad_spec)
        return I, err, integrand.phi_h

    def reference_height_integral(self, profile: CuspProfile, h: float, base: float,
                                  quad_spec: QuadratureSpec = QuadratureSpec()) -> float:
        """I(h) by algebraic-weight quadrature in s, independent of the w substitution"""
        integrand = ArcIntegrand(profile, h, base)
        value, _ = checked_quad(integrand.height_integrand_s, 0.0, h, "reference height integral",
                                quad_spec, weight="alg", wvar=(-0.5, 0.0))
        return value

    def f_n(self, profile: CuspProfile, h: float, s, base: float = None):
        """
        f(s) = T_b(h) / T_b(h - s) with b = glue_end unless given.

        Vectorized in s; s must lie in [0, h].
        """
        b = profile.glue_end if base is None else base
        s_arr = np.atleast_1d(np.asarray(s, dtype=float))
        log_top = profile_eval_calc.log_T(profile, np.array([h + b]))[0]
        values = np.exp(log_top - profile_eval_calc.log_T(profile, h - s_arr + b))
        values = np.minimum(values, 1.0)
        return float(values[0]) if np.ndim(s) == 0 else values

    def integral_constants(self, quad_spec: QuadratureSpec = QuadratureSpec()) -> Dict[str, Tuple[float, float]]:
        """
        The two hyperbolic constants of the excursion integrals:
        int_0^inf e^{-2s}/sqrt(1 - e^{-2s}) ds = 1 and
        int_0^inf (1/sqrt(1 - e^{-2s}) - 1) ds = log 2
        """
        def unit(w: float) -> float:
            if w == 0.0:
                return math.sqrt(2.0)
            return 2.0 * w * math.exp(-2.0 * w * w) / math.sqrt(-math.expm1(-2.0 * w * w))

        def log_two(w: float) -> float:
            if w == 0.0:
                return math.sqrt(2.0)
            gap = -math.expm1(-2.0 * w * w)
            root = math.sqrt(gap)
            return 2.0 * w * math.exp(-2.0 * w * w) / (root * (1.0 + root))

        return {
            "unit": checked_quad(unit, 0.0, np.inf, "unit constant", quad_spec),
            "log2": checked_quad(log_two, 0.0, np.inf, "log 2 constant", quad_spec),
        }


# Singleton instance
clairaut_integrals_calc = ClairautIntegralsCalculation()
