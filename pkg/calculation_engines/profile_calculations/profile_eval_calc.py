"""
Cusp Profile Evaluation
Piecewise evaluation of T, T', T'' and the curvature K = -T''/T

LOGIC:
  Write T(t) = exp(-t + psi(t)):
  - psi = 0 for t <= 0 (hyperbolic region, T = e^{-t})
  - psi = quintic glue on [0, glue_end] with psi(0) = psi'(0) = psi''(0) = 0
  - psi = alpha log t - log L(t) for t >= glue_end
  Then T' = T (psi' - 1), T'' = T ((1 - psi')^2 + psi''), and
  K = -((1 - psi')^2 + psi'').

ROLE:
  Every cusp quantity (Clairaut integrals, inverse height u, certificate)
  reads the profile only through these functions.

SIGNIFICANCE:
  Working with log T keeps the glue positive by construction and makes
  the seams C^2 as soon as psi matches to second order.
"""
import math
from functools import partial
from typing import Callable, Tuple, Union

import numpy as np

from calculation_engines.interfaces.base_calculation import BaseCalculation
from calculation_engines.interfaces.calculation_input_models import CuspProfile, SlowlyVaryingSpec
from calculation_engines.svf_calculations.eval_l_calc import eval_l_calc
from shared.middleware.error_handler import DomainError

ArrayLike = Union[float, np.ndarray]


def _post_glue_psi(alpha: float, L: SlowlyVaryingSpec, t: np.ndarray) -> Tuple[np.ndarray, np.ndarray, np.ndarray]:
    L0, L1, L2 = eval_l_calc.derivatives(L, t)
    L0 = np.asarray(L0, dtype=float)
    ratio = np.asarray(L1) / L0
    psi = alpha * np.log(t) - np.log(L0)
    dpsi = alpha / t - ratio
    ddpsi = -alpha / t ** 2 - (np.asarray(L2) / L0 - ratio ** 2)
    return psi, dpsi, ddpsi


class ProfileEvaluation(BaseCalculation):
    """Evaluate log T and its derivatives for a CuspProfile"""

    @property
    def calculation_name(self) -> str:
        return "eval_T"

    @property
    def description(self) -> str:
        return "Piecewise evaluation of the cusp profile"

    def calculate(self, profile: CuspProfile, t: ArrayLike, **kwargs) -> ArrayLike:
        return self.eval_T(profile, t)

    def psi(self, profile: CuspProfile, t: ArrayLike) -> Tuple[np.ndarray, np.ndarray, np.ndarray]:
        """psi, psi', psi'' on an array"""
        t = np.atleast_1d(np.asarray(t, dtype=float))
        psi = np.zeros_like(t)
        dpsi = np.zeros_like(t)
        ddpsi = np.zeros_like(t)
        if profile.hyperbolic:
            return psi, dpsi, ddpsi

        a = profile.glue_end
        glue = (t > 0.0) & (t < a)
        if np.any(glue):
            x = t[glue] / a
            coeffs = np.asarray(profile.glue_coeffs)
            poly = np.polynomial.Polynomial(coeffs)
            psi[glue] = poly(x)
            dpsi[glue] = poly.deriv(1)(x) / a
            ddpsi[glue] = poly.deriv(2)(x) / a ** 2

        post = t >= a
        if np.any(post):
            p0, p1, p2 = _post_glue_psi(profile.alpha, profile.L, t[post])
            psi[post] = p0
            dpsi[post] = p1
            ddpsi[post] = p2
        return psi, dpsi, ddpsi

    def log_T(self, profile: CuspProfile, t: ArrayLike) -> ArrayLike:
        scalar = np.ndim(t) == 0
        t_arr = np.atleast_1d(np.asarray(t, dtype=float))
        out = -t_arr + self.psi(profile, t_arr)[0]
        return float(out[0]) if scalar else out

    def log_T_scalar(self, profile: CuspProfile, t: float) -> float:
        """log T(t) for one float, without array overhead"""
        if t <= 0.0 or profile.hyperbolic:
            return -t
        a = profile.glue_end
        if t < a:
            x = t / a
            c = profile.glue_coeffs
            return -t + x * x * x * (c[3] + x * (c[4] + x * c[5]))
        return -t + profile.alpha * math.log(t) - eval_l_calc.log_value(profile.L, t)

    def log_T_derivs(self, profile: CuspProfile, t: ArrayLike) -> Tuple[np.ndarray, np.ndarray, np.ndarray]:
        """log T, (log T)', (log T)'' on an array"""
        t_arr = np.atleast_1d(np.asarray(t, dtype=float))
        psi, dpsi, ddpsi = self.psi(profile, t_arr)
        return -t_arr + psi, dpsi - 1.0, ddpsi

    def eval_T(self, profile: CuspProfile, t: ArrayLike) -> ArrayLike:
        scalar = np.ndim(t) == 0
        out = np.exp(self.log_T(profile, np.atleast_1d(t)))
        return float(out[0]) if scalar else out

    def eval_dT(self, profile: CuspProfile, t: ArrayLike) -> ArrayLike:
        scalar = np.ndim(t) == 0
        logT, dlog, _ = self.log_T_derivs(profile, t)
        out = np.exp(logT) * dlog
        return float(out[0]) if scalar else out

    def eval_ddT(self, profile: CuspProfile, t: ArrayLike) -> ArrayLike:
        scalar = np.ndim(t) == 0
        logT, dlog, ddlog = self.log_T_derivs(profile, t)
        out = np.exp(logT) * (dlog ** 2 + ddlog)
        return float(out[0]) if scalar else out

    def curvature(self, profile: CuspProfile, t: ArrayLike) -> ArrayLike:
        """K(t) = -T''(t)/T(t)"""
        scalar = np.ndim(t) == 0
        _, dlog, ddlog = self.log_T_derivs(profile, t)
        out = -(dlog ** 2 + ddlog)
        return float(out[0]) if scalar else out

    def closed_form_curvature(self, alpha: float, L: SlowlyVaryingSpec, t: ArrayLike) -> ArrayLike:
        """K = -[(1 - alpha/t + L'/L)^2 + (-alpha/t^2 - (L'/L)')] beyond the glue"""
        scalar = np.ndim(t) == 0
        t_arr = np.atleast_1d(np.asarray(t, dtype=float))
        ratio, dratio = eval_l_calc.log_derivatives(L, t_arr)
        out = -((1.0 - alpha / t_arr + ratio) ** 2 + (-alpha / t_arr ** 2 - dratio))
        return float(out[0]) if scalar else out

    def eval_shifted_T(self, profile: CuspProfile, cusp_height: float, t: ArrayLike) -> ArrayLike:
        """Profile of the cusp_height family: e^{-a} T(t - a), hyperbolic below a"""
        scalar = np.ndim(t) == 0
        t_arr = np.atleast_1d(np.asarray(t, dtype=float))
        out = np.exp(-cusp_height + self.log_T(profile, t_arr - cusp_height))
        return float(out[0]) if scalar else out

    def shifted(self, profile: CuspProfile, cusp_height: float) -> Callable[[ArrayLike], ArrayLike]:
        """T_{alpha,L,a} as a callable; cusp_height = 0 returns T itself"""
        if cusp_height < 0:
            raise DomainError("cusp_height must be nonnegative", {"cusp_height": cusp_height})
        return partial(self.eval_shifted_T, profile, cusp_height)


# Singleton instance
profile_eval_calc = ProfileEvaluation()
