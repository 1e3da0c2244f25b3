"""
Inverse Height Function
Solves T(u(s)) = 1/s and evaluates the asymptotic form of u

LOGIC:
  - Work with log s so that very large s never overflows
  - log s <= 0: u = log s exactly (T = e^{-t} on t <= 0)
  - otherwise Brent's method on log T(u) + log s over [0, hi], doubling hi
  - u_asymptotic order 1: log s + alpha log log s - log L(log s)
  - u_asymptotic order 2: fixed point of u = log s + alpha log u - log L(u),
    started from the order 1 value

ROLE:
  The height function u drives the distance asymptotics of the cusp and
  is the reference for the Clairaut root solver.
"""
import logging
import math
from typing import Union

import numpy as np
from scipy.optimize import brentq

from calculation_engines.interfaces.base_calculation import BaseCalculation
from calculation_engines.interfaces.calculation_input_models import CuspProfile, SlowlyVaryingSpec
from calculation_engines.profile_calculations.profile_eval_calc import profile_eval_calc
from calculation_engines.svf_calculations.eval_l_calc import eval_l_calc
from shared.middleware.error_handler import DomainError, NumericError

logger = logging.getLogger(__name__)


class InverseHeightCalculation(BaseCalculation):
    """u(s) with T(u(s)) = 1/s"""

    MAX_DOUBLINGS = 200

    @property
    def calculation_name(self) -> str:
        return "u_of_s"

    def validate_inputs(self, profile: CuspProfile = None, s: float = None, **kwargs) -> bool:
        return profile is not None and s is not None and s > 0

    def calculate(self, profile: CuspProfile, s: float, **kwargs) -> float:
        return self.u_of_s(profile, s)

    def u_of_s(self, profile: CuspProfile, s: float, log_s: Union[float, None] = None) -> float:
        """
        Invert the profile.

        Args:
            profile: Certified cusp profile
            s: Positive real; pass log_s instead for values beyond float range

        Returns:
            u with |T(u) s - 1| <= 1e-12
        """
        if log_s is None:
            if not s > 0:
                raise DomainError("u_of_s needs s > 0", {"s": s})
            log_s = math.log(s)
        if log_s <= 0.0:
            return log_s

        def residual(u: float) -> float:
            return profile_eval_calc.log_T_scalar(profile, u) + log_s

        hi = max(1.0, 2.0 * log_s)
        doublings = 0
        while residual(hi) > 0.0:
            hi *= 2.0
            doublings += 1
            if doublings > self.MAX_DOUBLINGS:
                raise NumericError("u_of_s bracket search failed", {"log_s": log_s, "hi": hi})
        return brentq(residual, 0.0, hi, xtol=1e-14, maxiter=500)

    def u_asymptotic(self, alpha: float, L: SlowlyVaryingSpec, s: float, order: int = 1) -> float:
        """
        Asymptotic height.

        order 1 is the closed form in log s; order 2 iterates the
        post-glue equation to its fixed point, which is exact once u
        lies beyond the glue.
        """
        if not s > math.e:
            raise DomainError("u_asymptotic needs s > e", {"s": s})
        log_s = math.log(s)
        u = log_s + alpha * math.log(log_s) - math.log(eval_l_calc.calculate(spec=L, t=log_s))
        if order == 1:
            return u
        if order != 2:
            raise DomainError("u_asymptotic order must be 1 or 2", {"order": order})

        for _ in range(200):
            if u <= 0.0:
                raise NumericError("u_asymptotic fixed point left the domain", {"s": s, "u": u})
            nxt = log_s + alpha * math.log(u) - math.log(eval_l_calc.calculate(spec=L, t=u))
            if abs(nxt - u) <= 1e-14 * max(1.0, abs(u)):
                return nxt
            u = nxt
        logger.warning("u_asymptotic fixed point did not settle", extra={"s": s, "u": u})
        return u

    def inverse_consistency(self, profile: CuspProfile, t: np.ndarray) -> float:
        """max |u(1/T(t)) - t| over a grid"""
        log_T = profile_eval_calc.log_T(profile, np.asarray(t, dtype=float))
        u = np.array([self.u_of_s(profile, 0.0, log_s=-lt) for lt in np.atleast_1d(log_T)])
        return float(np.max(np.abs(u - np.asarray(t, dtype=float))))


# Singleton instance
inverse_height_calc = InverseHeightCalculation()
