"""
Slowly Varying Function Evaluation
Evaluates L(t) and its first two derivatives for the closed-form family

LOGIC:
  - constant:      L = c
  - power_of_log:  L = g^beta with g = log(e + t)
  - iterated_log:  L = g^beta with g = log log(e^e + t)
  - Chain rule on g gives L' and L''
  - Below t_min the value is frozen and both derivatives vanish

ROLE:
  Feeds the cusp profile (post-glue region and seam matching), the
  Potter report, the a_k sequence and every L(R) normalization of the
  counting module.

SIGNIFICANCE:
  Restricting L to a closed-form family makes smoothness, derivative
  decay and Potter bounds checkable on grids instead of assumed.
"""
import math
from typing import Tuple, Union

import numpy as np

from calculation_engines.interfaces.base_calculation import BaseCalculation
from calculation_engines.interfaces.calculation_input_models import SlowlyVaryingSpec

ArrayLike = Union[float, np.ndarray]

_E_TO_E = math.exp(math.e)


def _inner_log(spec: SlowlyVaryingSpec, t: np.ndarray) -> Tuple[np.ndarray, np.ndarray, np.ndarray]:
    """g, g', g'' of the inner logarithm"""
    if spec.variant == "power_of_log":
        base = np.e + t
        g = np.log(base)
        g1 = 1.0 / base
        g2 = -g1 * g1
        return g, g1, g2
    # iterated_log
    base = np.exp(np.e) + t
    q = np.log(base)
    q1 = 1.0 / base
    q2 = -q1 * q1
    g = np.log(q)
    g1 = q1 / q
    g2 = q2 / q - (q1 / q) ** 2
    return g, g1, g2


class EvalLCalculation(BaseCalculation):
    """Evaluate L, L', L'' for a SlowlyVaryingSpec"""

    @property
    def calculation_name(self) -> str:
        return "eval_L"

    @property
    def description(self) -> str:
        return "Evaluates the slowly varying function L"

    def validate_inputs(self, spec: SlowlyVaryingSpec = None, t: ArrayLike = None, **kwargs) -> bool:
        if spec is None or t is None:
            return False
        return bool(np.all(np.asarray(t, dtype=float) >= 0.0))

    def calculate(self, spec: SlowlyVaryingSpec, t: ArrayLike, **kwargs) -> ArrayLike:
        """
        Evaluate L(t).

        Args:
            spec: Slowly varying function
            t: Nonnegative scalar or array

        Returns:
            L(t) with the shape of t
        """
        return self.derivatives(spec, t)[0]

    def derivatives(self, spec: SlowlyVaryingSpec, t: ArrayLike) -> Tuple[ArrayLike, ArrayLike, ArrayLike]:
        """Return (L, L', L'') at t; derivatives vanish below t_min"""
        scalar = np.ndim(t) == 0
        t_arr = np.asarray(t, dtype=float)
        frozen = t_arr < spec.t_min
        t_eval = np.where(frozen, spec.t_min, t_arr)

        if spec.variant == "constant":
            L = np.full_like(t_eval, spec.c)
            dL = np.zeros_like(t_eval)
            ddL = np.zeros_like(t_eval)
        else:
            beta = spec.beta
            g, g1, g2 = _inner_log(spec, t_eval)
            L = g ** beta
            dL = beta * g ** (beta - 1.0) * g1
            ddL = beta * (beta - 1.0) * g ** (beta - 2.0) * g1 * g1 + beta * g ** (beta - 1.0) * g2
            dL = np.where(frozen, 0.0, dL)
            ddL = np.where(frozen, 0.0, ddL)

        if scalar:
            return float(L), float(dL), float(ddL)
        return L, dL, ddL

    def log_value(self, spec: SlowlyVaryingSpec, t: float) -> float:
        """log L(t) for a scalar t; plain math for use inside quadrature integrands"""
        t = max(t, spec.t_min)
        if spec.variant == "constant":
            return math.log(spec.c)
        if spec.variant == "power_of_log":
            return spec.beta * math.log(math.log(math.e + t))
        return spec.beta * math.log(math.log(math.log(_E_TO_E + t)))

    def log_derivatives(self, spec: SlowlyVaryingSpec, t: ArrayLike) -> Tuple[ArrayLike, ArrayLike]:
        """Return ((log L)', (log L)'') at t"""
        L, dL, ddL = self.derivatives(spec, t)
        ratio = np.asarray(dL) / np.asarray(L)
        second = np.asarray(ddL) / np.asarray(L) - ratio ** 2
        if np.ndim(t) == 0:
            return float(ratio), float(second)
        return ratio, second


# Singleton instance
eval_l_calc = EvalLCalculation()
