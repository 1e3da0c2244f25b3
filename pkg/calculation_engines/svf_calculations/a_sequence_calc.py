"""
Tail Sequence a_k
Solves a_k^beta / L(a_k) = k for the level-k tail estimates

LOGIC:
  - Work in y = log a: F(y) = beta*y - log L(e^y) - log k
  - F is strictly increasing on the built-in family, so a doubling
    bracket on [0, y_hi] followed by Brent's method is safe
  - Iteration cap 200; relative residual <= 1e-10

ROLE:
  The sequence splits the level-k sum of the counting tail bound into
  the regimes d <= a_k and d > a_k.
"""
import math

from scipy.optimize import brentq

from calculation_engines.interfaces.base_calculation import BaseCalculation
from calculation_engines.interfaces.calculation_input_models import SlowlyVaryingSpec
from calculation_engines.svf_calculations.eval_l_calc import eval_l_calc
from shared.middleware.error_handler import DomainError, NumericError


class ASequenceCalculation(BaseCalculation):
    """Root a_k >= 1 of a^beta / L(a) = k"""

    MAX_ITER = 200
    Y_CAP = 700.0

    @property
    def calculation_name(self) -> str:
        return "a_sequence"

    def validate_inputs(self, spec: SlowlyVaryingSpec = None, beta: float = None, k: int = None, **kwargs) -> bool:
        return spec is not None and beta is not None and k is not None and 0.0 < beta < 1.0 and k >= 1

    def calculate(self, spec: SlowlyVaryingSpec, beta: float, k: int, **kwargs) -> float:
        """
        Compute a_k.

        Args:
            spec: Slowly varying function
            beta: Exponent in (0, 1)
            k: Positive integer level

        Returns:
            a_k
        """
        if not 0.0 < beta < 1.0:
            raise DomainError("a_sequence needs 0 < beta < 1", {"beta": beta})
        log_k = math.log(k)

        def residual(y: float) -> float:
            return beta * y - math.log(eval_l_calc.calculate(spec=spec, t=math.exp(y))) - log_k

        lo, hi = 0.0, 1.0
        if residual(lo) > 0.0:
            raise NumericError(
                "a_sequence has no root a >= 1",
                {"bracket": [1.0, 1.0], "k": k, "beta": beta}
            )
        iterations = 0
        while residual(hi) < 0.0:
            lo, hi = hi, 2.0 * hi
            iterations += 1
            if hi > self.Y_CAP or iterations > self.MAX_ITER:
                raise NumericError(
                    "a_sequence bracket search did not converge",
                    {"bracket": [math.exp(lo), math.exp(min(hi, self.Y_CAP))], "k": k}
                )

        try:
            y = brentq(residual, lo, hi, xtol=1e-15, maxiter=self.MAX_ITER)
        except RuntimeError as e:
            raise NumericError(
                f"a_sequence root-finding failed: {e}",
                {"bracket": [math.exp(lo), math.exp(hi)], "k": k}
            )
        return math.exp(y)


# Singleton instance
a_sequence_calc = ASequenceCalculation()
