"""
Parabolic Factor Tail
Windowed Poincare sums of a parabolic factor against R^alpha / L(R)

LOGIC:
  - Window [R, R + Delta) in distance; the exponents n with d(n tau) in the
    window come from the inverse of the distance table
  - value(R) = (R^alpha / L(R)) * sum_{R <= d(n tau) < R + Delta} e^{-delta d(n tau)}
  - two-sided factors (n in Z \\ {0}) double the one-sided sum
  - Windows with more than EXPLICIT_CAP exponents are summed as an integral
    in log n (the summand varies by O(1/n) between neighbours)
  - reference: 2^(alpha - 1) Delta / tau, doubled when two-sided

ROLE:
  Empirical constant c_j of the parabolic factor tails; the plateau of
  value(R) / Delta at the largest reliable R feeds the counting module.

SIGNIFICANCE:
  delta = 1/2 is the critical exponent of the parabolic factor; for
  delta > 1/2 the values die like e^{(1/2 - delta) R}.
"""
import logging
import math
from typing import Iterable, Optional, Tuple

import numpy as np

from calculation_engines.clairaut_calculations.distance_table_calc import DistanceTable, distance_table_calc
from calculation_engines.interfaces.base_calculation import BaseCalculation
from calculation_engines.interfaces.calculation_input_models import CuspProfile, QuadratureSpec
from calculation_engines.interfaces.calculation_output_models import FactorTailResult
from calculation_engines.svf_calculations.eval_l_calc import eval_l_calc
from shared.middleware.error_handler import DomainError

logger = logging.getLogger(__name__)

EXPLICIT_CAP = 2_000_000


class FactorTailCalculation(BaseCalculation):
    """Empirical tail functional of one parabolic factor"""

    @property
    def calculation_name(self) -> str:
        return "factor_tail"

    @property
    def description(self) -> str:
        return "Windowed parabolic Poincare sums normalized by R^alpha / L(R)"

    def validate_inputs(self, profile: CuspProfile = None, delta: float = None,
                        Delta: float = None, **kwargs) -> bool:
        return profile is not None and delta is not None and delta > 0 and Delta is not None and Delta > 0

    def window_sum(self, table: DistanceTable, delta: float, R: float, Delta: float,
                   tau: float = 1.0) -> Tuple[float, int]:
        """One-sided sum of e^{-delta d(n tau)} over R <= d < R + Delta, and the exponent count"""
        if R < table.d[0] or R + Delta > table.d_max:
            raise DomainError(
                "Tail window outside the cached distance range",
                {"R": R, "Delta": Delta, "d_range": [float(table.d[0]), table.d_max]}
            )
        n_lo = max(1, math.ceil(table.translation(R) / tau))
        n_hi = math.floor(table.translation(R + Delta) / tau)
        # Interpolation may put a boundary exponent one off; the mask below decides
        n_lo = max(1, n_lo - 1)
        n_hi = min(n_hi + 1, math.floor(table.x_max / tau))
        if n_hi < n_lo:
            return 0.0, 0

        if n_hi - n_lo + 1 <= EXPLICIT_CAP:
            n = np.arange(n_lo, n_hi + 1, dtype=float)
            n = n[n * tau >= table.x_min]
            d = table.distance(n * tau)
            mask = (d >= R) & (d < R + Delta)
            return float(np.sum(np.exp(-delta * d[mask]))), int(np.count_nonzero(mask))

        lo = math.log(table.translation(R))
        hi = math.log(table.translation(R + Delta))
        count = int(math.floor(math.exp(hi) / tau) - math.ceil(math.exp(lo) / tau) + 1)
        return table.exp_moment(delta, lo, hi) / tau, count

    def calculate(self, profile: CuspProfile, delta: float, Delta: float, R_grid: Iterable[float],
                  tau: float = 1.0, two_sided: bool = False, table: Optional[DistanceTable] = None,
                  cusp_height: float = 0.0, quad_spec: QuadratureSpec = QuadratureSpec(),
                  **kwargs) -> FactorTailResult:
        """
        Evaluate the tail functional on an R grid.

        Args:
            profile: Cusp profile of the factor
            delta: Exponent of the Poincare sum
            Delta: Window width
            R_grid: Window starts
            tau: Horocyclic translation of the generator
            two_sided: Sum over n and -n
            table: Distance table; built from the profile when omitted

        Returns:
            FactorTailResult
        """
        if not delta > 0 or not Delta > 0:
            raise DomainError("factor_tail needs delta > 0 and Delta > 0", {"delta": delta, "Delta": Delta})
        if table is None:
            table = distance_table_calc.calculate(profile=profile, cusp_height=cusp_height, quad_spec=quad_spec)

        side = 2.0 if two_sided else 1.0
        R_values, values, counts = [], [], []
        for R in R_grid:
            R = float(R)
            total, count = self.window_sum(table, delta, R, Delta, tau)
            scale = R ** profile.alpha / eval_l_calc.calculate(spec=profile.L, t=R)
            R_values.append(R)
            values.append(side * total * scale)
            counts.append(int(side) * count)

        reference = 2.0 ** (profile.alpha - 1.0) * Delta * side / tau
        logger.info("Factor tail evaluated", extra={"delta": delta, "Delta": Delta, "points": len(values),
                                                    "reference": reference})
        return FactorTailResult(delta=delta, Delta=Delta, R=R_values, values=values,
                                reference=reference, counts=counts)

    def plateau(self, result: FactorTailResult, window: int = 5) -> Tuple[float, float]:
        """
        c_j estimate from the last `window` values.

        Returns:
            (mean of value / Delta, max/min - 1 over the window)
        """
        tail = np.asarray(result.values[-window:], dtype=float) / result.Delta
        if tail.size == 0 or np.any(tail <= 0):
            raise DomainError("Plateau needs positive tail values", {"values": result.values[-window:]})
        return float(np.mean(tail)), float(tail.max() / tail.min() - 1.0)


# Singleton instance
factor_tail_calc = FactorTailCalculation()
