"""
Potter Bound Report
Smallest constant C_theta with 1/(C t^theta) <= L(t) <= C t^theta on a grid

LOGIC:
  - At each grid point the required constant is
    max(L(t) / t^theta, 1 / (L(t) t^theta))
  - C_theta is the maximum over the grid, floored at 1
  - Grid points whose requirement exceeds the cap are violations
  - The threshold is the largest t on a long reference grid where the
    requirement still exceeds the cap; beyond it the bound holds

ROLE:
  Quantifies the slow-variation margin used by the counting tail bounds.
"""
from typing import List, Optional, Sequence

import numpy as np

from calculation_engines.interfaces.base_calculation import BaseCalculation
from calculation_engines.interfaces.calculation_input_models import SlowlyVaryingSpec
from calculation_engines.interfaces.calculation_output_models import PotterReport
from calculation_engines.svf_calculations.eval_l_calc import eval_l_calc
from shared.middleware.error_handler import DomainError


class PotterBoundCalculation(BaseCalculation):
    """Compute the Potter constant of L on a grid"""

    DEFAULT_CAP = 10.0
    REFERENCE_LOG10_MAX = 15.0

    @property
    def calculation_name(self) -> str:
        return "potter_report"

    @property
    def description(self) -> str:
        return "Two-sided Potter bound constant of L on a grid"

    def validate_inputs(self, spec: SlowlyVaryingSpec = None, theta: float = None, **kwargs) -> bool:
        return spec is not None and theta is not None and theta > 0

    def _requirement(self, spec: SlowlyVaryingSpec, theta: float, t: np.ndarray) -> np.ndarray:
        L = np.asarray(eval_l_calc.calculate(spec=spec, t=t), dtype=float)
        power = t ** theta
        return np.maximum(L / power, 1.0 / (L * power))

    def calculate(
        self,
        spec: SlowlyVaryingSpec,
        theta: float,
        t_grid: Sequence[float],
        cap: float = DEFAULT_CAP,
        **kwargs
    ) -> PotterReport:
        """
        Build the Potter report.

        Args:
            spec: Slowly varying function
            theta: Potter exponent (> 0)
            t_grid: Grid values, all >= 1
            cap: Largest acceptable constant

        Returns:
            PotterReport
        """
        t = np.asarray(list(t_grid), dtype=float)
        if t.size == 0:
            raise DomainError("Potter report needs a nonempty grid", {"theta": theta})
        if np.any(t < 1.0):
            raise DomainError("Potter grid values must be >= 1", {"min_t": float(t.min())})

        need = self._requirement(spec, theta, t)
        c_theta = float(max(1.0, need.max()))
        violations: List[float] = [float(v) for v in t[need > cap]]

        return PotterReport(
            theta=theta,
            C_theta=c_theta,
            cap=cap,
            violations=violations,
            threshold=self.threshold(spec, theta, cap)
        )

    def threshold(self, spec: SlowlyVaryingSpec, theta: float, cap: float = DEFAULT_CAP) -> Optional[float]:
        """Largest t on the reference grid where the requirement exceeds cap"""
        reference = np.logspace(0.0, self.REFERENCE_LOG10_MAX, 4000)
        need = self._requirement(spec, theta, reference)
        bad = reference[need > cap]
        return float(bad.max()) if bad.size else None


# Singleton instance
potter_bound_calc = PotterBoundCalculation()
