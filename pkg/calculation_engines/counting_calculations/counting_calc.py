"""
Orbit Counting and Asymptotic Fit
N(R) = #{gamma : d(o, gamma o) <= R} against C L(R) / R^alpha e^{delta R}

LOGIC:
  - One ball enumeration at the largest R; every smaller R is a
    searchsorted count on the sorted distances, so N is nondecreasing
  - C_hat(R)     = N(R) R^alpha / (L(R) e^{delta R})
    C_div_hat(R) = N(R) R^{2 - alpha} L(R) e^{-delta R}   (diagnostic only)
  - Fit window: the top third of the grid (at least 3 points)
      C_hat    = median over the window
      drift    = fitted slope * window length / C_hat
      flagged  = |drift| > DRIFT_FLAG

ROLE:
  The count and fit subcommands.
"""
import logging
import math
from typing import Iterable, Optional

import numpy as np

from calculation_engines.coding_calculations.ball_calc import ball_enumeration
from calculation_engines.counting_calculations.level_constant_calc import counting_shape
from calculation_engines.interfaces.base_calculation import BaseCalculation
from calculation_engines.interfaces.calculation_input_models import DistanceModel, SchottkyData, SlowlyVaryingSpec
from calculation_engines.interfaces.calculation_output_models import CountReport, FitResult
from calculation_engines.svf_calculations.eval_l_calc import eval_l_calc
from calculation_engines.transfer_calculations.critical_calc import factor_exponent
from shared.middleware.error_handler import BudgetExceededError, DomainError

logger = logging.getLogger(__name__)

DRIFT_FLAG = 0.1
MIN_FIT_POINTS = 3


def normalized_ratios(R: np.ndarray, N: np.ndarray, delta: float, alpha: float, L: SlowlyVaryingSpec):
    """(C_hat, C_div_hat) arrays"""
    L_R = np.asarray(eval_l_calc.calculate(spec=L, t=R), dtype=float)
    C_hat = N * R ** alpha / (L_R * np.exp(delta * R))
    C_div = N * R ** (2.0 - alpha) * L_R * np.exp(-delta * R)
    return C_hat, C_div


def relative_drift(R: np.ndarray, values: np.ndarray) -> float:
    """Fitted slope times the window length, relative to the median"""
    centre = float(np.median(values))
    if centre == 0.0:
        return 0.0
    slope = float(np.polyfit(R, values, 1)[0])
    return slope * float(R[-1] - R[0]) / centre


class OrbitCountingCalculation(BaseCalculation):
    """Brute-force orbit counts and the fit of their asymptotic shape"""

    @property
    def calculation_name(self) -> str:
        return "orbit_counting"

    @property
    def description(self) -> str:
        return "N(R) by ball enumeration and the C L(R) R^-alpha e^(delta R) fit"

    def validate_inputs(self, data: SchottkyData = None, model: DistanceModel = None, R_grid=None,
                        **kwargs) -> bool:
        return data is not None and model is not None and R_grid is not None and len(list(R_grid)) > 0

    def calculate(self, data: SchottkyData, model: DistanceModel, R_grid: Iterable[float], **kwargs) -> CountReport:
        return self.brute_count(data, model, R_grid, **kwargs)

    # ------------------------------------------------------------------
    # Counting
    # ------------------------------------------------------------------

    def brute_count(self, data: SchottkyData, model: DistanceModel, R_grid: Iterable[float],
                    delta: Optional[float] = None, node_budget: int = 5_000_000, workers: int = 1,
                    seed: int = 0, c_prune: Optional[float] = None) -> CountReport:
        """
        Exact orbit counts over an R grid.

        Args:
            data: Validated Schottky data
            model: Distance model
            R_grid: Radii (sorted internally)
            delta: Exponent of the normalization (default: the factor exponent)
            node_budget: Enumeration node budget
            workers: Processes of the enumeration

        Returns:
            CountReport; completeness "partial" when the budget ran out
        """
        R = np.sort(np.asarray(list(R_grid), dtype=float))
        if R.size == 0:
            raise DomainError("Empty R grid", {})
        delta = factor_exponent(data) if delta is None else float(delta)
        try:
            ball = ball_enumeration.enumerate_ball(data, model, float(R[-1]), c_prune=c_prune,
                                                   node_budget=node_budget, workers=workers, seed=seed)
        except BudgetExceededError as exc:
            logger.warning("Counting on a partial enumeration", extra={"R": float(R[-1]), "frontier": exc.frontier})
            ball = exc.partial

        distances = np.sort(np.asarray(ball.distances, dtype=float))
        N = np.searchsorted(distances, R, side="right")
        alpha, L = counting_shape(data, model)
        C_hat, C_div = normalized_ratios(R, N.astype(float), delta, alpha, L)
        logger.info("Orbit counts", extra={"R_max": float(R[-1]), "N_max": int(N[-1]),
                                           "completeness": ball.completeness, "nodes": ball.nodes})
        return CountReport(R=[float(r) for r in R], N=[int(n) for n in N], C_hat=[float(c) for c in C_hat],
                           C_div_hat=[float(c) for c in C_div], delta=delta, completeness=ball.completeness,
                           c_prune=ball.c_prune, nodes=ball.nodes)

    # ------------------------------------------------------------------
    # Fit
    # ------------------------------------------------------------------

    def asymptotic_fit(self, report: CountReport, delta: float, alpha: float, L: SlowlyVaryingSpec) -> FitResult:
        """
        C_hat and its drift over the top third of the grid.

        Raises:
            DomainError: fewer than 3 points in the window
        """
        R = np.asarray(report.R, dtype=float)
        N = np.asarray(report.N, dtype=float)
        window = int(math.ceil(R.size / 3.0))
        if window < MIN_FIT_POINTS:
            raise DomainError("Fit needs at least 3 points in the top third of the grid",
                              {"points": int(R.size), "window": window})
        R_w, N_w = R[-window:], N[-window:]
        C_hat, C_div = normalized_ratios(R_w, N_w, delta, alpha, L)
        drift = relative_drift(R_w, C_hat)
        drift_div = relative_drift(R_w, C_div)
        result = FitResult(
            C_hat=float(np.median(C_hat)), drift=drift,
            C_div_hat=float(np.median(C_div)), drift_div=drift_div,
            variation=float(np.max(C_hat) / np.min(C_hat) - 1.0) if np.min(C_hat) > 0 else math.inf,
            window=[float(r) for r in R_w], flagged=abs(drift) > DRIFT_FLAG,
        )
        logger.info("Asymptotic fit", extra={"C_hat": result.C_hat, "drift": drift, "drift_div": drift_div,
                                             "flagged": result.flagged})
        return result


# Singleton instance
orbit_counting_calc = OrbitCountingCalculation()
