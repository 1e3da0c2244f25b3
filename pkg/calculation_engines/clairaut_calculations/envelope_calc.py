"""
Excursion Envelope Check
Checks 0 <= f_n(s) <= e^{-s/2} on [0, h_n]

LOGIC:
  - h_n from the excursion solver above the glue end
  - f_n on an evenly spaced grid of [0, h_n]
  - Rows with n below the threshold n_0 are reported, never counted as failures
"""
import logging
from typing import Iterable, Optional, Tuple

import numpy as np

from calculation_engines.clairaut_calculations.clairaut_integrals_calc import clairaut_integrals_calc
from calculation_engines.clairaut_calculations.geodesic_calc import CuspGeodesicCalculation, cusp_geodesic_calc
from calculation_engines.interfaces.base_calculation import BaseCalculation
from calculation_engines.interfaces.calculation_input_models import CuspProfile
from calculation_engines.interfaces.calculation_output_models import EnvelopeReport, EnvelopeRow

logger = logging.getLogger(__name__)

ENVELOPE_TOL = 1e-12


class EnvelopeCheckCalculation(BaseCalculation):

    def __init__(self, solver: CuspGeodesicCalculation = cusp_geodesic_calc):
        self.solver = solver

    @property
    def calculation_name(self) -> str:
        return "envelope_check"

    def calculate(self, profile: CuspProfile, n_list: Iterable[float], n_0: float = 1e3,
                  grid_points: int = 1000, **kwargs) -> EnvelopeReport:
        rows = []
        first_violation: Optional[Tuple[float, float]] = None

        for n in n_list:
            n = float(n)
            below = n < n_0
            h, _ = self.solver.height_for_n(profile, n, base=profile.glue_end)
            s = np.linspace(0.0, h, grid_points)
            f = clairaut_integrals_calc.f_n(profile, h, s)
            excess = f - np.exp(-s / 2.0)
            worst = int(np.argmax(excess))
            ok = bool(excess[worst] <= ENVELOPE_TOL and np.all(f >= 0.0))
            rows.append(EnvelopeRow(n=n, h_n=h, max_excess=float(excess[worst]),
                                    below_threshold=below, passed=ok))
            if not ok and not below and first_violation is None:
                first_violation = (n, float(s[worst]))

        passed = all(row.passed for row in rows if not row.below_threshold)
        logger.info("Envelope check", extra={"rows": len(rows), "passed": passed})
        return EnvelopeReport(passed=passed, rows=rows, first_violation=first_violation)


# Singleton instance
envelope_check_calc = EnvelopeCheckCalculation()
