"""
Schottky Validation
Ping-pong and disjointness checks by arc endpoint images

LOGIC:
  - Mobius maps preserve the cyclic order of the boundary circle, so the
    image of an open gap (a, b) of the complement of F_j under g^n is the
    counterclockwise arc (g^n a, g^n b); it must sit inside one arc of F_j
  - Checked for 1 <= |n| <= N_check; margins are angle distances to the
    arc ends (0 is allowed: the sets are closed)
  - Arcs of different factors must be disjoint with positive gaps and the
    boundary base point x0 must avoid every arc
  - property_margin: C_F = max over sampled (g, x), x outside F_{l_g}, of
    d(o, g o) - b(g, x)

ROLE:
  Gatekeeper for every run; elliptic generators are rejected here.
"""
import logging
from typing import Iterable, List, Tuple

import numpy as np

from calculation_engines.hyperbolic_calculations.mobius_calc import hyperbolic_geometry
from calculation_engines.hyperbolic_calculations.schottky_calc import (
    ARC_TOL, TWO_PI, arc_contains, arc_length, arc_offset, complement_arcs, factor_index,
)
from calculation_engines.interfaces.base_calculation import BaseCalculation
from calculation_engines.interfaces.calculation_input_models import BoundaryPoint, Isometry, SchottkyData
from calculation_engines.interfaces.calculation_output_models import (
    MarginReport, SchottkyValidationReport, ValidationRow,
)
from shared.middleware.error_handler import SchottkyValidationError

logger = logging.getLogger(__name__)


def _signed_offset(arc, theta) -> float:
    off = float(arc_offset(arc, theta))
    return off - TWO_PI if off > TWO_PI - ARC_TOL else off


def arc_gap(first, second) -> float:
    """Angular gap between two arcs, negative when they meet"""
    if arc_contains(first, second[0]) or arc_contains(second, first[0]):
        return -1.0
    return float(min(arc_offset(first, second[0]) - arc_length(first),
                     arc_offset(second, first[0]) - arc_length(second)))


class SchottkyValidation(BaseCalculation):

    @property
    def calculation_name(self) -> str:
        return "validate_schottky"

    def _image_margin(self, arcs, start: float, end: float) -> float:
        """Best margin of the counterclockwise arc (start, end) inside one of the arcs"""
        best = -np.inf
        for arc in arcs:
            a = _signed_offset(arc, start)
            b = _signed_offset(arc, end)
            if b < a - ARC_TOL:
                continue
            # high powers collapse a gap onto the attracting point
            b = max(a, b)
            best = max(best, min(a, arc_length(arc) - b))
        return best

    def calculate(self, data: SchottkyData, N_check: int = 6, raise_on_failure: bool = False,
                  **kwargs) -> SchottkyValidationReport:
        """
        Validate the ping-pong configuration.

        Args:
            data: Schottky data
            N_check: Largest exponent tested per factor
            raise_on_failure: Raise SchottkyValidationError instead of reporting

        Returns:
            SchottkyValidationReport
        """
        failures: List[str] = []
        rows: List[ValidationRow] = []

        for j, factor in enumerate(data.factors):
            kind = factor.generator.kind
            if kind != factor.kind:
                failures.append(f"factor {factor.name}: generator is {kind}, declared {factor.kind}")

        gaps = []
        for j, fj in enumerate(data.factors):
            for k in range(j + 1, len(data.factors)):
                for a1 in fj.arcs:
                    for a2 in data.factors[k].arcs:
                        gaps.append(arc_gap(a1, a2))
        min_gap = min(gaps) if gaps else float(np.pi)
        disjoint = min_gap > 0.0
        if not disjoint:
            failures.append("ping-pong arcs of different factors overlap")

        x0_outside = bool(factor_index(data, data.x0.theta)[0] < 0)
        if not x0_outside:
            failures.append("boundary base point x0 lies in a ping-pong arc")

        for j, factor in enumerate(data.factors):
            if factor.generator.kind not in ("parabolic", "hyperbolic"):
                continue
            gaps_j = complement_arcs(factor.arcs)
            for n in [m for k in range(1, N_check + 1) for m in (k, -k)]:
                g = factor.element(n)
                worst = np.inf
                left = right = 0.0
                for start, end in gaps_j:
                    img = g.apply_theta(np.array([start, end]))
                    margin = self._image_margin(factor.arcs, img[0], img[1])
                    if margin < worst:
                        worst = margin
                        left = BoundaryPoint.from_theta(img[0]).as_float()
                        right = BoundaryPoint.from_theta(img[1]).as_float()
                ok = bool(worst >= -ARC_TOL)
                rows.append(ValidationRow(factor=j, power=n, image_left=left, image_right=right,
                                          margin=float(worst) if np.isfinite(worst) else -1.0, ok=ok))
                if not ok:
                    failures.append(f"factor {factor.name} power {n}: image [{left:.6g}, {right:.6g}] leaves F")

        report = SchottkyValidationReport(
            passed=not failures, disjoint=disjoint, min_gap=float(min_gap),
            x0_outside=x0_outside, rows=rows, failures=failures,
        )
        logger.info("Schottky validation", extra={"passed": report.passed, "min_gap": report.min_gap,
                                                  "rows": len(rows)})
        if raise_on_failure and not report.passed:
            raise SchottkyValidationError(
                "Schottky data failed validation",
                {"failures": failures, "min_gap": report.min_gap}
            )
        return report

    def property_margin(self, data: SchottkyData, elements: Iterable[Tuple[Isometry, int]],
                        sample_theta) -> MarginReport:
        """
        Empirical constant of d(o, g o) - C <= b(g, x) <= d(o, g o).

        Args:
            data: Schottky data
            elements: (g, factor index of the letter acting first) pairs
            sample_theta: Boundary sample in angle coordinates

        Returns:
            MarginReport
        """
        sample = np.asarray(sample_theta, dtype=float)
        owner = factor_index(data, sample)
        C_F, upper, pairs = 0.0, -np.inf, 0
        for g, last in elements:
            x = sample[owner != last]
            if x.size == 0:
                continue
            d = hyperbolic_geometry.dist(data.o, g.apply(data.o))
            b = np.asarray(hyperbolic_geometry.cocycle_b(g, x, data.o))
            C_F = max(C_F, float(np.max(d - b)))
            upper = max(upper, float(np.max(b - d)))
            pairs += int(x.size)
        return MarginReport(C_F=C_F, upper_violation=upper if pairs else 0.0, pairs=pairs)


# Singleton instance
schottky_validation = SchottkyValidation()
