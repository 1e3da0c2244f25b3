"""
Doob Transform
Markov weights p_s(gamma, x) = rho^{-k} h(gamma x) / h(x) w_s(gamma, x)

LOGIC:
  - h is the power-iteration eigenfunction: its node value at x0, the
    piecewise-linear interpolant on the arcs (orbit points g x0 included,
    as in the operator rows), and one application of L_s / rho at gap
    points outside every arc
  - Level sums are built by pushing a weighted frontier through the
    alphabet: a point y of level j carries sum_{gamma in Gamma(j), gamma x = y} p
    and spawns a y with weight p(a, y) for every admissible letter a
  - The one-step sum S1(y) = sum_a p(a, y) misses the folded tail
    tail(y) / (rho h(y)) and the interpolation defect of the eigen-equation;
    the level-k bar is the p-weighted sum of tail + defect over the levels
    below k

ROLE:
  Markov normalization checks and the Doob factors of the counting
  renewal operator.
"""
import logging
import math
from dataclasses import dataclass
from typing import List, Optional

import numpy as np

from calculation_engines.coding_calculations.cocycle_calc import extended_cocycle
from calculation_engines.coding_calculations.words_calc import compose, letter_isometry
from calculation_engines.hyperbolic_calculations.mobius_calc import hyperbolic_geometry as geo
from calculation_engines.interfaces.base_calculation import BaseCalculation
from calculation_engines.interfaces.calculation_input_models import ExtendedPoint, Word
from calculation_engines.interfaces.calculation_output_models import NormalizationReport, SpectralResult
from calculation_engines.transfer_calculations.operator_calc import (
    TransferOperator, point_owner, transfer_assembly,
)
from calculation_engines.transfer_calculations.spectral_calc import POSITIVITY_FLOOR
from shared.middleware.error_handler import BudgetExceededError, DomainError, NumericError

logger = logging.getLogger(__name__)

POINT_BUDGET = 5_000_000


@dataclass
class _Frontier:
    theta: np.ndarray
    owner: np.ndarray
    prob: np.ndarray
    h: np.ndarray
    # interior points g o of an orbit frontier, None on the boundary
    z: Optional[np.ndarray] = None

    @property
    def size(self) -> int:
        return int(self.theta.size)


class DoobTransform(BaseCalculation):
    """Eigenfunction values, Doob weights and their level normalization"""

    @property
    def calculation_name(self) -> str:
        return "doob_weights"

    @property
    def description(self) -> str:
        return "Markov weights p_s from rho_s and h_s"

    def calculate(self, op: TransferOperator, spectral: SpectralResult, word: Word, x: ExtendedPoint,
                  **kwargs) -> float:
        return self.doob_weights(op, spectral, word, x)

    def _check(self, spectral: SpectralResult) -> None:
        if spectral.h is None or not math.isfinite(spectral.rho):
            raise DomainError("Doob weights need a finite rho_s and its eigenfunction", {"s": spectral.s})

    def eigenfunction_at(self, op: TransferOperator, spectral: SpectralResult, x: ExtendedPoint) -> float:
        """h_s(x) on the extended limit set"""
        self._check(spectral)
        if x.is_orbit and x.factor is None:
            return float(spectral.h[op.mesh.x0_index])
        owner = point_owner(op.data, x)
        if owner >= 0:
            return float(op.mesh.interpolate(spectral.h, x.theta, owner)[0])
        return transfer_assembly.apply_at(op, spectral.h, x) / spectral.rho

    def doob_weights(self, op: TransferOperator, spectral: SpectralResult, word: Word,
                     x: ExtendedPoint) -> float:
        """
        p_s(gamma, x) for a word of length k.

        Raises:
            NumericError: h(x) below the positivity floor
        """
        self._check(spectral)
        if not word.letters:
            return 1.0
        h_x = self.eigenfunction_at(op, spectral, x)
        if h_x <= POSITIVITY_FLOOR:
            raise NumericError("Eigenfunction below the positivity floor at x", {"theta": x.theta, "h": h_x})
        w = transfer_assembly.weight_w(op.s, word, x, op.model, op.data)
        if w == 0.0:
            return 0.0
        g = compose(op.data, word)
        if x.is_orbit:
            image = ExtendedPoint(theta=float(g.apply_theta(x.theta)), g=g @ x.g, factor=word.first_factor)
        else:
            image = ExtendedPoint(theta=float(g.apply_theta(x.theta)))
        h_image = self.eigenfunction_at(op, spectral, image)
        return spectral.rho ** (-word.length) * h_image / h_x * w

    # ------------------------------------------------------------------
    # Level sums
    # ------------------------------------------------------------------

    def _tail_ratio(self, op: TransferOperator, spectral: SpectralResult, front: _Frontier) -> np.ndarray:
        """Folded letters at each frontier point, relative to rho h(y)"""
        data = op.data
        total = np.zeros(front.size)
        for value, tail in zip(op.tail_values(), op.tails):
            sel = front.owner != tail.factor
            if not np.any(sel):
                continue
            xi = data.factors[tail.factor].fixed_points[tail.gromov_point]
            if front.z is None:
                g = geo.gromov(xi, front.theta[sel], data.o)
            else:
                g = geo.gromov_interior(xi, front.z[sel], data.o)
            at_fixed = spectral.h[op.mesh.fixed_nodes[(tail.factor, tail.fixed_point)]]
            total[sel] += value * np.exp(2.0 * op.s * np.asarray(g)) * at_fixed
        return total / (spectral.rho * front.h)

    def _advance(self, op: TransferOperator, spectral: SpectralResult, front: _Frontier):
        """Next frontier and the one-step sums S1 of the current one"""
        data, model, s, rho = op.data, op.model, op.s, spectral.rho
        s1 = np.zeros(front.size)
        parts = []
        for letter in op.letters:
            sel = front.owner != letter.factor
            if not np.any(sel):
                continue
            a = letter_isometry(data, letter)
            if front.z is None:
                b = extended_cocycle.boundary_letter_cocycle(data, model, letter, front.theta[sel], a)
            else:
                b = extended_cocycle.orbit_letter_cocycle(data, model, letter, front.z[sel], a)
            image = a.apply_theta(front.theta[sel])
            h_image = op.mesh.interpolate(spectral.h, image, letter.factor)
            ratio = np.exp(-s * np.asarray(b, dtype=float)) * h_image / (rho * front.h[sel])
            s1[sel] += ratio
            parts.append(_Frontier(
                theta=np.asarray(image, dtype=float),
                owner=np.full(image.shape, letter.factor, dtype=int),
                prob=front.prob[sel] * ratio,
                h=h_image,
                z=None if front.z is None else a.apply(front.z[sel]),
            ))
        if not parts:
            return _Frontier(np.empty(0), np.empty(0, dtype=int), np.empty(0), np.empty(0), None), s1
        nxt = _Frontier(
            theta=np.concatenate([p.theta for p in parts]),
            owner=np.concatenate([p.owner for p in parts]),
            prob=np.concatenate([p.prob for p in parts]),
            h=np.concatenate([p.h for p in parts]),
            z=None if front.z is None else np.concatenate([p.z for p in parts]),
        )
        return nxt, s1

    def level_normalization(self, op: TransferOperator, spectral: SpectralResult, x: ExtendedPoint,
                            k_max: int, point_budget: int = POINT_BUDGET) -> List[NormalizationReport]:
        """
        sum_{gamma in Gamma(k)} p_s(gamma, x) for k = 0 ... k_max, with bars.

        Args:
            op: Operator at the exponent of spectral
            spectral: rho_s and h_s
            x: Start point
            k_max: Deepest level
            point_budget: Largest frontier

        Returns:
            One NormalizationReport per level
        """
        self._check(spectral)
        h_x = self.eigenfunction_at(op, spectral, x)
        if h_x <= POSITIVITY_FLOOR:
            raise NumericError("Eigenfunction below the positivity floor at x", {"theta": x.theta, "h": h_x})
        front = _Frontier(
            theta=np.array([x.theta]),
            owner=np.array([point_owner(op.data, x)], dtype=int),
            prob=np.ones(1),
            h=np.array([h_x]),
            z=np.array([x.g.apply(op.data.o)], dtype=complex) if x.is_orbit else None,
        )
        reports = [NormalizationReport(k=0, total=1.0, tail_bar=0.0, defect_bar=0.0)]
        tail_bar = defect_bar = 0.0
        for k in range(1, k_max + 1):
            nxt, s1 = self._advance(op, spectral, front)
            tail = self._tail_ratio(op, spectral, front)
            defect = np.abs(s1 + tail - 1.0)
            tail_bar += float(np.sum(front.prob * tail))
            defect_bar += float(np.sum(front.prob * defect))
            total = float(np.sum(nxt.prob))
            reports.append(NormalizationReport(k=k, total=total, tail_bar=tail_bar, defect_bar=defect_bar))
            logger.debug("Doob level sum", extra={"k": k, "total": total, "points": nxt.size,
                                                  "tail_bar": tail_bar, "defect_bar": defect_bar})
            if k < k_max and nxt.size > point_budget:
                raise BudgetExceededError("Doob frontier exceeded its point budget", partial=reports,
                                          frontier=nxt.size, details={"k": k, "budget": point_budget})
            front = nxt
        return reports


# Singleton instance
doob_transform = DoobTransform()
