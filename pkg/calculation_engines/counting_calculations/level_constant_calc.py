"""
Level-One Constants
C_j(x) = c_j h(x_j) / (rho h(x)) times the position factor of x

LOGIC:
  - Influent factors are the parabolic ones; x_j is the fixed point of the
    generator and c_j the limit of (R^alpha / L(R)) sum over Gamma_j with
    R <= d < R + Delta of e^{-delta d}, divided by Delta
  - Position factor:
      x a boundary point outside the ping-pong set of j   e^{2 delta (x_j|x)_o}
      x = g x0 with g not starting in factor j           e^{2 delta (x_j|g o)_o}
      x in the ping-pong set of j                         0
    (x_j|g o)_o = (B_{x_j}(o, g o) + d(o, g o)) / 2, so x0 itself gets 1
  - c_j is the plateau of the factor tail at the largest R the distance
    table reaches; hyperbolic factors have c_j = 0

ROLE:
  Level-one limit of the renewal operator and the per-level predictions.
"""
import logging
import math
from typing import Dict, Iterable, Optional, Tuple

import numpy as np

from calculation_engines.clairaut_calculations.factor_tail_calc import factor_tail_calc
from calculation_engines.coding_calculations.cocycle_calc import extended_cocycle
from calculation_engines.hyperbolic_calculations.mobius_calc import hyperbolic_geometry as geo
from calculation_engines.hyperbolic_calculations.schottky_calc import TWO_PI
from calculation_engines.interfaces.base_calculation import BaseCalculation
from calculation_engines.interfaces.calculation_input_models import (
    DistanceModel, ExtendedPoint, SchottkyData, SlowlyVaryingSpec,
)
from calculation_engines.interfaces.calculation_output_models import SpectralResult
from calculation_engines.svf_calculations.eval_l_calc import eval_l_calc
from calculation_engines.transfer_calculations.critical_calc import factor_exponent
from calculation_engines.transfer_calculations.doob_calc import doob_transform
from calculation_engines.transfer_calculations.operator_calc import TransferOperator, point_owner
from shared.middleware.error_handler import DomainError

logger = logging.getLogger(__name__)

AMBIGUITY_TOL = 1e-9
PLATEAU_POINTS = 5


def counting_shape(data: SchottkyData, model: DistanceModel) -> Tuple[float, SlowlyVaryingSpec]:
    """(alpha, L) of the counting asymptotic"""
    if model.modified:
        return model.table.profile.alpha, model.table.profile.L
    if data.cusp_profile is not None:
        return data.cusp_profile.alpha, data.cusp_profile.L
    return 0.0, SlowlyVaryingSpec.constant(1.0)


def influent_factors(data: SchottkyData) -> Tuple[int, ...]:
    return tuple(j for j, f in enumerate(data.factors) if f.kind == "parabolic")


def on_arc_boundary(data: SchottkyData, theta: float) -> bool:
    """theta within AMBIGUITY_TOL of an endpoint of some ping-pong arc"""
    for factor in data.factors:
        for arc in factor.arcs:
            for end in arc:
                gap = abs(math.remainder(theta - end, TWO_PI))
                if gap < AMBIGUITY_TOL:
                    return True
    return False


class LevelConstantCalculation(BaseCalculation):
    """C_j(x) and the factor constants c_j"""

    @property
    def calculation_name(self) -> str:
        return "level_constant"

    @property
    def description(self) -> str:
        return "Level-one constants C_j(x) of the renewal operator"

    def calculate(self, op: TransferOperator, spectral: SpectralResult, j: int, x: ExtendedPoint,
                  c_j: float, **kwargs) -> float:
        return self.level_constant_Cj(op, spectral, j, x, c_j)

    # ------------------------------------------------------------------
    # Factor constants
    # ------------------------------------------------------------------

    def factor_constant(self, data: SchottkyData, model: DistanceModel, j: int,
                        R_grid: Optional[Iterable[float]] = None, Delta: float = 1.0,
                        delta: Optional[float] = None) -> Tuple[float, float]:
        """
        c_j from the factor tail plateau.

        Args:
            R_grid: Window starts (default: the last PLATEAU_POINTS unit steps
                the distance table covers)
            Delta: Window width

        Returns:
            (c_j, plateau spread)
        """
        if data.factors[j].kind != "parabolic":
            return 0.0, 0.0
        if not model.modified:
            raise DomainError("c_j needs the MODIFIED_CUSP distance table", {"factor": j, "model": model.tag})
        delta = factor_exponent(data) if delta is None else delta
        table = model.table
        if R_grid is None:
            top = math.floor(table.d_max - Delta - 1.0)
            R_grid = [float(top - i) for i in reversed(range(PLATEAU_POINTS))]
        result = factor_tail_calc.calculate(
            profile=table.profile, delta=delta, Delta=Delta, R_grid=R_grid,
            tau=extended_cocycle.tau_eff(data, j), two_sided=True, table=table,
        )
        c_j, spread = factor_tail_calc.plateau(result, window=min(PLATEAU_POINTS, len(result.values)))
        logger.info("Factor constant", extra={"factor": j, "c_j": c_j, "spread": spread,
                                              "R_last": result.R[-1]})
        return c_j, spread

    def constants(self, data: SchottkyData, model: DistanceModel, **kwargs) -> Dict[int, float]:
        """c_j for every influent factor"""
        return {j: self.factor_constant(data, model, j, **kwargs)[0] for j in influent_factors(data)}

    # ------------------------------------------------------------------
    # C_j(x)
    # ------------------------------------------------------------------

    def _fixed_value(self, op: TransferOperator, spectral: SpectralResult, j: int) -> float:
        return float(spectral.h[op.mesh.fixed_nodes[(j, 0)]])

    def position_factor(self, op: TransferOperator, j: int, x: ExtendedPoint) -> float:
        """The three-branch factor of C_j(x)"""
        data = op.data
        if x.is_orbit:
            if x.factor == j:
                return 0.0
            x_j = data.factors[j].fixed_points[0]
            return math.exp(2.0 * op.s * geo.gromov_interior(x_j, x.g.apply(data.o), data.o))
        if on_arc_boundary(data, x.theta):
            raise DomainError("Point lies on a ping-pong arc boundary", {"theta": x.theta, "factor": j})
        if point_owner(data, x) == j:
            return 0.0
        x_j = data.factors[j].fixed_points[0]
        return math.exp(2.0 * op.s * geo.gromov(x_j, x.theta, data.o))

    def level_constant_Cj(self, op: TransferOperator, spectral: SpectralResult, j: int,
                          x: ExtendedPoint, c_j: float) -> float:
        """
        C_j(x) at a boundary or orbit point.

        Args:
            op: Operator at s = delta
            spectral: rho and h at s = delta
            j: Factor index
            x: Point of the extended limit set
            c_j: Factor constant

        Returns:
            Nonnegative constant, 0 for non-influent factors

        Raises:
            DomainError: x numerically on an arc boundary
        """
        if op.data.factors[j].kind != "parabolic":
            return 0.0
        factor = self.position_factor(op, j, x)
        if factor == 0.0:
            return 0.0
        h_x = doob_transform.eigenfunction_at(op, spectral, x)
        return c_j * self._fixed_value(op, spectral, j) / (spectral.rho * h_x) * factor

    def level_vector(self, op: TransferOperator, spectral: SpectralResult, j: int, c_j: float) -> np.ndarray:
        """C_j at the mesh nodes"""
        mesh, data = op.mesh, op.data
        out = np.zeros(mesh.size)
        if data.factors[j].kind != "parabolic":
            return out
        x_j = data.factors[j].fixed_points[0]
        live = mesh.owner != j
        live[mesh.x0_index] = False
        g = np.asarray(geo.gromov(x_j, mesh.theta[live], data.o), dtype=float)
        out[live] = np.exp(2.0 * op.s * g)
        out[mesh.x0_index] = 1.0
        scale = c_j * self._fixed_value(op, spectral, j) / spectral.rho
        return scale * out / spectral.h

    def empirical_level_constant(self, op: TransferOperator, spectral: SpectralResult, j: int,
                                 x: ExtendedPoint, R: float, Delta: float = 1.0) -> float:
        """
        (R^alpha / L(R)) sum_{gamma in Gamma_j, R <= b~ < R + Delta} p(gamma, x) / Delta.

        The parabolic images p^n x are taken at the fixed point, and
        b~(p^n, x) = d(n tau) - 2 (x_j|x)_o turns the window into a
        distance window shifted by twice the Gromov product.
        """
        data, model = op.data, op.model
        if data.factors[j].kind != "parabolic" or not model.modified:
            raise DomainError("Empirical C_j needs a parabolic factor under MODIFIED_CUSP",
                              {"factor": j, "model": model.tag})
        factor = self.position_factor(op, j, x)
        if factor == 0.0:
            return 0.0
        shift = math.log(factor) / op.s
        total, _ = factor_tail_calc.window_sum(model.table, op.s, R + shift, Delta,
                                               extended_cocycle.tau_eff(data, j))
        alpha, L = counting_shape(data, model)
        h_x = doob_transform.eigenfunction_at(op, spectral, x)
        weight = 2.0 * total * factor * self._fixed_value(op, spectral, j) / (spectral.rho * h_x)
        return weight * R ** alpha / eval_l_calc.calculate(spec=L, t=R) / Delta


# Singleton instance
level_constant_calc = LevelConstantCalculation()
