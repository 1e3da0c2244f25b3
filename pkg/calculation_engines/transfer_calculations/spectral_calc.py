"""
Spectral Radius
Power iteration for rho_s and the positive eigenfunction h_s

LOGIC:
  - Sup-norm power iteration started from the constant 1; stops when two
    successive estimates of rho agree to tol (relative above 1)
  - With two factors the mesh graph is bipartite and -rho_s is also an
    eigenvalue: iterate L^2 instead and average two consecutive iterates,
    h = u + L u / rho
  - Divergent folded tails give rho = inf without iterating
  - rho_curve tabulates rho over an s grid; truncation_scan over
    truncations, with an Aitken limit when the increments shrink
    monotonically and the last increment as error bar
  - poincare_comparison puts (L^k 1)(x0) next to the Poincare level sum
    sum_{Gamma(k)} e^{-s d(o, gamma o)} over the same alphabet
"""
import logging
import math
from typing import Iterable, Optional

import numpy as np
import pandas as pd

from calculation_engines.coding_calculations.cocycle_calc import extended_cocycle
from calculation_engines.coding_calculations.words_calc import word_enumeration
from calculation_engines.interfaces.base_calculation import BaseCalculation
from calculation_engines.interfaces.calculation_input_models import DistanceModel, SchottkyData
from calculation_engines.interfaces.calculation_output_models import (
    PoincareComparison, SpectralResult, TruncationScan,
)
from calculation_engines.transfer_calculations.mesh_calc import BoundaryMesh
from calculation_engines.transfer_calculations.operator_calc import TransferOperator, transfer_assembly
from shared.middleware.error_handler import NumericError

logger = logging.getLogger(__name__)

POSITIVITY_FLOOR = 1e-14


class SpectralRadiusCalculation(BaseCalculation):

    @property
    def calculation_name(self) -> str:
        return "spectral_radius"

    @property
    def description(self) -> str:
        return "Leading eigenvalue and positive eigenfunction of L_s"

    def calculate(self, op: TransferOperator, tol: float = 1e-10, max_iter: int = 10_000,
                  **kwargs) -> SpectralResult:
        return self.spectral_radius(op, tol, max_iter)

    def spectral_radius(self, op: TransferOperator, tol: float = 1e-10,
                        max_iter: int = 10_000) -> SpectralResult:
        """
        rho_s and h_s by power iteration.

        Raises:
            NumericError: No convergence within max_iter, or h not positive
        """
        if op.infinite:
            return SpectralResult(s=op.s, rho=math.inf, h=None, iterations=0,
                                  min_max_ratio=0.0, bipartite=op.bipartite)
        M = op.matrix()
        if op.bipartite:
            def step(v):
                return M @ (M @ v)
        else:
            def step(v):
                return M @ v

        u = np.ones(op.size)
        rho = 0.0
        change = math.inf
        for iteration in range(1, max_iter + 1):
            v = step(u)
            norm = float(np.max(np.abs(v)))
            if norm == 0.0:
                raise NumericError("Transfer operator annihilates the constant function", {"s": op.s})
            estimate = math.sqrt(norm) if op.bipartite else norm
            u = v / norm
            change = abs(estimate - rho)
            rho = estimate
            if change <= tol * max(1.0, rho):
                break
        else:
            raise NumericError("Power iteration did not converge",
                               {"s": op.s, "iterations": max_iter, "last_change": change})

        h = u + (M @ u) / rho if op.bipartite else u
        h = h / np.max(h)
        ratio = float(np.min(h))
        if ratio <= POSITIVITY_FLOOR:
            raise NumericError("Eigenfunction below the positivity floor",
                               {"s": op.s, "min_h": ratio, "node": int(np.argmin(h))})
        logger.debug("Spectral radius", extra={"s": op.s, "rho": rho, "iterations": iteration})
        return SpectralResult(s=op.s, rho=rho, h=h, iterations=iteration, min_max_ratio=ratio,
                              bipartite=op.bipartite)

    def rho_curve(self, op: TransferOperator, s_grid: Iterable[float], tol: float = 1e-10,
                  max_iter: int = 10_000) -> pd.DataFrame:
        """The rho-vs-s table"""
        rows = []
        for s in s_grid:
            result = self.spectral_radius(op.at(s), tol, max_iter)
            rows.append({"s": float(s), "rho": result.rho, "iterations": result.iterations})
        return pd.DataFrame(rows, columns=["s", "rho", "iterations"])

    def truncation_scan(self, data: SchottkyData, model: DistanceModel, N_list: Iterable[int], s: float,
                        trunc_hyperbolic: Optional[int] = None, mesh: Optional[BoundaryMesh] = None,
                        mesh_points: int = 96, tail_compensation: bool = True, tol: float = 1e-10,
                        max_iter: int = 10_000) -> TruncationScan:
        """
        rho_s over increasing truncations.

        Args:
            data: Schottky data
            model: Distance model
            N_list: Parabolic truncations
            s: Exponent
            trunc_hyperbolic: Hyperbolic truncation (default: follows N)

        Returns:
            TruncationScan
        """
        Ns = sorted(set(int(n) for n in N_list))
        rhos = []
        for N in Ns:
            op = transfer_assembly.calculate(data=data, model=model, trunc_N=N, trunc_hyperbolic=trunc_hyperbolic,
                                             mesh=mesh, mesh_points=mesh_points,
                                             tail_compensation=tail_compensation, s=s)
            mesh = op.mesh
            rhos.append(self.spectral_radius(op, tol, max_iter).rho)

        limit = rhos[-1]
        error_bar = abs(rhos[-1] - rhos[-2]) if len(rhos) >= 2 else math.inf
        if len(rhos) >= 3 and all(math.isfinite(r) for r in rhos[-3:]):
            d1, d2 = rhos[-2] - rhos[-3], rhos[-1] - rhos[-2]
            if d1 * d2 > 0.0 and abs(d2) < abs(d1):
                limit = rhos[-1] - d2 * d2 / (d2 - d1)
        logger.info("Truncation scan", extra={"N": Ns, "rho": rhos, "limit": limit})
        return TruncationScan(N=Ns, rho=rhos, limit=limit, error_bar=error_bar)

    def poincare_comparison(self, op: TransferOperator, k: int, node: Optional[int] = None) -> PoincareComparison:
        """(L^k 1)(x) on the truncated alphabet against the level-k Poincare sum"""
        node = op.mesh.x0_index if node is None else node
        M = op.truncated_matrix()
        v = np.ones(op.size)
        for _ in range(k):
            v = M @ v
        series = 0.0
        for word in word_enumeration.enumerate_words(op.data, k, op.trunc_N, op.trunc_hyperbolic):
            series += math.exp(-op.s * extended_cocycle.word_distance(word, op.model, op.data))
        value = float(v[node])
        return PoincareComparison(k=k, operator_value=value, series_value=series, ratio=value / series)


# Singleton instance
spectral_radius_calc = SpectralRadiusCalculation()
