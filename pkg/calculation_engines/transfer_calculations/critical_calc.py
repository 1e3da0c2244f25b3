"""
Critical Exponent and Convergence Verdict
delta_Gamma = sup{s >= delta | rho_s >= 1} and the sign of rho_delta - 1

LOGIC:
  - delta is the largest factor exponent: 1/2 for a parabolic factor, 0 for
    a cyclic hyperbolic one
  - rho_delta < 1: the group is exotic and delta_Gamma = delta
  - rho_delta >= 1: bisect on [delta, s_hi] until rho is finite at the
    lower end, then Brent's method on rho_s - 1
  - classify: Convergent iff rho_delta < 1 - margin, Divergent iff
    rho_delta > 1 + margin, Undetermined in between; the error bar is the
    change of rho_delta from half the truncation to the full one

ROLE:
  The delta and classify subcommands and the classification-flip scan.
"""
import logging
import math
from typing import Callable, Iterable, Optional

from scipy.optimize import brentq

from calculation_engines.interfaces.base_calculation import BaseCalculation
from calculation_engines.interfaces.calculation_input_models import DistanceModel, SchottkyData
from calculation_engines.interfaces.calculation_output_models import (
    ClassificationResult, CriticalExponentResult, FlipScan, RefinementCheck,
)
from calculation_engines.transfer_calculations.mesh_calc import BoundaryMesh
from calculation_engines.transfer_calculations.operator_calc import TransferOperator, transfer_assembly
from calculation_engines.transfer_calculations.spectral_calc import spectral_radius_calc
from shared.middleware.error_handler import DomainError

logger = logging.getLogger(__name__)

RHO_TOL = 1e-8
BISECTION_STEPS = 60

CONVERGENT = "Convergent"
DIVERGENT = "Divergent"
UNDETERMINED = "Undetermined"


def factor_exponent(data: SchottkyData) -> float:
    """Largest critical exponent among the factors"""
    return max(0.5 if f.kind == "parabolic" else 0.0 for f in data.factors)


def verdict_for(rho_delta: float, margin: float) -> str:
    if rho_delta < 1.0 - margin:
        return CONVERGENT
    if rho_delta > 1.0 + margin:
        return DIVERGENT
    return UNDETERMINED


class CriticalExponentCalculation(BaseCalculation):

    @property
    def calculation_name(self) -> str:
        return "critical_exponent"

    @property
    def description(self) -> str:
        return "delta_Gamma from rho_s = 1, exotic when rho_delta < 1"

    def calculate(self, data: SchottkyData, model: DistanceModel, trunc_N: int, **kwargs) -> CriticalExponentResult:
        return self.critical_exponent(data, model, trunc_N, **kwargs)

    def _operator(self, data, model, trunc_N, trunc_hyperbolic, mesh, mesh_points, tail_compensation,
                  s) -> TransferOperator:
        return transfer_assembly.calculate(data=data, model=model, trunc_N=trunc_N,
                                           trunc_hyperbolic=trunc_hyperbolic, mesh=mesh,
                                           mesh_points=mesh_points, tail_compensation=tail_compensation, s=s)

    def critical_exponent(self, data: SchottkyData, model: DistanceModel, trunc_N: int,
                          trunc_hyperbolic: Optional[int] = None, mesh: Optional[BoundaryMesh] = None,
                          mesh_points: int = 96, s_hi: float = 3.0, tail_compensation: bool = True,
                          tol: float = 1e-10, max_iter: int = 10_000,
                          op: Optional[TransferOperator] = None) -> CriticalExponentResult:
        """
        Solve the criticality equation.

        Args:
            data: Schottky data
            model: Distance model
            trunc_N: Parabolic letters per side
            trunc_hyperbolic: Hyperbolic letters per side
            mesh: Boundary mesh (built from mesh_points when missing)
            s_hi: Upper end of the search interval
            op: Already assembled operator (any s)

        Returns:
            CriticalExponentResult

        Raises:
            DomainError: rho_s >= 1 still at s_hi
        """
        delta = factor_exponent(data)
        if op is None:
            op = self._operator(data, model, trunc_N, trunc_hyperbolic, mesh, mesh_points, tail_compensation, delta)
        evaluations = 0

        def rho(s: float) -> float:
            nonlocal evaluations
            evaluations += 1
            return spectral_radius_calc.spectral_radius(op.at(s), tol, max_iter).rho

        rho_delta = rho(delta)
        if rho_delta < 1.0:
            logger.info("Exotic branch", extra={"delta": delta, "rho_delta": rho_delta})
            return CriticalExponentResult(delta_gamma=delta, branch="exotic", delta=delta,
                                          rho_at_delta=rho_delta, iterations=evaluations)
        if rho(s_hi) >= 1.0:
            raise DomainError("rho_s >= 1 up to s_hi; raise transfer.s_hi", {"s_hi": s_hi})

        lo, hi, rho_lo = delta, s_hi, rho_delta
        for _ in range(BISECTION_STEPS):
            if math.isfinite(rho_lo):
                break
            mid = 0.5 * (lo + hi)
            value = rho(mid)
            if value >= 1.0:
                lo, rho_lo = mid, value
            else:
                hi = mid
        if not math.isfinite(rho_lo):
            raise DomainError("rho_s stays infinite above delta", {"delta": delta, "lo": lo})

        delta_gamma = brentq(lambda s: rho(s) - 1.0, lo, hi, xtol=1e-14, rtol=1e-14, maxiter=200)
        residual = abs(rho(delta_gamma) - 1.0)
        if residual >= RHO_TOL:
            logger.warning("Criticality residual above target", extra={"residual": residual})
        logger.info("Critical gap branch", extra={"delta": delta, "delta_gamma": delta_gamma,
                                                  "evaluations": evaluations})
        return CriticalExponentResult(delta_gamma=float(delta_gamma), branch="critical_gap", delta=delta,
                                      rho_at_delta=rho_delta, iterations=evaluations)

    def classify(self, data: SchottkyData, model: DistanceModel, trunc_N: int,
                 trunc_hyperbolic: Optional[int] = None, mesh: Optional[BoundaryMesh] = None,
                 mesh_points: int = 96, margin: float = 1e-4, tail_compensation: bool = True,
                 tol: float = 1e-10, max_iter: int = 10_000) -> ClassificationResult:
        """
        Three-valued convergence verdict from rho at delta.

        Returns:
            ClassificationResult
        """
        delta = factor_exponent(data)
        op = self._operator(data, model, trunc_N, trunc_hyperbolic, mesh, mesh_points, tail_compensation, delta)
        result = spectral_radius_calc.spectral_radius(op, tol, max_iter)
        rho_delta = result.rho

        error_bar = 0.0
        half_rho = None
        if trunc_N >= 2 and math.isfinite(rho_delta):
            half_hyp = None if trunc_hyperbolic is None else max(1, trunc_hyperbolic // 2)
            half = self._operator(data, model, trunc_N // 2, half_hyp, op.mesh, mesh_points,
                                  tail_compensation, delta)
            half_rho = spectral_radius_calc.spectral_radius(half, tol, max_iter).rho
            error_bar = abs(rho_delta - half_rho)

        verdict = verdict_for(rho_delta, margin)
        diagnostics = {
            "delta": delta,
            "trunc_N": trunc_N,
            "rho_half_truncation": half_rho,
            "iterations": result.iterations,
            "min_max_ratio": result.min_max_ratio,
            "bipartite": result.bipartite,
            "tail_compensation": tail_compensation,
            "nodes": op.size,
        }
        logger.info("Classification", extra={"verdict": verdict, "rho_delta": rho_delta, "error_bar": error_bar})
        return ClassificationResult(verdict=verdict, rho_at_delta=rho_delta, margin=margin,
                                    error_bar=error_bar, diagnostics=diagnostics)

    def rho_at_delta(self, data: SchottkyData, model: DistanceModel, trunc_N: int,
                     trunc_hyperbolic: Optional[int] = None, mesh_points: int = 96,
                     tail_compensation: bool = True, tol: float = 1e-10, max_iter: int = 10_000) -> float:
        op = self._operator(data, model, trunc_N, trunc_hyperbolic, None, mesh_points, tail_compensation,
                            factor_exponent(data))
        return spectral_radius_calc.spectral_radius(op, tol, max_iter).rho

    def flip_scan(self, data_for_power: Callable[[int], SchottkyData], model: DistanceModel,
                  powers: Iterable[int], trunc_N: int, trunc_hyperbolic: Optional[int] = None,
                  mesh_points: int = 96, margin: float = 1e-4, tail_compensation: bool = True,
                  tol: float = 1e-10, max_iter: int = 10_000) -> FlipScan:
        """
        rho_delta over the powers m of the hyperbolic generator.

        Args:
            data_for_power: Builds the Schottky data of <h^m, p>
            powers: Values of m, scanned in increasing order

        Returns:
            FlipScan with the smallest Convergent m
        """
        ms, rhos, verdicts = [], [], []
        m_star = None
        for m in sorted(set(int(p) for p in powers)):
            rho = self.rho_at_delta(data_for_power(m), model, trunc_N, trunc_hyperbolic, mesh_points,
                                    tail_compensation, tol, max_iter)
            verdict = verdict_for(rho, margin)
            ms.append(m)
            rhos.append(rho)
            verdicts.append(verdict)
            if m_star is None and verdict == CONVERGENT:
                m_star = m
            logger.info("Flip scan step", extra={"m": m, "rho_delta": rho, "verdict": verdict})
        return FlipScan(m=ms, rho=rhos, verdicts=verdicts, m_star=m_star)

    def refinement_check(self, data: SchottkyData, model: DistanceModel, trunc_N: int,
                         trunc_hyperbolic: Optional[int] = None, mesh_points: int = 96,
                         margin: float = 1e-4, tail_compensation: bool = True, tol: float = 1e-10,
                         max_iter: int = 10_000) -> RefinementCheck:
        """rho_delta and its verdict after doubling the mesh, then the truncation"""
        base = self.rho_at_delta(data, model, trunc_N, trunc_hyperbolic, mesh_points, tail_compensation,
                                 tol, max_iter)
        finer = self.rho_at_delta(data, model, trunc_N, trunc_hyperbolic, 2 * mesh_points, tail_compensation,
                                  tol, max_iter)
        longer = self.rho_at_delta(data, model, 2 * trunc_N,
                                   None if trunc_hyperbolic is None else 2 * trunc_hyperbolic,
                                   mesh_points, tail_compensation, tol, max_iter)
        verdicts = [verdict_for(rho, margin) for rho in (base, finer, longer)]
        return RefinementCheck(rho=base, rho_mesh_doubled=finer, rho_trunc_doubled=longer, verdicts=verdicts)


# Singleton instance
critical_exponent_calc = CriticalExponentCalculation()
