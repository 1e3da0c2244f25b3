"""
Run Context
Builds every object a subcommand needs from one validated RunConfig

LOGIC:
  - Objects are built lazily and at most once per run:
      L spec -> profile -> distance table -> Schottky data -> distance model
      -> validated data -> operator at delta -> spectral data
  - The hyperbolic test mode swaps the certified profile for T = e^{-t}
  - Validation raises SchottkyValidationError before any transfer or
    counting work starts

ROLE:
  Single source of truth for the objects of one run, shared by the
  subcommand services and the acceptance suite.
"""
import logging
from functools import cached_property
from typing import Optional

from calculation_engines.clairaut_calculations.distance_table_calc import DistanceTable, distance_table_calc
from calculation_engines.clairaut_calculations.geodesic_calc import CuspGeodesicCalculation
from calculation_engines.hyperbolic_calculations.schottky_calc import schottky_construction
from calculation_engines.hyperbolic_calculations.validation_calc import schottky_validation
from calculation_engines.interfaces.calculation_input_models import (
    CuspProfile, DistanceModel, QuadratureSpec, SchottkyData, SlowlyVaryingSpec, TestFunction,
)
from calculation_engines.interfaces.calculation_output_models import SchottkyValidationReport, SpectralResult
from calculation_engines.profile_calculations.build_profile_calc import build_profile_calc
from calculation_engines.transfer_calculations.critical_calc import factor_exponent
from calculation_engines.transfer_calculations.operator_calc import TransferOperator, transfer_assembly
from calculation_engines.transfer_calculations.spectral_calc import spectral_radius_calc
from shared.config.settings import RunConfig
from shared.middleware.error_handler import SchottkyValidationError

logger = logging.getLogger(__name__)


class RunContext:
    """Lazily built profile, group, distance model and operator of a run"""

    def __init__(self, config: RunConfig, workers: int = 1):
        self.config = config
        self.workers = max(1, int(workers))

    # ------------------------------------------------------------------
    # Geometry
    # ------------------------------------------------------------------

    @cached_property
    def L(self) -> SlowlyVaryingSpec:
        section = self.config.L
        return SlowlyVaryingSpec(variant=section.variant, c=section.c, beta=section.beta,
                                 t_min=section.t_min or 0.0)

    @property
    def test_mode(self) -> bool:
        return self.config.profile.hyperbolic_test_mode

    @cached_property
    def profile(self) -> CuspProfile:
        if self.test_mode:
            return build_profile_calc.hyperbolic_profile()
        section = self.config.profile
        return build_profile_calc.calculate(alpha=section.alpha, L=self.L, A=section.A, B=section.B,
                                            glue_grid=section.glue_grid, initial_guess=section.initial_guess,
                                            ladder_cap=section.ladder_cap)

    @cached_property
    def quad_spec(self) -> QuadratureSpec:
        section = self.config.clairaut
        return QuadratureSpec(epsabs=section.quad_epsabs, epsrel=section.quad_epsrel, limit=section.quad_limit)

    @cached_property
    def geodesics(self) -> CuspGeodesicCalculation:
        return CuspGeodesicCalculation(quad_spec=self.quad_spec, n_min=self.config.clairaut.n_min)

    @cached_property
    def table(self) -> DistanceTable:
        section = self.config.clairaut
        return distance_table_calc.calculate(profile=self.profile, cusp_height=self.config.schottky.cusp_height,
                                             knots=section.table_knots, log10_max=section.table_log10_max,
                                             quad_spec=self.quad_spec)

    # ------------------------------------------------------------------
    # Group
    # ------------------------------------------------------------------

    @cached_property
    def data(self) -> SchottkyData:
        section = self.config.schottky
        cusp_profile = self.profile if section.family == "cusp_pair" else None
        return schottky_construction.from_config(section, cusp_profile=cusp_profile)

    @cached_property
    def model(self) -> DistanceModel:
        if self.config.schottky.model == "MODIFIED_CUSP" and self.config.schottky.family == "cusp_pair":
            return DistanceModel("MODIFIED_CUSP", self.table)
        return DistanceModel("EXACT_H2")

    @cached_property
    def validation(self) -> SchottkyValidationReport:
        return schottky_validation.calculate(self.data, N_check=self.config.schottky.N_check)

    def validated_data(self) -> SchottkyData:
        """Schottky data after a passing ping-pong check"""
        report = self.validation
        if not report.passed:
            raise SchottkyValidationError("Schottky data failed validation",
                                          {"failures": report.failures, "min_gap": report.min_gap})
        return self.data

    @property
    def delta(self) -> float:
        return factor_exponent(self.data)

    # ------------------------------------------------------------------
    # Transfer operator
    # ------------------------------------------------------------------

    @cached_property
    def operator_at_delta(self) -> TransferOperator:
        section = self.config.transfer
        data = self.validated_data()
        return transfer_assembly.calculate(data=data, model=self.model, trunc_N=section.trunc_N,
                                           trunc_hyperbolic=section.trunc_hyperbolic,
                                           mesh_points=section.mesh_points,
                                           tail_compensation=section.tail_compensation,
                                           s=factor_exponent(data))

    def operator(self, s: Optional[float] = None) -> TransferOperator:
        """The operator at delta, or re-weighted at s on the same mesh"""
        op = self.operator_at_delta
        return op if s is None else op.at(s)

    @cached_property
    def spectral(self) -> SpectralResult:
        section = self.config.transfer
        return spectral_radius_calc.spectral_radius(self.operator(), section.tol, section.max_iter)

    # ------------------------------------------------------------------
    # Counting
    # ------------------------------------------------------------------

    @property
    def u(self) -> TestFunction:
        return TestFunction.hat(0.0, self.config.counting.u_halfwidth)

    @property
    def seed(self) -> int:
        return self.config.seed
