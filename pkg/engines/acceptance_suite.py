"""
Acceptance Suite
The thirteen acceptance criteria behind the selftest subcommand

LOGIC:
  Each criterion runs on a pinned instance derived from the run
  configuration: alpha = 1.5, L = 1, the cusp pair <p, h^m> under the
  MODIFIED_CUSP model. Truncations, mesh, distance-table grid, seed and
  workers come from the configuration.
    A1   hyperbolic Clairaut oracle            |d_full - arccosh(1 + n^2/2)| <= 1e-6
    A2   excursion integral constants          1 and log 2 to 1e-8
    A3   distance asymptotics                  residual decreasing, <= 0.6 at 1e7
    A4   excursion envelope                    f_n(s) <= e^{-s/2}
    A5   factor tail constant                  within 25% of 2^{alpha-1} at R = 30
    A6   telescoping identity                  <= 1e-9 over 1000 words
    A7   ball enumeration oracle               pruned count = brute force
    A8   classification flip                   Divergent at m = 1, m* found, rho stable to 1e-4
    A9   Doob normalization                    |sum p - 1| <= bar + 1e-6, k <= 3
    A10  renewal against direct summation      gap <= combined bar
    A11  per-level shape                       ratios in [0.7, 1.3], k = 1 within 25%
    A12  counting trend                        |drift C_hat| < |drift C_div|, variation < 30%
    A13  determinism                           A7 and A12 tables identical at 1 and 8 workers

ROLE:
  Orchestration only: every number comes from a calculation singleton.
"""
import logging
import math
import time
from typing import Callable, Dict, List, Optional

import numpy as np
import pandas as pd

from calculation_engines.clairaut_calculations.clairaut_integrals_calc import clairaut_integrals_calc
from calculation_engines.clairaut_calculations.envelope_calc import envelope_check_calc
from calculation_engines.clairaut_calculations.factor_tail_calc import factor_tail_calc
from calculation_engines.clairaut_calculations.geodesic_calc import CuspGeodesicCalculation
from calculation_engines.coding_calculations.ball_calc import ball_enumeration
from calculation_engines.coding_calculations.cocycle_calc import EXACT, extended_cocycle
from calculation_engines.coding_calculations.words_calc import letter_caps, word_enumeration
from calculation_engines.counting_calculations.counting_calc import orbit_counting_calc, relative_drift
from calculation_engines.counting_calculations.direct_sum_calc import direct_sum_calc
from calculation_engines.counting_calculations.level_constant_calc import counting_shape, level_constant_calc
from calculation_engines.counting_calculations.renewal_calc import renewal_calc
from calculation_engines.hyperbolic_calculations.schottky_calc import schottky_construction
from calculation_engines.interfaces.calculation_input_models import ExtendedPoint
from calculation_engines.interfaces.calculation_output_models import CountReport
from calculation_engines.profile_calculations.build_profile_calc import build_profile_calc
from calculation_engines.svf_calculations.eval_l_calc import eval_l_calc
from calculation_engines.transfer_calculations.critical_calc import CONVERGENT, DIVERGENT, critical_exponent_calc
from calculation_engines.transfer_calculations.doob_calc import doob_transform
from engines.run_context import RunContext
from engines.schemas import CommandResult, CriterionResult, SuiteReport
from output_formats.csv_exporter import CSVExporter
from shared.config.settings import RunConfig, apply_overrides
from shared.middleware.error_handler import EXIT_UNEXPECTED, ConfigError, LabError

logger = logging.getLogger(__name__)

PINNED = [
    'L.variant="constant"',
    "L.c=1.0",
    "profile.alpha=1.5",
    "profile.hyperbolic_test_mode=false",
    'schottky.family="cusp_pair"',
    'schottky.model="MODIFIED_CUSP"',
]

ORACLE_N = (1.0, 2.0, 5.0, 10.0, 100.0)
TREND_N = tuple(10.0 ** k for k in range(3, 8))
A3_RESIDUAL_BOUND = 0.6
FLIP_POWERS = (1, 2, 3, 4, 6, 8)
RHO_STABILITY = 1e-4
DOOB_LEVELS = 3
RENEWAL_R = 12.0
RENEWAL_LEVELS = 4
SHAPE_R = (30.0, 35.0)
SHAPE_LEVELS = 3
ORACLE_R = 10.0
ORACLE_K = 4
ORACLE_TRUNC = 6
TREND_SPAN = 10.0
DETERMINISM_WORKERS = (1, 8)


def pinned_config(config: RunConfig, h_power: Optional[int] = None) -> RunConfig:
    """The run configuration with the criteria instance pinned"""
    overrides = list(PINNED)
    if h_power is not None:
        overrides.append(f"schottky.h_power={h_power}")
    return RunConfig.model_validate(apply_overrides(config.model_dump(), overrides))


class AcceptanceSuite:
    """Runs the acceptance criteria and tabulates them"""

    def __init__(self, ctx: RunContext):
        self.ctx = RunContext(pinned_config(ctx.config), workers=ctx.workers)
        self.hyp = schottky_construction.hyperbolic_pair()
        self._counts: Dict[int, CountReport] = {}
        self.criteria: Dict[str, Callable[[], CriterionResult]] = {
            "A1": self.a1_clairaut_oracle,
            "A2": self.a2_integral_constants,
            "A3": self.a3_distance_trend,
            "A4": self.a4_envelope,
            "A5": self.a5_factor_tail,
            "A6": self.a6_telescoping,
            "A7": self.a7_ball_oracle,
            "A8": self.a8_classification_flip,
            "A9": self.a9_doob_normalization,
            "A10": self.a10_renewal_vs_direct,
            "A11": self.a11_level_shape,
            "A12": self.a12_counting_trend,
            "A13": self.a13_determinism,
        }

    # ------------------------------------------------------------------
    # Driver
    # ------------------------------------------------------------------

    def _timed(self, name: str, check: Callable[[], CriterionResult]) -> CriterionResult:
        start = time.perf_counter()
        try:
            result = check()
        except LabError as exc:
            logger.warning("Criterion raised", extra={"criterion": name, "error": exc.message})
            result = CriterionResult(criterion=name, passed=False, value=math.nan,
                                     detail=f"{exc.__class__.__name__}: {exc.message}")
        result.seconds = time.perf_counter() - start
        logger.info("Criterion finished", extra={"criterion": name, "passed": result.passed,
                                                 "value": result.value, "seconds": result.seconds})
        return result

    def evaluate(self, only: Optional[List[str]] = None) -> SuiteReport:
        names = list(self.criteria) if not only else [n.upper() for n in only]
        unknown = [n for n in names if n not in self.criteria]
        if unknown:
            raise ConfigError("Unknown acceptance criteria", {"unknown": unknown, "known": list(self.criteria)})
        return SuiteReport(results=[self._timed(n, self.criteria[n]) for n in names])

    def run(self, only: Optional[List[str]] = None) -> CommandResult:
        report = self.evaluate(only)
        table = pd.DataFrame([r.row() for r in report.results])
        return CommandResult(command="selftest", tables={"selftest": table},
                             sections={"Selftest": {r.criterion: r.passed for r in report.results}},
                             exit_code=0 if report.passed else EXIT_UNEXPECTED)

    # ------------------------------------------------------------------
    # Geometry of the cusp
    # ------------------------------------------------------------------

    def a1_clairaut_oracle(self) -> CriterionResult:
        profile = build_profile_calc.hyperbolic_profile()
        solver = CuspGeodesicCalculation(quad_spec=self.ctx.quad_spec, n_min=min(ORACLE_N))
        worst = max(abs(solver.distance_for_n(profile, n).d_full - math.acosh(1.0 + n * n / 2.0))
                    for n in ORACLE_N)
        return CriterionResult(criterion="A1", passed=worst <= 1e-6, value=worst,
                               detail="max |d_full - arccosh(1 + n^2/2)|")

    def a2_integral_constants(self) -> CriterionResult:
        constants = clairaut_integrals_calc.integral_constants(self.ctx.quad_spec)
        worst = max(abs(constants["unit"][0] - 1.0), abs(constants["log2"][0] - math.log(2.0)))
        return CriterionResult(criterion="A2", passed=worst <= 1e-8, value=worst,
                               detail="max error of the two excursion constants")

    def a3_distance_trend(self) -> CriterionResult:
        profile = self.ctx.profile
        residuals = [abs(self.ctx.geodesics.distance_for_n(profile, n).d_full
                         - self.ctx.geodesics.asymptotic_distance(profile.alpha, profile.L, n))
                     for n in TREND_N]
        decreasing = all(b < a for a, b in zip(residuals, residuals[1:]))
        passed = decreasing and residuals[-1] <= A3_RESIDUAL_BOUND
        return CriterionResult(criterion="A3", passed=passed, value=residuals[-1],
                               detail=f"residuals {[round(r, 4) for r in residuals]}")

    def a4_envelope(self) -> CriterionResult:
        report = envelope_check_calc.calculate(self.ctx.profile, np.geomspace(TREND_N[0], TREND_N[-1], 20),
                                               n_0=self.ctx.config.clairaut.n_0)
        worst = max(row.max_excess for row in report.rows)
        return CriterionResult(criterion="A4", passed=report.passed, value=worst,
                               detail=f"first violation {report.first_violation}")

    def a5_factor_tail(self) -> CriterionResult:
        result = factor_tail_calc.calculate(self.ctx.profile, delta=0.5, Delta=1.0, R_grid=[30.0],
                                            table=self.ctx.table)
        ratio = result.values[-1] / result.reference
        return CriterionResult(criterion="A5", passed=abs(ratio - 1.0) < 0.25, value=result.values[-1],
                               detail=f"reference {result.reference:.6f}, ratio {ratio:.4f}")

    # ------------------------------------------------------------------
    # Coding
    # ------------------------------------------------------------------

    def a6_telescoping(self) -> CriterionResult:
        data = self.ctx.data
        rng = np.random.default_rng(self.ctx.seed)
        caps = letter_caps(data, 20, 3)
        words = [word_enumeration.random_word(data, rng, int(rng.integers(1, 9)), caps) for _ in range(1000)]
        worst = max(extended_cocycle.telescoping_residual(data, w) for w in words)
        return CriterionResult(criterion="A6", passed=worst <= 1e-9, value=worst,
                               detail="max telescoping residual, EXACT_H2, 1000 words")

    def _oracle_ball(self, workers: int):
        return ball_enumeration.enumerate_ball(self.hyp, EXACT, ORACLE_R, k_cap=ORACLE_K, keep_words=True,
                                               workers=workers, seed=self.ctx.seed)

    def _oracle_table(self, workers: int) -> str:
        ball = self._oracle_ball(workers)
        rows = pd.DataFrame({"word": [w.label(self.hyp.names) for w in ball.words],
                             "length": ball.lengths, "distance": ball.distances})
        return CSVExporter.to_text("words", rows, self.ctx.config.output.float_format)

    def a7_ball_oracle(self) -> CriterionResult:
        ball = self._oracle_ball(self.ctx.workers)
        brute = ball_enumeration.brute_force_ball(self.hyp, EXACT, ORACLE_R, k_cap=ORACLE_K,
                                                  trunc_N=ORACLE_TRUNC, trunc_hyperbolic=ORACLE_TRUNC)
        same = ball.count == brute.size and bool(np.allclose(np.sort(ball.distances), brute, rtol=0.0,
                                                              atol=1e-12))
        return CriterionResult(criterion="A7", passed=same, value=float(ball.count),
                               detail=f"brute force {brute.size}, {ball.completeness}")

    # ------------------------------------------------------------------
    # Transfer operator
    # ------------------------------------------------------------------

    def a8_classification_flip(self) -> CriterionResult:
        transfer = self.ctx.config.transfer
        model = self.ctx.model
        schottky = self.ctx.config.schottky

        def data_for_power(m: int):
            return schottky_construction.cusp_pair(tau=schottky.tau, h_lambda=schottky.h_lambda, h_power=m,
                                                   x0=schottky.x0, cusp_profile=self.ctx.profile,
                                                   cusp_height=schottky.cusp_height)

        options = dict(trunc_hyperbolic=transfer.trunc_hyperbolic, mesh_points=transfer.mesh_points,
                       margin=transfer.margin, tail_compensation=transfer.tail_compensation,
                       tol=transfer.tol, max_iter=transfer.max_iter)
        scan = critical_exponent_calc.flip_scan(data_for_power, model, FLIP_POWERS, transfer.trunc_N, **options)
        if scan.m_star is None:
            return CriterionResult(criterion="A8", passed=False, value=math.nan,
                                   detail=f"no Convergent power in {list(FLIP_POWERS)}, rho {scan.rho}")
        low = critical_exponent_calc.refinement_check(data_for_power(FLIP_POWERS[0]), model, transfer.trunc_N,
                                                      **options)
        high = critical_exponent_calc.refinement_check(data_for_power(scan.m_star), model, transfer.trunc_N,
                                                       **options)
        passed = (scan.verdicts[0] == DIVERGENT and low.stable and high.stable
                  and high.verdicts[0] == CONVERGENT
                  and max(low.max_change, high.max_change) < RHO_STABILITY)
        return CriterionResult(criterion="A8", passed=passed, value=float(scan.m_star),
                               detail=f"m* = {scan.m_star}, rho(m=1) = {scan.rho[0]:.6f}, "
                                      f"refinement change {low.max_change:.2e} / {high.max_change:.2e}")

    def a9_doob_normalization(self) -> CriterionResult:
        op, spectral = self.ctx.operator(), self.ctx.spectral
        nodes = np.linspace(0, op.size - 2, 5).astype(int)
        worst_excess = -math.inf
        for node in nodes:
            x = ExtendedPoint.boundary(op.mesh.theta[node])
            for report in doob_transform.level_normalization(op, spectral, x, DOOB_LEVELS)[1:]:
                worst_excess = max(worst_excess, abs(report.total - 1.0) - report.bar)
        return CriterionResult(criterion="A9", passed=worst_excess <= 1e-6, value=worst_excess,
                               detail="max of |sum p - 1| - bar over five nodes, k <= 3")

    # ------------------------------------------------------------------
    # Counting
    # ------------------------------------------------------------------

    def a10_renewal_vs_direct(self) -> CriterionResult:
        ctx = self.ctx
        counting = ctx.config.counting
        op, spectral = ctx.operator(), ctx.spectral
        result = renewal_calc.renewal_M(op, spectral, ctx.u, RENEWAL_R, RENEWAL_LEVELS,
                                        orbit_depth=counting.orbit_depth, t_step=counting.t_step)
        direct = direct_sum_calc.direct_M(ctx.data, ctx.model, ctx.u, RENEWAL_R, delta=ctx.delta,
                                          node_budget=counting.node_budget, workers=ctx.workers, seed=ctx.seed)
        gap = abs(result.value - direct.value)
        return CriterionResult(criterion="A10", passed=gap <= result.bar + 1e-8, value=gap,
                               detail=f"renewal {result.value:.10g}, direct {direct.value:.10g}, "
                                      f"bar {result.bar:.3g}")

    def a11_level_shape(self) -> CriterionResult:
        ctx = self.ctx
        op, spectral = ctx.operator(), ctx.spectral
        alpha, L = counting_shape(ctx.data, ctx.model)
        p_tilde = renewal_calc.p_tilde_levels(op, spectral, ctx.u, list(SHAPE_R), SHAPE_LEVELS,
                                              t_step=ctx.config.counting.t_step)
        scale = np.array([R ** alpha / float(eval_l_calc.calculate(spec=L, t=R)) for R in SHAPE_R])
        scaled = p_tilde * scale[:, None]
        ratios = scaled[1, 1:] / scaled[0, 1:]

        constants = level_constant_calc.constants(ctx.data, ctx.model, R_grid=list(SHAPE_R))
        prediction = renewal_calc.level_predictions(op, spectral, constants, SHAPE_LEVELS)
        target = prediction.values[0] * ctx.u.integral()
        first = abs(scaled[-1, 1] / target - 1.0) if target > 0 else math.inf
        passed = bool(np.all((ratios >= 0.7) & (ratios <= 1.3))) and first <= 0.25
        return CriterionResult(criterion="A11", passed=passed, value=float(first),
                               detail=f"ratios {np.round(ratios, 4).tolist()}, k = 1 target {target:.6g}")

    def _trend_grid(self) -> List[float]:
        grid = self.ctx.config.counting.r_values()
        return [R for R in grid if R >= grid[-1] - TREND_SPAN]

    def _trend_counts(self, workers: int) -> CountReport:
        if workers not in self._counts:
            counting = self.ctx.config.counting
            self._counts[workers] = orbit_counting_calc.brute_count(
                self.ctx.data, self.ctx.model, self._trend_grid(), node_budget=counting.node_budget,
                workers=workers, seed=self.ctx.seed,
            )
        return self._counts[workers]

    def a12_counting_trend(self) -> CriterionResult:
        report = self._trend_counts(self.ctx.workers)
        R = np.asarray(report.R)
        C_hat, C_div = np.asarray(report.C_hat), np.asarray(report.C_div_hat)
        drift, drift_div = relative_drift(R, C_hat), relative_drift(R, C_div)
        variation = float(C_hat.max() / C_hat.min() - 1.0) if C_hat.min() > 0 else math.inf
        passed = (report.completeness != "partial" and len(R) >= 3
                  and abs(drift) < abs(drift_div) and variation < 0.3)
        return CriterionResult(criterion="A12", passed=passed, value=drift,
                               detail=f"R in [{R[0]:g}, {R[-1]:g}], drift_div {drift_div:+.4f}, "
                                      f"variation {variation:.4f}, {report.completeness}")

    def a13_determinism(self) -> CriterionResult:
        float_format = self.ctx.config.output.float_format
        mismatches = []
        oracle = {self._oracle_table(w) for w in DETERMINISM_WORKERS}
        if len(oracle) != 1:
            mismatches.append("A7")
        counts = set()
        for w in DETERMINISM_WORKERS:
            report = self._trend_counts(w)
            counts.add(CSVExporter.to_text("count", pd.DataFrame(report.model_dump(include={"R", "N", "C_hat", "C_div_hat"})),
                                           float_format))
        if len(counts) != 1:
            mismatches.append("A12")
        return CriterionResult(criterion="A13", passed=not mismatches, value=float(len(mismatches)),
                               detail=f"workers {list(DETERMINISM_WORKERS)}, mismatched {mismatches or 'none'}")
