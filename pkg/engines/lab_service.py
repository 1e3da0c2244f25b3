"""
Lab Services
One service method per subcommand: run the calculations, return tables and a summary
"""
import logging
import math
from typing import Any, Dict, List

import numpy as np
import pandas as pd

from calculation_engines.clairaut_calculations.envelope_calc import envelope_check_calc
from calculation_engines.coding_calculations.ball_calc import ball_enumeration
from calculation_engines.counting_calculations.counting_calc import orbit_counting_calc
from calculation_engines.counting_calculations.direct_sum_calc import direct_sum_calc
from calculation_engines.counting_calculations.level_constant_calc import (
    counting_shape, influent_factors, level_constant_calc,
)
from calculation_engines.counting_calculations.renewal_calc import renewal_calc
from calculation_engines.interfaces.calculation_output_models import CountReport, SpectralResult
from calculation_engines.profile_calculations.profile_eval_calc import profile_eval_calc
from calculation_engines.svf_calculations.eval_l_calc import eval_l_calc
from calculation_engines.svf_calculations.potter_bound_calc import potter_bound_calc
from calculation_engines.transfer_calculations.critical_calc import critical_exponent_calc
from calculation_engines.transfer_calculations.spectral_calc import spectral_radius_calc
from engines.run_context import RunContext
from engines.schemas import CommandResult
from shared.middleware.error_handler import EXIT_VALIDATION, BudgetExceededError, DomainError
from shared.utils.helpers import log_grid

logger = logging.getLogger(__name__)

PROFILE_POINTS = 401
GEODESIC_POINTS = 15
ENVELOPE_POINTS = 20
POTTER_THETA = 0.5
RHO_CURVE_POINTS = 13


def _table(rows: List[Dict[str, Any]]) -> pd.DataFrame:
    return pd.DataFrame(rows)


class LabService:
    """Subcommand implementations on top of a RunContext"""

    # ------------------------------------------------------------------
    # Geometry
    # ------------------------------------------------------------------

    @staticmethod
    def profile(ctx: RunContext) -> CommandResult:
        """T, T', T'' and K on a grid covering the glue and the cusp"""
        profile = ctx.profile
        top = 2.0 * profile.glue_end + 10.0
        t = np.linspace(0.0, top, PROFILE_POINTS)
        table = pd.DataFrame({
            "t": t,
            "T": profile_eval_calc.eval_T(profile, t),
            "dT": profile_eval_calc.eval_dT(profile, t),
            "ddT": profile_eval_calc.eval_ddT(profile, t),
            "K": profile_eval_calc.curvature(profile, t),
        })
        certificate = profile.certificate
        sections = {
            "Profile": {"alpha": profile.alpha, "L": ctx.L.variant, "glue_end": profile.glue_end,
                        "pinching": [profile.pinch_A, profile.pinch_B], "hyperbolic_test_mode": ctx.test_mode},
            "Certificate": {"passed": certificate.passed, "min_K": certificate.min_K, "max_K": certificate.max_K,
                            "max_log_dT": certificate.max_log_dT, "ladder": certificate.ladder},
        }
        if not ctx.test_mode:
            potter = potter_bound_calc.calculate(spec=ctx.L, theta=POTTER_THETA, t_grid=log_grid(1.0, 1e6, 200))
            sections["Potter bound"] = {"theta": potter.theta, "C_theta": potter.C_theta,
                                        "threshold": potter.threshold}
        return CommandResult(command="profile", tables={"profile": table}, sections=sections)

    @staticmethod
    def geodesics(ctx: RunContext) -> CommandResult:
        """Excursion heights and lengths over a log grid of translations"""
        profile = ctx.profile
        solver = ctx.geodesics
        log10_top = min(7.0, ctx.config.clairaut.table_log10_max)
        n_values = log_grid(max(ctx.config.clairaut.n_min, 1.0), 10.0 ** log10_top, GEODESIC_POINTS)
        rows = []
        for n in n_values:
            geo = solver.distance_for_n(profile, float(n))
            if ctx.test_mode:
                exact = math.acosh(1.0 + n * n / 2.0)
            else:
                exact = solver.exact_distance(profile, float(n), ctx.config.schottky.cusp_height)
            residual = (geo.d_full - solver.asymptotic_distance(profile.alpha, profile.L, float(n))
                        if math.log(n) > 1.0 else float("nan"))
            rows.append({"n": float(n), "h_n": geo.h_n, "d_n": geo.d_n, "d_full": geo.d_full,
                         "d_exact": exact, "residual_vs_asymptotic": residual})
        table = _table(rows)
        sections = {"Geodesics": {"points": len(rows), "n_max": float(n_values[-1]),
                                  "max_abs_full_minus_exact": float(np.max(np.abs(table.d_full - table.d_exact)))}}
        if not ctx.test_mode:
            n_0 = ctx.config.clairaut.n_0
            envelope = envelope_check_calc.calculate(profile, log_grid(n_0, 10.0 ** log10_top, ENVELOPE_POINTS),
                                                     n_0=n_0)
            sections["Envelope"] = {"passed": envelope.passed, "first_violation": envelope.first_violation}
        return CommandResult(command="geodesics", tables={"geodesics": table}, sections=sections)

    # ------------------------------------------------------------------
    # Group
    # ------------------------------------------------------------------

    @staticmethod
    def validate(ctx: RunContext) -> CommandResult:
        """Ping-pong rows; exits with the validation code when a row fails"""
        report = ctx.validation
        table = _table([row.model_dump() for row in report.rows])
        sections = {"Validation": {"passed": report.passed, "disjoint": report.disjoint,
                                   "min_gap": report.min_gap, "x0_outside": report.x0_outside,
                                   "failures": report.failures}}
        if report.passed:
            c_prune = ball_enumeration.superadditivity_margin(ctx.data, ctx.model, seed=ctx.seed)
            c_f = ball_enumeration.cocycle_margin(ctx.data, ctx.model, seed=ctx.seed + 1)
            sections["Margins"] = {"C_prune": c_prune, "C_F": c_f}
        return CommandResult(command="validate", tables={"validate": table}, sections=sections,
                             exit_code=0 if report.passed else EXIT_VALIDATION)

    @staticmethod
    def words(ctx: RunContext) -> CommandResult:
        """Every word in the ball of the smallest grid radius"""
        data = ctx.validated_data()
        radius = ctx.config.counting.r_values()[0]
        try:
            ball = ball_enumeration.enumerate_ball(data, ctx.model, radius, keep_words=True,
                                                   node_budget=ctx.config.counting.node_budget,
                                                   workers=ctx.workers, seed=ctx.seed)
        except BudgetExceededError as exc:
            logger.warning("Word listing on a partial ball", extra={"radius": radius})
            ball = exc.partial
        rows = [{"word": word.label(data.names), "length": word.length, "distance": float(d)}
                for word, d in zip(ball.words, ball.distances)]
        table = _table(rows).sort_values(["distance", "word"], kind="mergesort").reset_index(drop=True)
        per_length = table.groupby("length").size()
        sections = {"Ball": {"R": radius, "count": ball.count, "nodes": ball.nodes,
                             "completeness": ball.completeness, "c_prune": ball.c_prune},
                    "Words per length": {f"k = {k}": int(v) for k, v in per_length.items()}}
        return CommandResult(command="words", tables={"words": table}, sections=sections)

    # ------------------------------------------------------------------
    # Counting
    # ------------------------------------------------------------------

    @staticmethod
    def _count(ctx: RunContext) -> CountReport:
        counting = ctx.config.counting
        return orbit_counting_calc.brute_count(ctx.validated_data(), ctx.model, counting.r_values(),
                                               node_budget=counting.node_budget, workers=ctx.workers,
                                               seed=ctx.seed)

    @staticmethod
    def count(ctx: RunContext) -> CommandResult:
        """N(R) over the grid with the normalized ratios"""
        report = LabService._count(ctx)
        C_hat = np.asarray(report.C_hat)
        drift = np.full(C_hat.size, np.nan)
        drift[1:] = np.diff(C_hat) / np.where(C_hat[1:] != 0.0, C_hat[1:], np.nan)
        table = pd.DataFrame({"R": report.R, "N": report.N, "C_hat": report.C_hat,
                              "C_div_hat": report.C_div_hat, "drift": drift})
        sections = {"Counts": {"delta": report.delta, "R_max": report.R[-1], "N_max": report.N[-1],
                               "completeness": report.completeness, "nodes": report.nodes,
                               "c_prune": report.c_prune}}
        R_mid = report.R[len(report.R) // 2]
        check = direct_sum_calc.decomposition_check(ctx.data, ctx.model, R_mid, delta=report.delta,
                                                    mollify=ctx.config.counting.mollify,
                                                    node_budget=ctx.config.counting.node_budget,
                                                    workers=ctx.workers, seed=ctx.seed, c_prune=report.c_prune)
        sections["Decomposition"] = {"R": check.R, "N": check.brute, "decomposed": check.decomposed,
                                     "mollified": check.mollified, "exact_match": check.exact_match}
        return CommandResult(command="count", tables={"count": table}, sections=sections)

    @staticmethod
    def _series_prediction(ctx: RunContext, spectral: SpectralResult) -> Dict[str, Any]:
        """C_Gamma predicted by the level series at x0, i.e. C_1(x0) / delta"""
        if not influent_factors(ctx.data):
            return {"series": "no influent factor"}
        constants = level_constant_calc.constants(ctx.data, ctx.model)
        series = renewal_calc.series_constant(ctx.operator(), spectral, constants, ctx.config.counting.k_max)
        return {"C_1(x0)": series.value, "series_remainder": series.remainder,
                "C_predicted": series.value / ctx.delta, "constants": list(constants.values())}

    @staticmethod
    def fit(ctx: RunContext) -> CommandResult:
        """C_hat and its drift over the top third of the grid"""
        report = LabService._count(ctx)
        alpha, L = counting_shape(ctx.data, ctx.model)
        fit = orbit_counting_calc.asymptotic_fit(report, report.delta, alpha, L)
        window = len(fit.window)
        table = pd.DataFrame({"R": report.R[-window:], "N": report.N[-window:], "C_hat": report.C_hat[-window:],
                              "C_div_hat": report.C_div_hat[-window:], "drift": [fit.drift] * window})
        sections = {"Fit": {"C_hat": fit.C_hat, "drift": fit.drift, "C_div_hat": fit.C_div_hat,
                            "drift_div": fit.drift_div, "variation": fit.variation, "window": fit.window,
                            "flagged": fit.flagged, "completeness": report.completeness}}
        spectral = ctx.spectral
        if spectral.rho < 1.0:
            prediction = LabService._series_prediction(ctx, spectral)
            if "C_predicted" in prediction:
                prediction["gap_to_fit"] = prediction["C_predicted"] / fit.C_hat - 1.0
            sections["Series constant"] = prediction
        else:
            sections["Series constant"] = {"series": f"not available, rho = {spectral.rho:.6g}"}
        return CommandResult(command="fit", tables={"fit": table}, sections=sections)

    # ------------------------------------------------------------------
    # Transfer operator
    # ------------------------------------------------------------------

    @staticmethod
    def _rho_grid(ctx: RunContext, extra: List[float]) -> List[float]:
        lo = ctx.delta if ctx.delta > 0.0 else 0.05
        grid = np.linspace(lo, ctx.config.transfer.s_hi, RHO_CURVE_POINTS).tolist()
        return sorted(set(round(s, 12) for s in grid + extra))

    @staticmethod
    def delta(ctx: RunContext) -> CommandResult:
        """delta_Gamma and the rho-vs-s curve"""
        transfer = ctx.config.transfer
        op = ctx.operator()
        result = critical_exponent_calc.critical_exponent(ctx.data, ctx.model, transfer.trunc_N,
                                                          s_hi=transfer.s_hi, tol=transfer.tol,
                                                          max_iter=transfer.max_iter, op=op)
        curve = spectral_radius_calc.rho_curve(op, LabService._rho_grid(ctx, [result.delta_gamma]),
                                               transfer.tol, transfer.max_iter)
        sections = {"Critical exponent": {"delta_Gamma": result.delta_gamma, "branch": result.branch,
                                          "factor_exponent": result.delta, "rho_at_delta": result.rho_at_delta,
                                          "evaluations": result.iterations}}
        return CommandResult(command="delta", tables={"delta": curve}, sections=sections)

    @staticmethod
    def classify(ctx: RunContext) -> CommandResult:
        """Convergent / Divergent verdict at delta with its bars"""
        transfer = ctx.config.transfer
        data = ctx.validated_data()
        op = ctx.operator()
        result = critical_exponent_calc.classify(data, ctx.model, transfer.trunc_N, transfer.trunc_hyperbolic,
                                                 mesh=op.mesh, mesh_points=transfer.mesh_points,
                                                 margin=transfer.margin,
                                                 tail_compensation=transfer.tail_compensation,
                                                 tol=transfer.tol, max_iter=transfer.max_iter)
        N_list = sorted({max(1, transfer.trunc_N // 4), max(1, transfer.trunc_N // 2), transfer.trunc_N})
        scan = spectral_radius_calc.truncation_scan(data, ctx.model, N_list, op.s, transfer.trunc_hyperbolic,
                                                    mesh=op.mesh, tail_compensation=transfer.tail_compensation,
                                                    tol=transfer.tol, max_iter=transfer.max_iter)
        comparison = spectral_radius_calc.poincare_comparison(op, 2)
        curve = spectral_radius_calc.rho_curve(op, [op.s], transfer.tol, transfer.max_iter)
        sections = {
            "Classification": {"verdict": result.verdict, "rho_at_delta": result.rho_at_delta,
                               "error_bar": result.error_bar, "margin": result.margin},
            "Truncation scan": {"N": scan.N, "rho": scan.rho, "limit": scan.limit, "error_bar": scan.error_bar},
            "Poincare comparison": {"k": comparison.k, "operator": comparison.operator_value,
                                    "series": comparison.series_value, "ratio": comparison.ratio},
            "Diagnostics": dict(result.diagnostics),
        }
        return CommandResult(command="classify", tables={"classify": curve}, sections=sections)

    # ------------------------------------------------------------------
    # Renewal
    # ------------------------------------------------------------------

    @staticmethod
    def renewal(ctx: RunContext) -> CommandResult:
        """M(R, 1 x u)(x0) per level with the level-limit predictions"""
        counting = ctx.config.counting
        op, spectral = ctx.operator(), ctx.spectral
        if not spectral.rho < 1.0:
            raise DomainError("renewal needs a Convergent group", {"rho": spectral.rho})
        u = ctx.u
        alpha, L = counting_shape(ctx.data, ctx.model)
        constants = level_constant_calc.constants(ctx.data, ctx.model) if influent_factors(ctx.data) else {}
        series = renewal_calc.series_constant(op, spectral, constants, counting.k_max)

        tables, sections = {}, {}
        for R in counting.renewal_R:
            result = renewal_calc.renewal_M(op, spectral, u, R, counting.k_max, orbit_depth=counting.orbit_depth,
                                            t_step=counting.t_step)
            scale = u.integral() * float(eval_l_calc.calculate(spec=L, t=R)) / R ** alpha
            limits = [0.0] + [v * scale for v in series.per_k]
            stem = "renewal" if len(counting.renewal_R) == 1 else f"renewal_R{R:g}"
            tables[stem] = pd.DataFrame({"k": range(len(result.per_k)), "value": result.per_k,
                                         "limit_prediction": limits[:len(result.per_k)]})
            split = direct_sum_calc.step_split(op, spectral, u, 1, counting.r_split, R,
                                               node_budget=counting.node_budget, workers=ctx.workers,
                                               seed=ctx.seed)
            sections[f"Renewal R = {R:g}"] = {
                "value": result.value, "bar": result.bar, "tail_bound": result.tail_bound,
                "truncation_bar": result.truncation_bar, "interpolation_bar": result.interpolation_bar,
                "C_u": result.C_u, "step_split_A_B_C": [split.A, split.B, split.C],
            }
        sections["Level limits"] = {"rho": spectral.rho, "constants": list(constants.values()),
                                    "C_1(x0)": series.value, "remainder": series.remainder}
        return CommandResult(command="renewal", tables=tables, sections=sections)


COMMANDS = {
    "profile": LabService.profile,
    "geodesics": LabService.geodesics,
    "validate": LabService.validate,
    "words": LabService.words,
    "count": LabService.count,
    "delta": LabService.delta,
    "classify": LabService.classify,
    "renewal": LabService.renewal,
    "fit": LabService.fit,
}
