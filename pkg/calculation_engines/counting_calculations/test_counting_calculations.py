"""
Test script for orbit counting calculations
Tests the level-one constants, one exact step of P~, the renewal level sums
against direct summation, the level limits, brute-force counting, the
asymptotic fit, the test-function decomposition and the step split

Run: python calculation_engines/counting_calculations/test_counting_calculations.py
"""
import functools
import math
import sys
from pathlib import Path

# Add project root to path
project_root = Path(__file__).parent.parent.parent
sys.path.insert(0, str(project_root))

import numpy as np
import pytest

from calculation_engines.clairaut_calculations.distance_table_calc import DistanceTableCalculation
from calculation_engines.coding_calculations.ball_calc import ball_enumeration
from calculation_engines.coding_calculations.cocycle_calc import EXACT
from calculation_engines.counting_calculations.counting_calc import orbit_counting_calc
from calculation_engines.counting_calculations.direct_sum_calc import direct_sum_calc
from calculation_engines.counting_calculations.level_constant_calc import (
    counting_shape, influent_factors, level_constant_calc, on_arc_boundary,
)
from calculation_engines.counting_calculations.renewal_calc import ShiftGrid, renewal_calc, tail_level_sum
from calculation_engines.hyperbolic_calculations.schottky_calc import schottky_construction
from calculation_engines.interfaces.calculation_input_models import (
    DistanceModel, ExtendedPoint, SlowlyVaryingSpec, TestFunction,
)
from calculation_engines.interfaces.calculation_output_models import CountReport
from calculation_engines.profile_calculations.build_profile_calc import build_profile_calc
from calculation_engines.transfer_calculations.operator_calc import TransferOperator, transfer_assembly
from calculation_engines.transfer_calculations.spectral_calc import spectral_radius_calc
from data_access.cache_manager import CacheManager
from shared.middleware.error_handler import DomainError

HYP = schottky_construction.hyperbolic_pair()
CONV = schottky_construction.cusp_pair(h_power=8)
ONE = SlowlyVaryingSpec.constant(1.0)
HAT = TestFunction.hat(0.0, 1.0)
tables = DistanceTableCalculation(cache=CacheManager(enabled=False))


@functools.lru_cache(maxsize=None)
def _alpha_model() -> DistanceModel:
    profile = build_profile_calc.calculate(alpha=1.5, L=ONE, A=0.4, B=2.0)
    return DistanceModel("MODIFIED_CUSP", tables.calculate(profile=profile, knots=400, log10_max=7.0))


@functools.lru_cache(maxsize=None)
def _conv_operator(trunc_N: int = 32, tail_compensation: bool = True) -> TransferOperator:
    return transfer_assembly.calculate(data=CONV, model=_alpha_model(), trunc_N=trunc_N, trunc_hyperbolic=4,
                                       mesh_points=48, tail_compensation=tail_compensation, s=0.5)


@functools.lru_cache(maxsize=None)
def _conv_spectral():
    return spectral_radius_calc.spectral_radius(_conv_operator())


@functools.lru_cache(maxsize=None)
def _hyp_operator() -> TransferOperator:
    return transfer_assembly.calculate(data=HYP, model=EXACT, trunc_N=8, mesh_points=48, s=0.5)


@functools.lru_cache(maxsize=None)
def _hyp_spectral():
    return spectral_radius_calc.spectral_radius(_hyp_operator())


def _interior_nodes(op: TransferOperator, factor: int, count: int = 4) -> np.ndarray:
    nodes = [i for i in np.flatnonzero(op.mesh.owner == factor) if not on_arc_boundary(op.data, op.mesh.theta[i])]
    return np.asarray(nodes)[np.linspace(0, len(nodes) - 1, count).astype(int)]


# ============================================================================
# LEVEL-ONE CONSTANTS
# ============================================================================

def test_counting_shape():
    print("\n=== Testing Counting Shape ===")

    alpha, L = counting_shape(CONV, _alpha_model())
    assert alpha == 1.5
    assert L.variant == "constant"
    alpha, _ = counting_shape(HYP, EXACT)
    assert alpha == 0.0
    assert influent_factors(CONV) == (0,)
    assert influent_factors(HYP) == ()

    print("✓ Counting shape tests passed")


def test_level_constant_branches():
    print("\n=== Testing C_j Branches ===")

    op, spectral = _conv_operator(), _conv_spectral()
    base = ExtendedPoint.base(CONV)
    assert level_constant_calc.position_factor(op, 0, base) == pytest.approx(1.0, abs=1e-12)

    c_j = 1.3
    expected = c_j * spectral.h[op.mesh.fixed_nodes[(0, 0)]] / (spectral.rho * spectral.h[op.mesh.x0_index])
    assert level_constant_calc.level_constant_Cj(op, spectral, 0, base, c_j) == pytest.approx(expected, rel=1e-12)

    # infinity sits in the arcs of the parabolic factor
    assert level_constant_calc.level_constant_Cj(op, spectral, 0, ExtendedPoint.boundary(math.pi), c_j) == 0.0
    # hyperbolic factors carry no constant
    assert level_constant_calc.level_constant_Cj(op, spectral, 1, base, c_j) == 0.0

    x = ExtendedPoint.boundary(op.mesh.theta[_interior_nodes(op, 1)[1]])
    value = level_constant_calc.level_constant_Cj(op, spectral, 0, x, c_j)
    assert value > 0.0
    print(f"C_0(x0) = {expected:.6f}, C_0(theta={x.theta:+.4f}) = {value:.6f}")

    edge = CONV.factors[0].arcs[0][0]
    with pytest.raises(DomainError):
        level_constant_calc.level_constant_Cj(op, spectral, 0, ExtendedPoint.boundary(edge), c_j)

    print("✓ C_j branch tests passed")


def test_level_vector_matches_pointwise():
    print("\n=== Testing C_j on the Mesh ===")

    op, spectral = _conv_operator(), _conv_spectral()
    vector = level_constant_calc.level_vector(op, spectral, 0, 1.0)
    for node in _interior_nodes(op, 1):
        x = ExtendedPoint.boundary(op.mesh.theta[node])
        pointwise = level_constant_calc.level_constant_Cj(op, spectral, 0, x, 1.0)
        assert vector[node] == pytest.approx(pointwise, rel=1e-9)
    assert vector[op.mesh.x0_index] == pytest.approx(
        level_constant_calc.level_constant_Cj(op, spectral, 0, ExtendedPoint.base(CONV), 1.0), rel=1e-12)
    assert np.all(vector[op.mesh.owner == 0] == 0.0)

    print("✓ Mesh C_j tests passed")


@pytest.mark.slow
def test_empirical_level_constant():
    print("\n=== Testing Empirical C_j (R = 30) ===")

    op, spectral = _conv_operator(), _conv_spectral()
    c_j, spread = level_constant_calc.factor_constant(CONV, _alpha_model(), 0, R_grid=[30.0])
    print(f"c_0 = {c_j:.5f}")
    for x in [ExtendedPoint.base(CONV), ExtendedPoint.boundary(op.mesh.theta[_interior_nodes(op, 1)[2]])]:
        empirical = level_constant_calc.empirical_level_constant(op, spectral, 0, x, 30.0)
        predicted = level_constant_calc.level_constant_Cj(op, spectral, 0, x, c_j)
        print(f"theta = {x.theta:+.4f}: empirical {empirical:.5f}, C_j {predicted:.5f}")
        assert empirical == pytest.approx(predicted, rel=0.2)

    print("✓ Empirical C_j tests passed")


# ============================================================================
# ONE STEP OF P~
# ============================================================================

def test_p_tilde_apply():
    print("\n=== Testing One Step of P~ ===")

    op, spectral = _hyp_operator(), _hyp_spectral()
    x = ExtendedPoint.base(HYP)
    zero = TestFunction((-1.0, 0.0, 1.0), (0.0, 0.0, 0.0))
    assert renewal_calc.p_tilde_apply(op, spectral, zero, x, 0.0) == 0.0

    wide = TestFunction.mollified_indicator(-1.0, 80.0, 0.5)
    total = renewal_calc.p_tilde_apply(op, spectral, wide, x, 0.0)
    print(f"sum of p over letters: {total:.8f}")
    assert total == pytest.approx(1.0, abs=1e-2)

    node = _interior_nodes(op, 0)[1]
    y = ExtendedPoint.boundary(op.mesh.theta[node])
    c = 0.73
    for t in (-6.0, -4.5, -3.0):
        shifted = renewal_calc.p_tilde_apply(op, spectral, HAT.shifted(c), y, t)
        moved = renewal_calc.p_tilde_apply(op, spectral, HAT, y, t - c)
        assert shifted == pytest.approx(moved, rel=1e-12, abs=1e-15)

    print("✓ One-step tests passed")


# ============================================================================
# LEVEL SUMS
# ============================================================================

def test_shift_grid_and_tail_sum():
    print("\n=== Testing Shift Grid and Level Tail ===")

    grid = ShiftGrid.covering(-3.004, 1.5, 0.01)
    assert grid.times[0] <= -3.004 + 1e-12
    assert grid.times[-1] >= 1.5 - 1e-12
    assert grid.position(grid.times[7]) == pytest.approx(7.0)

    rho = 0.6
    brute = sum(k * k * rho ** k for k in range(6, 2000))
    assert tail_level_sum(rho, 5) == pytest.approx(brute, rel=1e-10)
    assert tail_level_sum(0.0, 3) == 0.0

    print("✓ Shift grid tests passed")


def test_level_zero_and_one():
    print("\n=== Testing Levels 0 and 1 ===")

    op = _conv_operator(200, False)
    level0 = renewal_calc.level_sums(op, HAT, [0.5, 3.0], 0)
    assert level0[0, 0] == pytest.approx(0.5)
    assert level0[1, 0] == 0.0

    R = 12.0
    sums = renewal_calc.level_sums(op, HAT, [R], 1)[0]
    direct = direct_sum_calc.direct_M(CONV, _alpha_model(), HAT, R, delta=0.5, k_cap=1, c_prune=0.0)
    print(f"M_1: level sum {sums[1]:.12e}, direct {direct.per_k[1]:.12e} over {direct.words} letters")
    assert direct.words > 0
    assert sums[1] == pytest.approx(direct.per_k[1], rel=1e-8, abs=1e-14)

    print("✓ Level 0 and 1 tests passed")


def test_levels_against_direct_sum():
    print("\n=== Testing Level Sums vs Direct Sum (hyperbolic pair) ===")

    op = _hyp_operator()
    R, k_max = 7.0, 5
    sums = renewal_calc.level_sums(op, HAT, [R], k_max, orbit_depth=2)[0]
    direct = direct_sum_calc.direct_M(HYP, EXACT, HAT, R, delta=0.5, k_cap=k_max)
    print(f"per k renewal {np.round(sums, 8).tolist()}")
    print(f"per k direct  {np.round(direct.per_k, 8).tolist()}")
    assert sums[0] == pytest.approx(direct.per_k[0], abs=1e-15)
    assert sums[1] == pytest.approx(direct.per_k[1], rel=1e-9, abs=1e-15)
    assert float(np.sum(sums)) == pytest.approx(direct.value, rel=0.05)

    print("✓ Level sum tests passed")


@pytest.mark.slow
def test_renewal_matches_direct_sum():
    print("\n=== Testing Renewal Sum vs Direct Sum (R = 12) ===")

    op, spectral = _conv_operator(), _conv_spectral()
    assert spectral.rho < 1.0
    R = 12.0
    result = renewal_calc.renewal_M(op, spectral, HAT, R, k_max=4)
    direct = direct_sum_calc.direct_M(CONV, _alpha_model(), HAT, R, delta=0.5)
    gap = abs(result.value - direct.value)
    print(f"renewal {result.value:.10f} direct {direct.value:.10f} gap {gap:.2e} bar {result.bar:.2e}")
    assert result.value > 0.0
    assert result.tail_bound >= 0.0
    assert gap <= result.bar + 1e-8

    print("✓ Renewal vs direct tests passed")


def test_renewal_needs_convergence():
    print("\n=== Testing Renewal Precondition ===")

    op, spectral = _conv_operator(), _conv_spectral()
    divergent = spectral.model_copy(update={"rho": 1.2})
    with pytest.raises(DomainError):
        renewal_calc.renewal_M(op, divergent, HAT, 10.0, k_max=2)
    with pytest.raises(DomainError):
        renewal_calc.level_sums(op, HAT, [10.0], 2, orbit_depth=0)

    print("✓ Renewal precondition tests passed")


# ============================================================================
# LEVEL LIMITS
# ============================================================================

def test_calibrate_Cu():
    print("\n=== Testing C_u Calibration ===")

    rows = [[5.0, 0.02, 0.05]]
    expected = max(0.02 * 10.0 ** 1.5, 0.05 * 10.0 ** 1.5 / 4.0)
    assert renewal_calc.calibrate_Cu(rows, [10.0], 1.5, ONE) == pytest.approx(expected, rel=1e-12)
    assert renewal_calc.calibrate_Cu(rows, [10.0], 1.5, ONE, safety=2.0) == pytest.approx(2.0 * expected)
    assert renewal_calc.calibrate_Cu([[1.0]], [10.0], 1.5, ONE) == 0.0

    print("✓ C_u calibration tests passed")


def test_level_predictions_and_series():
    print("\n=== Testing Level Predictions ===")

    op, spectral = _conv_operator(), _conv_spectral()
    constants = {0: 1.4}
    prediction = renewal_calc.level_predictions(op, spectral, constants, 3)
    base = ExtendedPoint.base(CONV)
    assert prediction.k == [1, 2, 3]
    assert prediction.values[0] == pytest.approx(
        level_constant_calc.level_constant_Cj(op, spectral, 0, base, 1.4), rel=1e-12)
    assert all(v > 0.0 for v in prediction.values)

    series = renewal_calc.series_constant(op, spectral, constants, 6)
    print(f"series constant {series.value:.6f} (+ {series.remainder:.2e})")
    assert series.value > 0.0
    assert series.remainder >= 0.0
    assert len(series.per_k) == 6

    print("✓ Level prediction tests passed")


@pytest.mark.slow
def test_level_limits_shape():
    print("\n=== Testing Per-Level Shape (R = 30, 35) ===")

    op, spectral = _conv_operator(), _conv_spectral()
    R_values = [30.0, 35.0]
    p_tilde = renewal_calc.p_tilde_levels(op, spectral, HAT, R_values, 3)
    scaled = np.array([[R ** 1.5 * v for v in row] for R, row in zip(R_values, p_tilde)])
    ratios = scaled[1, 1:] / scaled[0, 1:]
    print(f"scaled levels {np.round(scaled[:, 1:], 5).tolist()}, ratios {np.round(ratios, 4).tolist()}")
    assert np.all((ratios >= 0.7) & (ratios <= 1.3))

    c_j, _ = level_constant_calc.factor_constant(CONV, _alpha_model(), 0, R_grid=R_values)
    C_0 = level_constant_calc.level_constant_Cj(op, spectral, 0, ExtendedPoint.base(CONV), c_j)
    assert scaled[0, 1] == pytest.approx(C_0 * HAT.integral(), rel=0.25)

    print("✓ Per-level shape tests passed")


# ============================================================================
# COUNTING AND FIT
# ============================================================================

def test_brute_count():
    print("\n=== Testing Brute-Force Counts ===")

    report = orbit_counting_calc.brute_count(HYP, EXACT, [1.0, 4.0, 6.0, 8.0])
    print(f"N = {report.N}")
    assert report.N[0] == 1
    assert all(b >= a for a, b in zip(report.N, report.N[1:]))
    oracle = ball_enumeration.brute_force_ball(HYP, EXACT, 8.0, k_cap=3, trunc_N=3, trunc_hyperbolic=3)
    assert report.N[-1] == oracle.size
    assert all(c > 0 for c in report.C_hat)
    assert report.delta == 0.0

    partial = orbit_counting_calc.brute_count(HYP, EXACT, [8.0], node_budget=3, c_prune=0.0)
    assert partial.completeness == "partial"

    print("✓ Brute-force count tests passed")


def _synthetic_report(extra_power: float = 0.0) -> CountReport:
    R = np.arange(10.0, 31.0)
    N = np.floor(R ** (extra_power - 1.5) * np.exp(0.5 * R)).astype(int)
    return CountReport(R=R.tolist(), N=N.tolist(), C_hat=[1.0] * R.size, C_div_hat=[1.0] * R.size,
                       delta=0.5, completeness="exact", c_prune=0.0, nodes=0)


def test_asymptotic_fit():
    print("\n=== Testing Asymptotic Fit ===")

    fit = orbit_counting_calc.asymptotic_fit(_synthetic_report(), 0.5, 1.5, ONE)
    print(f"C_hat {fit.C_hat:.5f} drift {fit.drift:+.5f} drift_div {fit.drift_div:+.5f}")
    assert fit.C_hat == pytest.approx(1.0, abs=1e-2)
    assert abs(fit.drift) < 1e-2
    assert not fit.flagged
    assert abs(fit.drift) < abs(fit.drift_div)
    assert fit.window == [24.0, 25.0, 26.0, 27.0, 28.0, 29.0, 30.0]

    growing = orbit_counting_calc.asymptotic_fit(_synthetic_report(1.0), 0.5, 1.5, ONE)
    assert growing.drift > 0.1
    assert growing.flagged

    short = CountReport(R=[1.0, 2.0, 3.0, 4.0, 5.0, 6.0], N=[1] * 6, C_hat=[1.0] * 6, C_div_hat=[1.0] * 6,
                        delta=0.5, completeness="exact", c_prune=0.0, nodes=0)
    with pytest.raises(DomainError):
        orbit_counting_calc.asymptotic_fit(short, 0.5, 1.5, ONE)

    print("✓ Asymptotic fit tests passed")


# ============================================================================
# DECOMPOSITION AND STEP SPLIT
# ============================================================================

def test_decomposition_check():
    print("\n=== Testing Test-Function Decomposition ===")

    R, width = 10.0, 1e-3
    check = direct_sum_calc.decomposition_check(HYP, EXACT, R, delta=0.5, mollify=width)
    distances = ball_enumeration.enumerate_ball(HYP, EXACT, R + width).distances
    near = int(np.sum(np.abs(np.asarray(distances) - R) <= width))
    print(f"N = {check.brute}, decomposed {check.decomposed:.9f}, mollified {check.mollified:.6f}")
    assert check.exact_match
    assert check.decomposed == pytest.approx(check.brute, rel=1e-12)
    assert abs(check.mollified - check.brute) <= near + 0.01 * check.brute

    print("✓ Decomposition tests passed")


@pytest.mark.slow
def test_decomposition_check_modified_cusp():
    print("\n=== Testing Decomposition (MODIFIED_CUSP, R = 12) ===")

    check = direct_sum_calc.decomposition_check(CONV, _alpha_model(), 12.0)
    print(f"N = {check.brute}, decomposed {check.decomposed:.9f}")
    assert check.exact_match

    print("✓ Modified-cusp decomposition tests passed")


def test_step_split():
    print("\n=== Testing Step Split ===")

    op, spectral = _hyp_operator(), _hyp_spectral()
    R = 9.0
    split = direct_sum_calc.step_split(op, spectral, HAT, k=1, r=4.0, R=R)
    print(f"A = {split.A:.6e}, B = {split.B:.6e}, C = {split.C:.6e}, total = {split.total:.6e}")
    assert min(split.A, split.B, split.C) >= 0.0
    assert split.A + split.B + split.C == pytest.approx(split.total, rel=1e-12)
    assert split.total > 0.0

    level_two = renewal_calc.p_tilde_levels(op, spectral, HAT, [R], 2, orbit_depth=2)[0, 2]
    assert level_two == pytest.approx(split.total, rel=1e-6)

    print("✓ Step split tests passed")


def run_all_tests():
    print("=" * 60)
    print("ORBIT COUNTING TEST SUITE")
    print("=" * 60)

    try:
        test_counting_shape()
        test_level_constant_branches()
        test_level_vector_matches_pointwise()
        test_empirical_level_constant()
        test_p_tilde_apply()
        test_shift_grid_and_tail_sum()
        test_level_zero_and_one()
        test_levels_against_direct_sum()
        test_renewal_matches_direct_sum()
        test_renewal_needs_convergence()
        test_calibrate_Cu()
        test_level_predictions_and_series()
        test_level_limits_shape()
        test_brute_count()
        test_asymptotic_fit()
        test_decomposition_check()
        test_decomposition_check_modified_cusp()
        test_step_split()

        print("\n" + "=" * 60)
        print("✓ ALL ORBIT COUNTING TESTS PASSED")
        print("=" * 60)
        return True
    except Exception as e:
        print(f"\n✗ TEST FAILED: {e}")
        import traceback
        traceback.print_exc()
        return False


if __name__ == "__main__":
    success = run_all_tests()
    sys.exit(0 if success else 1)
