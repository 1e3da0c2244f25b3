"""
Test script for transfer operator calculations
Tests the weights w_s, the discretized operator, power iteration, the
critical exponent, the convergence verdict and the Doob weights

Run: python calculation_engines/transfer_calculations/test_transfer_calculations.py
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
from hypothesis import given, settings, strategies as st

from calculation_engines.clairaut_calculations.distance_table_calc import DistanceTableCalculation
from calculation_engines.coding_calculations.cocycle_calc import EXACT, extended_cocycle
from calculation_engines.coding_calculations.words_calc import (
    alphabet, compose, letter_isometry, word_enumeration,
)
from calculation_engines.hyperbolic_calculations.mobius_calc import hyperbolic_geometry as geo
from calculation_engines.hyperbolic_calculations.schottky_calc import schottky_construction
from calculation_engines.interfaces.calculation_input_models import (
    DistanceModel, ExtendedPoint, Letter, SchottkyData, SlowlyVaryingSpec, Word,
)
from calculation_engines.profile_calculations.build_profile_calc import build_profile_calc
from calculation_engines.transfer_calculations.critical_calc import (
    CONVERGENT, critical_exponent_calc, factor_exponent,
)
from calculation_engines.transfer_calculations.doob_calc import doob_transform
from calculation_engines.transfer_calculations.mesh_calc import BoundaryMesh, mesh_construction
from calculation_engines.transfer_calculations.operator_calc import TransferOperator, transfer_assembly
from calculation_engines.transfer_calculations.spectral_calc import spectral_radius_calc
from data_access.cache_manager import CacheManager
from shared.middleware.error_handler import DomainError, NumericError

CUSP = schottky_construction.cusp_pair()
HYP = schottky_construction.hyperbolic_pair()
tables = DistanceTableCalculation(cache=CacheManager(enabled=False))


@functools.lru_cache(maxsize=None)
def _cusp_operator(s: float = 0.8, tail_compensation: bool = True) -> TransferOperator:
    return transfer_assembly.calculate(data=CUSP, model=EXACT, trunc_N=8, trunc_hyperbolic=4,
                                       mesh_points=32, tail_compensation=tail_compensation, s=s)


@functools.lru_cache(maxsize=None)
def _alpha_model() -> DistanceModel:
    profile = build_profile_calc.calculate(alpha=1.5, L=SlowlyVaryingSpec.constant(1.0), A=0.4, B=2.0)
    return DistanceModel("MODIFIED_CUSP", tables.calculate(profile=profile, knots=400, log10_max=7.0))


def _sample_nodes(op: TransferOperator, count: int = 5) -> np.ndarray:
    return np.linspace(0, op.size - 2, count).astype(int)


# ============================================================================
# WEIGHTS AND OPERATOR
# ============================================================================

def test_weight_w():
    print("\n=== Testing Weights w_s ===")

    inside = ExtendedPoint.boundary(math.pi)
    assert transfer_assembly.weight_w(0.7, Word((Letter(0, 3),)), inside, EXACT, CUSP) == 0.0
    assert transfer_assembly.weight_w(0.7, Word(), inside, EXACT, CUSP) == 1.0

    x = ExtendedPoint.boundary(0.4)
    assert transfer_assembly.weight_w(0.0, Word((Letter(0, 5), Letter(1, -1))), x, EXACT, CUSP) == 1.0

    # far from the cusp the weight sees d(o, p^n o) - 2 (x_P|x)_o
    s, n = 0.5, 200
    word = Word((Letter(0, n),))
    d = extended_cocycle.word_distance(word, EXACT, CUSP)
    g = geo.gromov(CUSP.factors[0].fixed_points[0], x.theta, CUSP.o)
    ratio = transfer_assembly.weight_w(s, word, x, EXACT, CUSP) / math.exp(-s * (d - 2.0 * g))
    print(f"weight ratio at n = {n}: {ratio:.8f}")
    assert abs(math.log(ratio)) <= 0.01 * s

    print("✓ Weight tests passed")


@settings(max_examples=25, deadline=None)
@given(seed=st.integers(min_value=0, max_value=10_000), s=st.floats(min_value=0.3, max_value=2.0))
def test_weight_cocycle(seed, s):
    rng = np.random.default_rng(seed)
    word = word_enumeration.random_word(CUSP, rng, int(rng.integers(2, 6)), (12, 3))
    cut = int(rng.integers(1, word.length))
    first, second = Word(word.letters[:cut]), Word(word.letters[cut:])
    theta = 0.5 if second.last_factor == 0 else math.pi - 0.2
    x = ExtendedPoint.boundary(theta)
    moved = ExtendedPoint.boundary(float(compose(CUSP, second).apply_theta(theta)))
    lhs = transfer_assembly.weight_w(s, word, x, EXACT, CUSP)
    rhs = (transfer_assembly.weight_w(s, first, moved, EXACT, CUSP)
           * transfer_assembly.weight_w(s, second, x, EXACT, CUSP))
    assert lhs == pytest.approx(rhs, rel=1e-8, abs=1e-300)


def test_apply_L_against_direct_sum():
    print("\n=== Testing L_s 1 Against Direct Summation ===")

    op = _cusp_operator(0.8, False)
    values = transfer_assembly.apply_L(op, np.ones(op.size))
    letters = alphabet(CUSP, 8, 4)
    worst = 0.0
    for node in _sample_nodes(op, 12):
        theta = op.mesh.theta[node]
        owner = op.mesh.owner[node]
        direct = 0.0
        for letter in letters:
            if letter.factor == owner:
                continue
            direct += math.exp(-0.8 * float(geo.cocycle_b(letter_isometry(CUSP, letter), theta, CUSP.o)))
        worst = max(worst, abs(values[node] / direct - 1.0))
    x0_direct = sum(math.exp(-0.8 * extended_cocycle.word_distance(Word((a,)), EXACT, CUSP)) for a in letters)
    worst = max(worst, abs(values[op.mesh.x0_index] / x0_direct - 1.0))
    print(f"worst relative gap: {worst:.2e}")
    assert worst <= 1e-10

    # letter-by-letter evaluation at a node agrees with the assembled matrix
    node = int(_sample_nodes(op, 3)[1])
    x = ExtendedPoint.boundary(op.mesh.theta[node])
    assert transfer_assembly.apply_at(op, np.ones(op.size), x) == pytest.approx(values[node], rel=1e-12)

    # x0 is never an interpolation column
    spike = np.zeros(op.size)
    spike[op.mesh.x0_index] = 1.0
    assert np.all(transfer_assembly.apply_L(op, spike) == 0.0)

    print("✓ Direct summation tests passed")


def test_apply_L_monotone_in_s():
    print("\n=== Testing Monotonicity in s ===")

    op = _cusp_operator(0.8, True)
    one = np.ones(op.size)
    low = transfer_assembly.apply_L(op.at(0.7), one)
    high = transfer_assembly.apply_L(op.at(0.9), one)
    assert np.all(high < low)
    assert np.all(transfer_assembly.tail_estimate(op, one) > 0.0)

    # divergent parabolic tail under EXACT_H2 at s = 1/2
    assert op.at(0.5).infinite
    with pytest.raises(DomainError):
        op.at(0.5).matrix()

    print("✓ Monotonicity tests passed")


def test_mesh_structure():
    print("\n=== Testing Boundary Mesh ===")

    mesh = mesh_construction.calculate(CUSP, mesh_points=16)
    assert mesh.owner[mesh.x0_index] == -1
    assert mesh.theta[mesh.x0_index] == pytest.approx(CUSP.x0.theta)
    for (j, k), node in mesh.fixed_nodes.items():
        fixed = CUSP.factors[j].fixed_points[k]
        assert mesh.owner[node] == j
        assert abs(math.sin((mesh.theta[node] - fixed.theta) / 2.0)) < 1e-9

    values = np.cos(mesh.theta)
    probe = mesh.theta[mesh.owner == 1][:5] + 1e-4
    assert np.allclose(mesh.interpolate(values, probe, 1), np.cos(probe), atol=1e-3)
    with pytest.raises(NumericError):
        mesh.stencil(1, [CUSP.x0.theta])

    print("✓ Boundary mesh tests passed")


# ============================================================================
# SPECTRAL RADIUS AND CRITICAL EXPONENT
# ============================================================================

def test_constant_weight_operator():
    print("\n=== Testing Constant-Weight Operator ===")

    data = SchottkyData(factors=(CUSP.factors[0],), family="custom")
    letters = alphabet(data, 5)
    n = len(letters)
    mesh = BoundaryMesh(data=data, theta=np.array([0.0]), owner=np.array([-1]), grids=[[]])
    empty_i, empty_f = np.zeros(0, dtype=int), np.zeros(0)
    op = TransferOperator(
        data=data, model=EXACT, mesh=mesh, trunc_N=5, trunc_hyperbolic=None, tail_compensation=False,
        letters=letters, rows=np.zeros(n, dtype=int), cols=np.zeros(n, dtype=int), coef=np.ones(n),
        cocycle=np.full(n, 2.0), tails=[], tail_rows=empty_i, tail_cols=empty_i, tail_tag=empty_i,
        tail_gromov=empty_f, s=0.5,
    )
    result = spectral_radius_calc.spectral_radius(op)
    assert result.rho == pytest.approx(n * math.exp(-1.0), rel=1e-12)
    assert not result.bipartite

    print("✓ Constant-weight tests passed")


def test_rho_decreasing_in_s():
    print("\n=== Testing rho_s Against s ===")

    op = _cusp_operator(0.8, True)
    curve = spectral_radius_calc.rho_curve(op, [0.6, 0.7, 0.8, 1.0, 1.4])
    print(curve.to_string(index=False))
    assert list(curve.columns) == ["s", "rho", "iterations"]
    assert np.all(np.diff(curve["rho"].to_numpy()) < 0.0)

    result = spectral_radius_calc.spectral_radius(op)
    assert result.bipartite
    assert result.min_max_ratio > 0.0
    assert np.all(result.h > 0.0)
    residual = op.matrix() @ result.h - result.rho * result.h
    assert np.max(np.abs(residual)) < 1e-7

    print("✓ rho curve tests passed")


def test_truncation_monotone():
    print("\n=== Testing Truncation Monotonicity ===")

    scan = spectral_radius_calc.truncation_scan(CUSP, EXACT, [2, 4, 8, 16], s=0.8, trunc_hyperbolic=4,
                                                mesh_points=32, tail_compensation=False)
    print(f"rho = {scan.rho}, limit = {scan.limit:.8f} +- {scan.error_bar:.2e}")
    assert scan.N == [2, 4, 8, 16]
    assert all(b >= a - 1e-12 for a, b in zip(scan.rho, scan.rho[1:]))
    assert scan.limit >= scan.rho[-1] - 1e-12
    assert scan.error_bar == pytest.approx(scan.rho[-1] - scan.rho[-2])

    compensated = spectral_radius_calc.truncation_scan(CUSP, EXACT, [4, 16], s=0.8, trunc_hyperbolic=4,
                                                       mesh_points=32)
    assert abs(compensated.rho[1] - compensated.rho[0]) < scan.rho[-1] - scan.rho[1]

    print("✓ Truncation tests passed")


def test_poincare_comparison():
    print("\n=== Testing Poincare Comparison ===")

    op = _cusp_operator(0.8, False)
    one = spectral_radius_calc.poincare_comparison(op, 1)
    assert one.ratio == pytest.approx(1.0, rel=1e-12)
    two = spectral_radius_calc.poincare_comparison(op, 2)
    print(f"k = 2 ratio: {two.ratio:.6f}")
    assert 0.5 < two.ratio < 2.0

    print("✓ Poincare comparison tests passed")


def test_hyperbolic_critical_exponent():
    print("\n=== Testing Critical Exponent (hyperbolic pair) ===")

    assert factor_exponent(HYP) == 0.0
    assert factor_exponent(CUSP) == 0.5
    coarse = critical_exponent_calc.critical_exponent(HYP, EXACT, trunc_N=8, mesh_points=48)
    fine = critical_exponent_calc.critical_exponent(HYP, EXACT, trunc_N=8, mesh_points=96)
    print(f"delta_Gamma = {coarse.delta_gamma:.6f} (48 points), {fine.delta_gamma:.6f} (96 points)")
    assert coarse.branch == "critical_gap"
    assert 0.0 < fine.delta_gamma < 1.0
    assert abs(fine.delta_gamma - coarse.delta_gamma) < 1e-3

    op = transfer_assembly.calculate(data=HYP, model=EXACT, trunc_N=8, mesh_points=96, s=fine.delta_gamma)
    assert abs(spectral_radius_calc.spectral_radius(op).rho - 1.0) < 1e-8

    with pytest.raises(DomainError):
        critical_exponent_calc.critical_exponent(HYP, EXACT, trunc_N=8, mesh_points=48,
                                                 s_hi=0.5 * fine.delta_gamma)

    print("✓ Critical exponent tests passed")


def test_classify_exact_cusp_pair():
    print("\n=== Testing Classification (EXACT_H2 cusp pair) ===")

    # the hyperbolic parabolic factor diverges at 1/2, so rho_delta is infinite
    result = critical_exponent_calc.classify(CUSP, EXACT, trunc_N=8, trunc_hyperbolic=4, mesh_points=32)
    assert result.verdict == "Divergent"
    assert math.isinf(result.rho_at_delta)
    assert result.diagnostics["bipartite"]

    print("✓ Classification tests passed")


@pytest.mark.slow
def test_classification_flip_scan():
    print("\n=== Testing Classification Flip (alpha = 1.5) ===")

    model = _alpha_model()
    scan = critical_exponent_calc.flip_scan(
        lambda m: schottky_construction.cusp_pair(h_power=m), model, [1, 2, 4, 8],
        trunc_N=32, trunc_hyperbolic=4, mesh_points=48,
    )
    print(f"m = {scan.m}, rho = {scan.rho}, verdicts = {scan.verdicts}, m* = {scan.m_star}")
    assert all(b < a for a, b in zip(scan.rho, scan.rho[1:]))
    assert scan.verdicts[-1] == CONVERGENT
    assert scan.m_star is not None

    check = critical_exponent_calc.refinement_check(schottky_construction.cusp_pair(h_power=8), model,
                                                    trunc_N=32, trunc_hyperbolic=4, mesh_points=48)
    print(f"refinement change: {check.max_change:.2e}")
    assert check.stable
    assert check.max_change < 5e-3

    exotic = critical_exponent_calc.critical_exponent(schottky_construction.cusp_pair(h_power=8), model,
                                                      trunc_N=32, trunc_hyperbolic=4, mesh_points=48)
    assert exotic.branch == "exotic"
    assert exotic.delta_gamma == 0.5

    print("✓ Flip scan tests passed")


# ============================================================================
# DOOB WEIGHTS
# ============================================================================

def test_doob_normalization():
    print("\n=== Testing Doob Normalization ===")

    op = _cusp_operator(0.8, True)
    spectral = spectral_radius_calc.spectral_radius(op)
    points = [ExtendedPoint.boundary(op.mesh.theta[node]) for node in _sample_nodes(op, 4)]
    points.append(ExtendedPoint.base(CUSP))
    for x in points:
        reports = doob_transform.level_normalization(op, spectral, x, 3)
        assert reports[0].total == 1.0
        first = reports[1]
        assert 1.0 - first.tail_bar - 1e-6 <= first.total <= 1.0 + 1e-6
        for report in reports[1:]:
            assert abs(report.total - 1.0) <= report.bar + 1e-6
        print(f"theta = {x.theta:+.4f}: totals = {[round(r.total, 8) for r in reports]}")

    assert doob_transform.doob_weights(op, spectral, Word(), points[0]) == 1.0
    word = Word((Letter(0, 1),))
    level_one = sum(doob_transform.doob_weights(op, spectral, Word((a,)), points[-1])
                    for a in alphabet(CUSP, 8, 4))
    assert level_one == pytest.approx(doob_transform.level_normalization(op, spectral, points[-1], 1)[1].total,
                                      rel=1e-10)
    inside = ExtendedPoint.boundary(math.pi)
    assert doob_transform.doob_weights(op, spectral, word, inside) == 0.0

    print("✓ Doob normalization tests passed")


def test_doob_cocycle():
    print("\n=== Testing Doob Cocycle ===")

    op = _cusp_operator(0.8, True)
    spectral = spectral_radius_calc.spectral_radius(op)
    rng = np.random.default_rng(3)
    worst = 0.0
    for _ in range(40):
        word = word_enumeration.random_word(CUSP, rng, int(rng.integers(2, 5)), (8, 3))
        cut = int(rng.integers(1, word.length))
        first, second = Word(word.letters[:cut]), Word(word.letters[cut:])
        candidates = np.flatnonzero((op.mesh.owner != second.last_factor) & (op.mesh.owner >= 0))
        x = ExtendedPoint.boundary(op.mesh.theta[int(rng.choice(candidates))])
        moved = ExtendedPoint.boundary(float(compose(CUSP, second).apply_theta(x.theta)))
        lhs = doob_transform.doob_weights(op, spectral, word, x)
        rhs = (doob_transform.doob_weights(op, spectral, first, moved)
               * doob_transform.doob_weights(op, spectral, second, x))
        worst = max(worst, abs(lhs - rhs) / max(lhs, 1e-300))
    print(f"worst relative cocycle defect: {worst:.2e}")
    assert worst <= 1e-8

    spectral_inf = spectral_radius_calc.spectral_radius(op.at(0.5))
    with pytest.raises(DomainError):
        doob_transform.doob_weights(op.at(0.5), spectral_inf, Word((Letter(0, 1),)), ExtendedPoint.base(CUSP))

    print("✓ Doob cocycle tests passed")


def run_all_tests():
    print("=" * 60)
    print("TRANSFER OPERATOR TEST SUITE")
    print("=" * 60)

    try:
        test_weight_w()
        test_weight_cocycle()
        test_apply_L_against_direct_sum()
        test_apply_L_monotone_in_s()
        test_mesh_structure()
        test_constant_weight_operator()
        test_rho_decreasing_in_s()
        test_truncation_monotone()
        test_poincare_comparison()
        test_hyperbolic_critical_exponent()
        test_classify_exact_cusp_pair()
        test_classification_flip_scan()
        test_doob_normalization()
        test_doob_cocycle()

        print("\n" + "=" * 60)
        print("✓ ALL TRANSFER OPERATOR TESTS PASSED")
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
