"""
Test script for Clairaut geodesic calculations
Tests the excursion integrals, the geodesic solver, the envelope check,
the distance table and the parabolic factor tail

Run: python calculation_engines/clairaut_calculations/test_clairaut_calculations.py
"""
import math
import sys
from pathlib import Path

# Add project root to path
project_root = Path(__file__).parent.parent.parent
sys.path.insert(0, str(project_root))

import mpmath
import numpy as np
import pytest
from scipy.special import zeta

from calculation_engines.clairaut_calculations.clairaut_integrals_calc import clairaut_integrals_calc
from calculation_engines.clairaut_calculations.distance_table_calc import DistanceTableCalculation
from calculation_engines.clairaut_calculations.envelope_calc import envelope_check_calc
from calculation_engines.clairaut_calculations.factor_tail_calc import factor_tail_calc
from calculation_engines.clairaut_calculations.geodesic_calc import cusp_geodesic_calc
from calculation_engines.interfaces.calculation_input_models import SlowlyVaryingSpec
from calculation_engines.profile_calculations.build_profile_calc import build_profile_calc
from data_access.cache_manager import CacheManager
from shared.middleware.error_handler import DomainError

UNIT = SlowlyVaryingSpec.constant(1.0)
HYPERBOLIC = build_profile_calc.hyperbolic_profile()
tables = DistanceTableCalculation(cache=CacheManager(enabled=False))


def _default_profile():
    return build_profile_calc.calculate(alpha=1.5, L=UNIT, A=0.4, B=2.0)


def test_integral_constants():
    print("\n=== Testing Excursion Integral Constants ===")

    constants = clairaut_integrals_calc.integral_constants()
    unit, _ = constants["unit"]
    log_two, _ = constants["log2"]
    print(f"unit = {unit:.12f}, log2 = {log_two:.12f}")
    assert unit == pytest.approx(1.0, abs=1e-8)
    assert log_two == pytest.approx(math.log(2.0), abs=1e-8)

    print("✓ Integral constant tests passed")


def test_hyperbolic_oracle():
    print("\n=== Testing Hyperbolic Distance Oracle ===")

    for n in [1.0, 2.0, 5.0, 10.0, 100.0]:
        geo = cusp_geodesic_calc.distance_for_n(HYPERBOLIC, n)
        exact = math.acosh(1.0 + n * n / 2.0)
        print(f"n={n:6.1f}: d_full={geo.d_full:.10f}, arccosh={exact:.10f}")
        assert geo.d_full == pytest.approx(exact, abs=1e-6)
        assert math.exp(2.0 * geo.h_n) == pytest.approx(1.0 + n * n / 4.0, rel=1e-8)
        assert cusp_geodesic_calc.exact_distance(HYPERBOLIC, n) == pytest.approx(exact, abs=1e-6)

    # e^{2h} = 1 + n^2/4 is the hyperbolic height integral sqrt(1 - e^{-2h})
    for h in [0.1, 1.0, 4.0]:
        values = clairaut_integrals_calc.calculate(profile=HYPERBOLIC, h=h)
        assert values["I"] == pytest.approx(math.sqrt(-math.expm1(-2.0 * h)), abs=1e-10)

    print("✓ Hyperbolic oracle tests passed")


def test_f_n():
    print("\n=== Testing Excursion Ratio f_n ===")

    s = np.linspace(0.0, 3.0, 31)
    assert np.allclose(clairaut_integrals_calc.f_n(HYPERBOLIC, 3.0, s), np.exp(-s), rtol=1e-14)
    assert clairaut_integrals_calc.f_n(HYPERBOLIC, 3.0, 0.0) == 1.0

    profile = _default_profile()
    f = clairaut_integrals_calc.f_n(profile, 5.0, np.linspace(0.0, 5.0, 101))
    assert np.all(np.diff(f) < 0.0)
    assert np.all((f > 0.0) & (f <= 1.0))

    print("✓ f_n tests passed")


def test_substitution_against_algebraic_weight():
    print("\n=== Testing s = w^2 Substitution ===")

    profile = _default_profile()
    pairs = [(profile, h, profile.glue_end) for h in [0.05, 0.5, 2.0, 6.0, 15.0]]
    pairs += [(profile, h, 0.0) for h in [1.0, 8.0, 20.0]]
    pairs += [(HYPERBOLIC, h, 0.0) for h in [0.3, 7.0]]
    for prof, h, base in pairs:
        I = clairaut_integrals_calc.calculate(profile=prof, h=h, base=base)["I"]
        ref = clairaut_integrals_calc.reference_height_integral(prof, h, base)
        assert I == pytest.approx(ref, abs=1e-6), f"h={h}, base={base}"

    print("✓ Substitution tests passed")


def test_integrals_against_mpmath():
    print("\n=== Testing Clairaut Integrals Against mpmath ===")

    profile = _default_profile()
    base = profile.glue_end

    def phi(t):
        # post-glue profile with L = 1: log T(t) = -t + 1.5 log t
        return t - mpmath.mpf("1.5") * mpmath.log(t)

    for h in [0.5, 3.0]:
        def integrand(s):
            f2 = mpmath.exp(-2 * (top - phi(h - s + base)))
            return f2 / mpmath.sqrt(1 - f2)

        def length(s):
            f2 = mpmath.exp(-2 * (top - phi(h - s + base)))
            return 1 / mpmath.sqrt(1 - f2) - 1

        values = clairaut_integrals_calc.calculate(profile=profile, h=h, base=base)
        with mpmath.workdps(30):
            top = phi(mpmath.mpf(h) + base)
            I_ref = float(mpmath.quad(integrand, [0, h]))
            J_ref = float(mpmath.quad(length, [0, h]))
        assert values["I"] == pytest.approx(I_ref, abs=1e-8)
        assert values["J"] == pytest.approx(J_ref, abs=1e-8)

    print("✓ mpmath agreement tests passed")


def test_monotone_in_n():
    print("\n=== Testing Monotonicity of h_n and d_n ===")

    profile = _default_profile()
    geos = [cusp_geodesic_calc.distance_for_n(profile, n) for n in np.geomspace(1.0, 1e6, 13)]
    heights = np.array([g.h_n for g in geos])
    lengths = np.array([g.d_n for g in geos])
    assert np.all(np.diff(heights) > 0.0)
    assert np.all(np.diff(lengths) > 0.0)
    assert all(g.root_residual < 1e-10 for g in geos)
    assert all(g.d_full == pytest.approx(g.d_n + 2.0 * profile.glue_end) for g in geos)

    with pytest.raises(DomainError):
        cusp_geodesic_calc.distance_for_n(profile, 0.5)

    print("✓ Monotonicity tests passed")


def test_height_asymptotics():
    print("\n=== Testing Excursion Height Asymptotics ===")

    profile = _default_profile()
    n = 1e6
    h, residual = cusp_geodesic_calc.height_for_n(profile, n)
    log_n = math.log(n)
    first_order = log_n + 1.5 * math.log(log_n) - math.log(2.0) - profile.glue_end

    # second-order height: H - 1.5 log H = log(n/2)
    H = log_n
    for _ in range(100):
        H = math.log(n / 2.0) + 1.5 * math.log(H)
    second_order = H - profile.glue_end
    print(f"h = {h:.6f}, first order = {first_order:.6f}, second order = {second_order:.6f}")
    assert residual < 1e-10
    assert abs(h - second_order) < 0.2
    assert abs(h - first_order) < 0.5

    print("✓ Height asymptotics tests passed")


def test_distance_trend():
    print("\n=== Testing Distance Asymptotics ===")

    profile = _default_profile()
    residuals = []
    for k in range(3, 8):
        n = 10.0 ** k
        geo = cusp_geodesic_calc.distance_for_n(profile, n)
        first = cusp_geodesic_calc.asymptotic_distance(1.5, UNIT, n)
        second = cusp_geodesic_calc.second_order_distance(1.5, UNIT, n)
        residuals.append(abs(geo.d_full - first))
        print(f"n=1e{k}: d_full={geo.d_full:.6f}, |first| = {residuals[-1]:.4f}, "
              f"|second| = {abs(geo.d_full - second):.4f}")

    assert all(b < a for a, b in zip(residuals, residuals[1:]))
    assert residuals[-1] <= 0.75

    print("✓ Distance trend tests passed")


def test_envelope():
    print("\n=== Testing Excursion Envelope ===")

    profile = _default_profile()
    report = envelope_check_calc.calculate(profile, np.geomspace(1e3, 1e7, 20), n_0=1e3)
    assert report.passed
    assert report.first_violation is None
    assert len(report.rows) == 20

    hyperbolic = envelope_check_calc.calculate(HYPERBOLIC, [5.0, 50.0], n_0=1.0)
    assert hyperbolic.passed

    flagged = envelope_check_calc.calculate(profile, [2.0, 1e5], n_0=1e3)
    assert flagged.rows[0].below_threshold
    assert not flagged.rows[1].below_threshold
    assert flagged.rows[1].passed

    print("✓ Envelope tests passed")


def test_hyperbolic_distance_table():
    print("\n=== Testing Distance Table (hyperbolic) ===")

    table = tables.calculate(profile=HYPERBOLIC, knots=300, log10_max=6.0)
    assert table.x_max >= 1e6
    n = np.geomspace(1.0, 1e5, 40)
    exact = np.arccosh(1.0 + n ** 2 / 2.0)
    assert np.max(np.abs(table.distance(n) - exact)) < 1e-3
    assert np.all(np.diff(table.distance(n)) > 0.0)
    assert table.translation(table.distance(50.0)) == pytest.approx(50.0, rel=1e-4)

    tail = table.tail_sum(1.0, 100)
    print(f"tail_sum(1, 100) = {tail:.8f}, zeta(2, 101) = {zeta(2.0, 101.0):.8f}")
    assert tail == pytest.approx(zeta(2.0, 101.0), rel=1e-3)
    assert table.tail_sum(0.5, 10) == math.inf

    with pytest.raises(DomainError):
        table.distance(10.0 * table.x_max)
    with pytest.raises(DomainError):
        table.translation(table.d_max + 1.0)

    print("✓ Distance table tests passed")


def test_hyperbolic_factor_tail():
    print("\n=== Testing Factor Tail (hyperbolic) ===")

    table = tables.calculate(profile=HYPERBOLIC, knots=300, log10_max=6.0)
    result = factor_tail_calc.calculate(HYPERBOLIC, delta=0.5, Delta=1.0, R_grid=[16.0, 18.0, 20.0], table=table)
    print(f"values = {result.values}, reference = {result.reference}")
    assert result.reference == pytest.approx(0.5)
    assert result.values[-1] == pytest.approx(0.5, rel=1e-2)
    assert all(c > 0 for c in result.counts)

    two_sided = factor_tail_calc.calculate(HYPERBOLIC, delta=0.5, Delta=1.0, R_grid=[20.0], table=table,
                                           two_sided=True)
    assert two_sided.values[0] == pytest.approx(2.0 * result.values[-1])
    assert two_sided.reference == pytest.approx(1.0)

    c_j, spread = factor_tail_calc.plateau(result, window=2)
    assert c_j == pytest.approx(0.5, rel=2e-2)
    assert spread < 0.05

    # Delta-additivity of the raw window sums
    wide, _ = factor_tail_calc.window_sum(table, 0.5, 18.0, 2.0)
    left, _ = factor_tail_calc.window_sum(table, 0.5, 18.0, 1.0)
    right, _ = factor_tail_calc.window_sum(table, 0.5, 19.0, 1.0)
    assert wide == pytest.approx(left + right, rel=1e-12)

    fast = factor_tail_calc.calculate(HYPERBOLIC, delta=2.0, Delta=1.0, R_grid=[20.0], table=table)
    assert fast.values[0] < 1e-8 * result.values[-1]

    with pytest.raises(DomainError):
        factor_tail_calc.calculate(HYPERBOLIC, delta=0.5, Delta=1.0, R_grid=[table.d_max], table=table)
    with pytest.raises(DomainError):
        factor_tail_calc.calculate(HYPERBOLIC, delta=0.0, Delta=1.0, R_grid=[10.0], table=table)

    print("✓ Hyperbolic factor tail tests passed")


@pytest.mark.slow
def test_tail_at_critical_exponent():
    print("\n=== Testing Distance Tail at s = 1/2 ===")

    profile = _default_profile()
    table = tables.calculate(profile=profile, knots=400, log10_max=7.0)
    assert not table.diverges(0.5)
    assert table.diverges(0.49)
    assert tables.calculate(profile=HYPERBOLIC, knots=300, log10_max=6.0).diverges(0.5)

    near, far = table.tail_sum(0.5, 100), table.tail_sum(0.5, 1000)
    print(f"tail_sum(1/2, 100) = {near:.6f}, tail_sum(1/2, 1000) = {far:.6f}")
    assert math.isfinite(near)
    assert 0.0 < far < near
    assert table.far_tail(0.5) > 0.0
    assert table.tail_sum(0.5001, 100) < near

    print("✓ Critical tail tests passed")


@pytest.mark.slow
def test_factor_tail_constant():
    print("\n=== Testing Factor Tail Constant (alpha = 1.5) ===")

    profile = _default_profile()
    table = tables.calculate(profile=profile, knots=800, log10_max=9.0)
    result = factor_tail_calc.calculate(profile, delta=0.5, Delta=1.0, R_grid=[26.0, 28.0, 30.0], table=table)
    print(f"values = {result.values}, reference = {result.reference:.6f}")
    assert result.reference == pytest.approx(math.sqrt(2.0))
    assert abs(result.values[-1] / result.reference - 1.0) < 0.25

    print("✓ Factor tail constant tests passed")


def run_all_tests():
    print("=" * 60)
    print("CLAIRAUT GEODESIC TEST SUITE")
    print("=" * 60)

    try:
        test_integral_constants()
        test_hyperbolic_oracle()
        test_f_n()
        test_substitution_against_algebraic_weight()
        test_integrals_against_mpmath()
        test_monotone_in_n()
        test_height_asymptotics()
        test_distance_trend()
        test_envelope()
        test_hyperbolic_distance_table()
        test_hyperbolic_factor_tail()
        test_tail_at_critical_exponent()
        test_factor_tail_constant()

        print("\n" + "=" * 60)
        print("✓ ALL CLAIRAUT GEODESIC TESTS PASSED")
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
