"""
Test script for cusp profile calculations
Tests profile construction, evaluation, curvature and the inverse height u

Run: python calculation_engines/profile_calculations/test_profile_calculations.py
"""
import math
import sys
from pathlib import Path

# Add project root to path
project_root = Path(__file__).parent.parent.parent
sys.path.insert(0, str(project_root))

import numpy as np
import pytest

from calculation_engines.interfaces.calculation_input_models import SlowlyVaryingSpec
from calculation_engines.profile_calculations.build_profile_calc import build_profile_calc, certificate_grid
from calculation_engines.profile_calculations.profile_eval_calc import profile_eval_calc
from calculation_engines.profile_calculations.inverse_height_calc import inverse_height_calc
from shared.middleware.error_handler import DomainError, ProfileConstructionError

UNIT = SlowlyVaryingSpec.constant(1.0)


def _default_profile():
    return build_profile_calc.calculate(alpha=1.5, L=UNIT, A=0.4, B=2.0)


def test_hyperbolic_profile():
    print("\n=== Testing Hyperbolic Test Profile ===")

    profile = build_profile_calc.hyperbolic_profile()
    assert profile.certificate.passed
    assert profile_eval_calc.eval_T(profile, -3.0) == pytest.approx(math.exp(3.0), rel=1e-15)
    t = np.linspace(-5.0, 50.0, 111)
    assert np.allclose(profile_eval_calc.eval_T(profile, t), np.exp(-t), rtol=1e-15)
    assert np.allclose(profile_eval_calc.curvature(profile, t), -1.0, atol=1e-15)
    assert inverse_height_calc.u_of_s(profile, math.exp(5.0)) == pytest.approx(5.0, abs=1e-12)

    print("✓ Hyperbolic profile tests passed")


def test_build_profile():
    print("\n=== Testing Profile Construction ===")

    profile = _default_profile()
    cert = profile.certificate
    print(f"alpha=1.5, A=0.4, B=2: glue_end = {profile.glue_end}, ladder = {cert.ladder}")
    print(f"K range on grid: [{cert.min_K:.4f}, {cert.max_K:.4f}], max (log T)' = {cert.max_log_dT:.4f}")
    assert cert.passed
    assert profile.glue_end > 4.0 * profile.alpha
    assert profile.glue_end == pytest.approx(14.0)
    assert cert.ladder == [7.0, 14.0]
    assert profile.glue_coeffs[:3] == (0.0, 0.0, 0.0)
    assert -4.0 - 1e-12 <= cert.min_K and cert.max_K <= -0.16 + 1e-12
    assert cert.max_log_dT < 0.0

    stricter = build_profile_calc.calculate(alpha=1.5, L=UNIT, A=0.5, B=2.0)
    print(f"alpha=1.5, A=0.5, B=2: glue_end = {stricter.glue_end}")
    assert stricter.certificate.passed
    assert stricter.glue_end > 6.0

    logged = build_profile_calc.calculate(alpha=1.5, L=SlowlyVaryingSpec.power_of_log(1.0), A=0.4, B=2.0)
    assert logged.certificate.passed

    with pytest.raises(ProfileConstructionError) as err:
        build_profile_calc.calculate(alpha=1.5, L=UNIT, A=0.999, B=1.001, ladder_cap=2)
    assert err.value.details["ladder"] == [7.0, 14.0]
    assert err.value.details["failing_points"]

    with pytest.raises(DomainError):
        build_profile_calc.calculate(alpha=0.5, L=UNIT, A=0.4, B=2.0)
    for A, B in [(1.0, 2.0), (0.4, 1.0)]:
        with pytest.raises(DomainError):
            build_profile_calc.calculate(alpha=1.5, L=UNIT, A=A, B=B)

    print("✓ Profile construction tests passed")


def test_eval_regions_and_seams():
    print("\n=== Testing Profile Regions and Seams ===")

    profile = _default_profile()
    a = profile.glue_end

    assert profile_eval_calc.eval_T(profile, -3.0) == pytest.approx(math.exp(3.0), rel=1e-14)
    expected = math.exp(-(a + 2.0)) * (a + 2.0) ** 1.5
    assert profile_eval_calc.eval_T(profile, a + 2.0) == pytest.approx(expected, rel=1e-13)

    for seam in (0.0, a):
        left = np.nextafter(seam, -np.inf)
        values_left = [profile_eval_calc.eval_T(profile, left), profile_eval_calc.eval_dT(profile, left),
                       profile_eval_calc.eval_ddT(profile, left)]
        values_right = [profile_eval_calc.eval_T(profile, seam), profile_eval_calc.eval_dT(profile, seam),
                        profile_eval_calc.eval_ddT(profile, seam)]
        for l_val, r_val in zip(values_left, values_right):
            assert abs(l_val - r_val) <= 1e-10 * abs(r_val)

    # Finite-difference T' on both sides of the glue end
    h = 1e-5
    left = (profile_eval_calc.eval_T(profile, a) - profile_eval_calc.eval_T(profile, a - h)) / h
    right = (profile_eval_calc.eval_T(profile, a + h) - profile_eval_calc.eval_T(profile, a)) / h
    print(f"T' at glue end: left {left:.12e}, right {right:.12e}")
    assert abs(left - right) < 1e-8

    print("✓ Region and seam tests passed")


def test_curvature():
    print("\n=== Testing Curvature ===")

    profile = _default_profile()
    t = profile.glue_end + 10.0
    closed = profile_eval_calc.closed_form_curvature(profile.alpha, profile.L, t)
    piecewise = profile_eval_calc.curvature(profile, t)

    h = 1e-3
    logs = [profile_eval_calc.log_T(profile, t + k * h) for k in (-1, 0, 1)]
    d1 = (logs[2] - logs[0]) / (2.0 * h)
    d2 = (logs[2] - 2.0 * logs[1] + logs[0]) / h ** 2
    finite_difference = -(d1 ** 2 + d2)
    print(f"K({t}) closed form {closed:.10f}, finite difference {finite_difference:.10f}")
    assert abs(closed - piecewise) < 1e-12
    assert abs(closed - finite_difference) < 1e-6

    grid = certificate_grid(profile.glue_end, 2000)
    grid = grid[grid < 600.0]
    T = profile_eval_calc.eval_T(profile, grid)
    assert np.all(np.diff(T) < 0.0)
    K = profile_eval_calc.curvature(profile, grid)
    assert np.all(K <= -profile.pinch_A ** 2 + 1e-12)
    assert np.all(K >= -profile.pinch_B ** 2 - 1e-12)

    print("✓ Curvature tests passed")


def test_shifted_profile():
    print("\n=== Testing Shifted Profile ===")

    profile = _default_profile()
    shifted = profile_eval_calc.shifted(profile, 3.0)
    assert shifted(1.0) == pytest.approx(math.exp(-1.0), rel=1e-15)
    t = np.linspace(3.0, 40.0, 50)
    assert np.allclose(shifted(t), math.exp(-3.0) * profile_eval_calc.eval_T(profile, t - 3.0), rtol=1e-14)
    unshifted = profile_eval_calc.shifted(profile, 0.0)
    assert np.allclose(unshifted(t), profile_eval_calc.eval_T(profile, t), rtol=1e-15)

    with pytest.raises(DomainError):
        profile_eval_calc.shifted(profile, -1.0)

    print("✓ Shifted profile tests passed")


def test_inverse_height():
    print("\n=== Testing Inverse Height u(s) ===")

    profile = _default_profile()

    t = np.linspace(-5.0, 60.0, 300)
    error = inverse_height_calc.inverse_consistency(profile, t)
    print(f"max |u(1/T(t)) - t| = {error:.2e}")
    assert error < 1e-9

    rng = np.random.default_rng(7)
    for s in 10.0 ** rng.uniform(-2.0, 12.0, size=1000):
        assert inverse_height_calc.u_of_s(profile, 2.0 * s) > inverse_height_calc.u_of_s(profile, s)

    s = 1e8
    u = inverse_height_calc.u_of_s(profile, s)
    assert abs(profile_eval_calc.eval_T(profile, u) * s - 1.0) < 1e-12

    second = inverse_height_calc.u_asymptotic(1.5, UNIT, s, order=2)
    print(f"u(1e8) = {u:.10f}, second-order asymptotic {second:.10f}")
    assert abs(u - second) < 0.05

    first_residuals = [
        abs(inverse_height_calc.u_of_s(profile, 10.0 ** k) - inverse_height_calc.u_asymptotic(1.5, UNIT, 10.0 ** k))
        for k in range(8, 17)
    ]
    print(f"First-order residuals: {[round(r, 4) for r in first_residuals]}")
    assert all(b < a for a, b in zip(first_residuals, first_residuals[1:]))

    with pytest.raises(DomainError):
        inverse_height_calc.u_of_s(profile, 0.0)

    print("✓ Inverse height tests passed")


def test_u_asymptotic():
    print("\n=== Testing u Asymptotic Form ===")

    assert inverse_height_calc.u_asymptotic(0.0, UNIT, math.exp(4.0)) == pytest.approx(4.0, abs=1e-14)
    assert inverse_height_calc.u_asymptotic(2.0, UNIT, math.exp(math.e)) == pytest.approx(math.e + 2.0, abs=1e-12)

    with pytest.raises(DomainError):
        inverse_height_calc.u_asymptotic(1.5, UNIT, 2.0)

    print("✓ u asymptotic tests passed")


def run_all_tests():
    print("=" * 60)
    print("CUSP PROFILE TEST SUITE")
    print("=" * 60)

    try:
        test_hyperbolic_profile()
        test_build_profile()
        test_eval_regions_and_seams()
        test_curvature()
        test_shifted_profile()
        test_inverse_height()
        test_u_asymptotic()

        print("\n" + "=" * 60)
        print("✓ ALL CUSP PROFILE TESTS PASSED")
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
