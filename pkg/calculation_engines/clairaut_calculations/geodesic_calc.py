"""
Cusp Geodesic Solver
Excursion height h_n and length d_n for a translation n along the cusp

LOGIC:
  - Clairaut relation: n/2 = I(h) e^{phi(h)}; solve
    log I(h) + phi(h) - log(n/2) = 0 by Brent's method on [1e-9, hi],
    hi = max(1, 2 log(1 + n)) doubled up to 1e3
  - d_n = 2h + 2J(h)
  - distance_for_n: base = glue end, d_full = d_n + 2 glue_end
  - exact_distance: the arc between two points of the horocycle of o in the
    metric with cusp height a is arc(n e^{-a}, base = -a); in the hyperbolic
    test mode it equals arccosh(1 + n^2/2)

ROLE:
  Parabolic word lengths of the modified model and the asymptotic checks
  of the cusp distance.

SIGNIFICANCE:
  d(o, p^n o) ~ 2(log n + alpha log log n - log L(log n)) is what makes
  the parabolic factor convergent with exponent 1/2.
"""
import logging
import math
from typing import Optional, Tuple

from scipy.optimize import brentq

from calculation_engines.clairaut_calculations.clairaut_integrals_calc import clairaut_integrals_calc
from calculation_engines.interfaces.base_calculation import BaseCalculation
from calculation_engines.interfaces.calculation_input_models import CuspProfile, QuadratureSpec, SlowlyVaryingSpec
from calculation_engines.interfaces.calculation_output_models import CuspGeodesic
from calculation_engines.svf_calculations.eval_l_calc import eval_l_calc
from shared.middleware.error_handler import DomainError, NumericError

logger = logging.getLogger(__name__)

H_LO = 1e-9
H_CAP = 1e3


class CuspGeodesicCalculation(BaseCalculation):
    """Solve the Clairaut relations for one translation"""

    def __init__(self, quad_spec: QuadratureSpec = QuadratureSpec(), n_min: float = 1.0):
        self.quad_spec = quad_spec
        self.n_min = n_min

    @property
    def calculation_name(self) -> str:
        return "distance_for_n"

    @property
    def description(self) -> str:
        return "Clairaut excursion height and length for translation n"

    def validate_inputs(self, profile: CuspProfile = None, n: float = None, **kwargs) -> bool:
        return profile is not None and n is not None and n > 0

    def calculate(self, profile: CuspProfile, n: float, **kwargs) -> CuspGeodesic:
        return self.distance_for_n(profile, n)

    def _solve_height(self, profile: CuspProfile, n: float, base: float) -> Tuple[float, float]:
        target = math.log(n / 2.0)

        def residual(h: float) -> float:
            I, _, phi_h = clairaut_integrals_calc.height_integral(profile, h, base, self.quad_spec)
            return math.log(I) + phi_h - target

        hi = max(1.0, 2.0 * math.log1p(n))
        while residual(hi) < 0.0:
            hi *= 2.0
            if hi > H_CAP:
                raise NumericError(
                    "Excursion height bracket not found",
                    {"n": n, "base": base, "bracket": [H_LO, H_CAP]}
                )
        # Short excursions high in the cusp: I(h) ~ sqrt(2h/phi') forces tiny h
        lo = H_LO
        while residual(lo) > 0.0:
            lo *= 1e-3
            if lo < 1e-200:
                raise NumericError("Translation too small for the excursion solver", {"n": n, "base": base})

        # log h keeps the root well conditioned for tiny excursions (log I ~ log h / 2)
        y = brentq(lambda v: residual(math.exp(v)), math.log(lo), math.log(hi), xtol=1e-14, maxiter=200)
        h = math.exp(y)
        return h, abs(math.expm1(residual(h)))

    def height_for_n(self, profile: CuspProfile, n: float, base: Optional[float] = None) -> Tuple[float, float]:
        """
        Apex height of the excursion with translation n.

        Args:
            profile: Cusp profile
            n: Translation along the horocycle at the base
            base: Base height, glue end by default

        Returns:
            (h, relative residual of n/2 = I e^{phi(h)})
        """
        if n < self.n_min and base is None:
            raise DomainError("height_for_n needs n >= n_min", {"n": n, "n_min": self.n_min})
        b = profile.glue_end if base is None else base
        return self._solve_height(profile, n, b)

    def arc(self, profile: CuspProfile, n: float, base: float, lift: float = 0.0) -> CuspGeodesic:
        """Excursion between two points at height base separated by n"""
        if not n > 0:
            raise DomainError("arc needs a positive translation", {"n": n})
        h, residual = self._solve_height(profile, n, base)
        values = clairaut_integrals_calc.calculate(profile=profile, h=h, base=base, quad_spec=self.quad_spec)
        d_n = 2.0 * h + 2.0 * values["J"]
        return CuspGeodesic(
            n=n,
            h_n=h,
            d_n=d_n,
            d_full=d_n + 2.0 * lift,
            quad_error=values["err_I"] + values["err_J"],
            root_residual=residual,
            base=base,
        )

    def distance_for_n(self, profile: CuspProfile, n: float) -> CuspGeodesic:
        """Excursion above the glue end with the quasi-geodesic correction 2 glue_end"""
        if n < self.n_min:
            raise DomainError("distance_for_n needs n >= n_min", {"n": n, "n_min": self.n_min})
        return self.arc(profile, n, base=profile.glue_end, lift=profile.glue_end)

    def exact_distance(self, profile: CuspProfile, n: float, cusp_height: float = 0.0) -> float:
        """d(o, p^n o) for p^n translating the horocycle of o by n, cusp starting at height a"""
        if cusp_height < 0:
            raise DomainError("cusp_height must be nonnegative", {"cusp_height": cusp_height})
        return self.arc(profile, n * math.exp(-cusp_height), base=-cusp_height).d_n

    def asymptotic_distance(self, alpha: float, L: SlowlyVaryingSpec, n: float) -> float:
        """2(log n + alpha log log n - log L(log n))"""
        log_n = math.log(n)
        return 2.0 * (log_n + alpha * math.log(log_n) - math.log(eval_l_calc.calculate(spec=L, t=log_n)))

    def second_order_distance(self, alpha: float, L: SlowlyVaryingSpec, n: float) -> float:
        """2(log n + alpha log H - log L(H)) with H - alpha log H + log L(H) = log(n/2)"""
        target = math.log(n / 2.0)
        H = max(target, 1.0)
        for _ in range(200):
            nxt = target + alpha * math.log(H) - eval_l_calc.log_value(L, H)
            if abs(nxt - H) <= 1e-14 * max(1.0, H):
                break
            H = max(nxt, 1e-12)
        return 2.0 * (math.log(n) + alpha * math.log(H) - eval_l_calc.log_value(L, H))


# Singleton instance
cusp_geodesic_calc = CuspGeodesicCalculation()
