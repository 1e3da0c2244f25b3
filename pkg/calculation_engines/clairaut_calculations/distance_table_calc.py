"""
Cusp Distance Table
Cached interpolant of the exact parabolic distance d(o, p^n o)

LOGIC:
  - Knots are excursion heights h (no root-finding): 100 geometric knots in
    [1e-4, 1] followed by evenly spaced knots up to the height whose
    translation exceeds 10^log10_max
  - At each knot: translation x(h) = 2 e^a I(h) e^{phi(h)} and
    distance d(h) = 2h + 2J(h), base -a for cusp height a
  - Monotone cubic (PCHIP) interpolation of d against log x and back
  - tail_sum(s, N, tau) = sum_{n > N} e^{-s d(n tau)}:
      explicit sum over the next 5000 terms,
      midpoint integral in log n up to the end of the table (Gauss-Legendre
      on each knot segment),
      far tail (1/tau) int_{h_end}^inf e^{-s d(h)} x'(h) dh with I and J
      extrapolated by a + b/h + c/h^2 fitted on the last 20 knots
  - At s = 1/2 the series converges iff h^{-alpha} L(h) is integrable

ROLE:
  Supplies single-letter parabolic distances of the modified model, the
  truncation tails of the transfer operator and the factor tail functional.
"""
import logging
import math
from typing import Any, Dict, Optional

import numpy as np
from scipy.interpolate import PchipInterpolator

from calculation_engines.clairaut_calculations.clairaut_integrals_calc import (
    checked_quad, clairaut_integrals_calc,
)
from calculation_engines.interfaces.base_calculation import BaseCalculation
from calculation_engines.interfaces.calculation_input_models import CuspProfile, QuadratureSpec
from calculation_engines.profile_calculations.profile_eval_calc import profile_eval_calc
from data_access.cache_manager import CacheManager
from shared.middleware.error_handler import DomainError

logger = logging.getLogger(__name__)

SMALL_KNOTS = 100
H_SMALL = 1e-4
EXPLICIT_TERMS = 5000
FIT_KNOTS = 20
LOG_TWO = math.log(2.0)
Y_CAP = 200.0
EXP_CUTOFF = 800.0
_GL_NODES, _GL_WEIGHTS = np.polynomial.legendre.leggauss(8)


class DistanceTable:
    """Interpolated d(n) for translations n along the horocycle of o"""

    def __init__(self, profile: CuspProfile, cusp_height: float, payload: Dict[str, Any]):
        self.profile = profile
        self.cusp_height = cusp_height
        self.h = np.asarray(payload["h"], dtype=float)
        self.log_x = np.asarray(payload["log_x"], dtype=float)
        self.d = np.asarray(payload["d"], dtype=float)
        self.I = np.asarray(payload["I"], dtype=float)
        self.J = np.asarray(payload["J"], dtype=float)

        self._d_of_log_x = PchipInterpolator(self.log_x, self.d, extrapolate=False)
        self._log_x_of_d = PchipInterpolator(self.d, self.log_x, extrapolate=False)

        design = self._fit_design(self.h[-FIT_KNOTS:])
        self._fit_I = np.linalg.lstsq(design, self.I[-FIT_KNOTS:], rcond=None)[0]
        self._fit_J = np.linalg.lstsq(design, self.J[-FIT_KNOTS:], rcond=None)[0]

    @staticmethod
    def _fit_design(h: np.ndarray) -> np.ndarray:
        return np.column_stack([np.ones_like(h), 1.0 / h, 1.0 / h ** 2])

    @property
    def x_min(self) -> float:
        return float(math.exp(self.log_x[0]))

    @property
    def x_max(self) -> float:
        return float(math.exp(self.log_x[-1]))

    @property
    def d_max(self) -> float:
        return float(self.d[-1])

    def distance(self, n):
        """d(o, p o) for translation(s) n inside the table"""
        n_arr = np.atleast_1d(np.asarray(n, dtype=float))
        if n_arr.size and (n_arr.min() < self.x_min or n_arr.max() > self.x_max):
            raise DomainError(
                "Translation outside the distance table",
                {"n_min": float(n_arr.min()), "n_max": float(n_arr.max()),
                 "table": [self.x_min, self.x_max]}
            )
        out = self._d_of_log_x(np.log(n_arr))
        return float(out[0]) if np.ndim(n) == 0 else out

    def translation(self, d):
        """Inverse of distance: the translation n with d(n) = d"""
        d_arr = np.atleast_1d(np.asarray(d, dtype=float))
        if d_arr.size and (d_arr.min() < self.d[0] or d_arr.max() > self.d_max):
            raise DomainError(
                "Distance outside the table range",
                {"d_min": float(d_arr.min()), "d_max": float(d_arr.max()),
                 "table": [float(self.d[0]), self.d_max]}
            )
        out = np.exp(self._log_x_of_d(d_arr))
        return float(out[0]) if np.ndim(d) == 0 else out

    def _extrapolated(self, h: float):
        """I, I', J beyond the last knot"""
        b_I = self._fit_I
        b_J = self._fit_J
        I = b_I[0] + b_I[1] / h + b_I[2] / h ** 2
        dI = -b_I[1] / h ** 2 - 2.0 * b_I[2] / h ** 3
        J = b_J[0] + b_J[1] / h + b_J[2] / h ** 2
        return I, dI, J

    def diverges(self, s: float) -> bool:
        """Whether sum_n e^{-s d(n)} is infinite"""
        if s != 0.5:
            return s < 0.5
        profile = self.profile
        if profile.hyperbolic or profile.alpha < 1.0:
            return True
        if profile.alpha > 1.0:
            return False
        return not (profile.L.variant == "power_of_log" and profile.L.beta < -1.0)

    def _far_integrand(self, s: float, y: float) -> float:
        """Far-tail integrand in y = log h, with the e^{h} factors cancelled by hand"""
        h = math.exp(y)
        base = -self.cusp_height
        I, dI, J = self._extrapolated(h)
        psi, dpsi, _ = profile_eval_calc.psi(self.profile, np.array([h + base]))
        exponent = (-(2.0 * s - 1.0) * h - 2.0 * s * J + LOG_TWO + self.cusp_height + math.log(I)
                    + base - float(psi[0]) + y)
        return math.exp(exponent) * (1.0 - float(dpsi[0]) + dI / I)

    def far_tail(self, s: float, quad_spec: QuadratureSpec = QuadratureSpec()) -> float:
        """
        int_{x_max}^inf e^{-s d(x)} dx through the excursion height, in log h.

        At s = 1/2 the integrand only decays like a power of h; quadrature stops
        at Y_CAP and the rest is closed form for the leading power.
        """
        if self.diverges(s):
            return math.inf
        y0 = math.log(self.h[-1])
        if s > 0.5:
            y1 = min(Y_CAP, max(y0 + 1.0, math.log(EXP_CUTOFF / (2.0 * s - 1.0))))
        else:
            y1 = Y_CAP
        value, _ = checked_quad(lambda y: self._far_integrand(s, y), y0, y1, "far distance tail", quad_spec)
        if s == 0.5:
            edge = self._far_integrand(s, y1)
            if self.profile.alpha > 1.0:
                value += edge / (self.profile.alpha - 1.0)
            else:
                value += edge * y1 / (-self.profile.L.beta - 1.0)
        return value

    def exp_moment(self, s: float, lo: float, hi: float) -> float:
        """
        int_lo^hi e^{-s d(u) + u} du over log translations u.

        Gauss-Legendre on every knot segment; the interpolant is a cubic there.
        """
        if hi <= lo:
            return 0.0
        inner = self.log_x[(self.log_x > lo) & (self.log_x < hi)]
        edges = np.concatenate([[lo], inner, [hi]])
        left, right = edges[:-1, None], edges[1:, None]
        u = 0.5 * (right - left) * _GL_NODES + 0.5 * (right + left)
        d = self._d_of_log_x(u)
        return float(np.sum(0.5 * (right - left) * _GL_WEIGHTS * np.exp(-s * d + u)))

    def tail_sum(self, s: float, n_from: int, tau: float = 1.0,
                 quad_spec: QuadratureSpec = QuadratureSpec()) -> float:
        """
        One-sided tail sum_{n > n_from} e^{-s d(n tau)}.

        Returns inf where the parabolic series diverges.
        """
        if self.diverges(s):
            return math.inf
        n_cap = int(math.floor(self.x_max / tau)) - 1
        if n_from + 1 > n_cap or (n_from + 1) * tau < self.x_min:
            raise DomainError(
                "Tail start outside the distance table",
                {"n_from": n_from, "tau": tau, "table": [self.x_min, self.x_max]}
            )
        last = min(n_from + EXPLICIT_TERMS, n_cap)
        n = np.arange(n_from + 1, last + 1, dtype=float)
        explicit = float(np.sum(np.exp(-s * self._d_of_log_x(np.log(n * tau)))))

        middle = self.exp_moment(s, math.log((last + 0.5) * tau), float(self.log_x[-1]))
        return explicit + (middle + self.far_tail(s, quad_spec)) / tau

    def to_payload(self) -> Dict[str, Any]:
        return {"h": self.h, "log_x": self.log_x, "d": self.d, "I": self.I, "J": self.J}


class DistanceTableCalculation(BaseCalculation):
    """Build (or load) the distance table of a profile at a cusp height"""

    def __init__(self, cache: Optional[CacheManager] = None):
        self._cache = cache
        self._memory: Dict[str, DistanceTable] = {}

    @property
    def calculation_name(self) -> str:
        return "distance_table"

    @property
    def cache(self) -> CacheManager:
        if self._cache is None:
            self._cache = CacheManager()
        return self._cache

    def _knots(self, profile: CuspProfile, cusp_height: float, knots: int, log10_max: float,
               quad_spec: QuadratureSpec) -> np.ndarray:
        target = log10_max * math.log(10.0)
        h_max = max(2.0, target)
        while True:
            I, _, phi_h = clairaut_integrals_calc.height_integral(profile, h_max, -cusp_height, quad_spec)
            if LOG_TWO + cusp_height + math.log(I) + phi_h >= target:
                break
            h_max += 5.0
        small = np.geomspace(H_SMALL, 1.0, SMALL_KNOTS)
        large = np.linspace(1.0, h_max, max(knots - SMALL_KNOTS, FIT_KNOTS + 1) + 1)[1:]
        return np.concatenate([small, large])

    def _compute(self, profile: CuspProfile, cusp_height: float, knots: int, log10_max: float,
                 quad_spec: QuadratureSpec) -> Dict[str, Any]:
        h = self._knots(profile, cusp_height, knots, log10_max, quad_spec)
        I = np.empty_like(h)
        J = np.empty_like(h)
        log_x = np.empty_like(h)
        for k, hk in enumerate(h):
            values = clairaut_integrals_calc.calculate(profile=profile, h=float(hk), base=-cusp_height,
                                                       quad_spec=quad_spec)
            I[k] = values["I"]
            J[k] = values["J"]
            log_x[k] = LOG_TWO + cusp_height + math.log(values["I"]) + values["phi_h"]
        logger.info("Distance table computed", extra={"knots": int(h.size), "h_max": float(h[-1]),
                                                      "cusp_height": cusp_height})
        return {"h": h, "log_x": log_x, "d": 2.0 * h + 2.0 * J, "I": I, "J": J}

    def calculate(self, profile: CuspProfile, cusp_height: float = 0.0, knots: int = 800,
                  log10_max: float = 9.0, quad_spec: QuadratureSpec = QuadratureSpec(),
                  **kwargs) -> DistanceTable:
        """
        Distance table for the metric with the given cusp height.

        Args:
            profile: Cusp profile
            cusp_height: Height a where the perturbed cusp starts
            knots: Total number of excursion heights
            log10_max: Largest translation is 10^log10_max
            quad_spec: Quadrature tolerances

        Returns:
            DistanceTable
        """
        if cusp_height < 0:
            raise DomainError("cusp_height must be nonnegative", {"cusp_height": cusp_height})
        key = self.cache.generate_table_key(
            "distance_table", profile.alpha, profile.L, profile.glue_end, profile.glue_coeffs,
            profile.hyperbolic, cusp_height, knots, log10_max, quad_spec
        )
        if key not in self._memory:
            payload = self.cache.get_or_compute(
                key, lambda: self._compute(profile, cusp_height, knots, log10_max, quad_spec)
            )
            self._memory[key] = DistanceTable(profile, cusp_height, payload)
        return self._memory[key]


# Singleton instance
distance_table_calc = DistanceTableCalculation()
