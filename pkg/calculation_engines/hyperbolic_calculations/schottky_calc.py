"""
Schottky Group Construction
Generators and ping-pong arcs for the groups <h^m, p> and <h^m, k>

LOGIC:
  - cusp_pair: p(z) = z + tau (fixed point infinity) and h with multiplier
    lambda, attracting fixed point -1 and repelling fixed point +1
  - hyperbolic_pair: h as above and k with multiplier second_lambda and
    fixed points -/+ SECOND_AXIS_RADIUS
  - Suggested arcs:
      parabolic z -> z + tau: {|x| >= tau/2} with infinity
      hyperbolic g^m with multiplier mu and fixed points xi+ (attracting),
      xi- (repelling): K({|u| <= r}) and K({|u| >= 1/r}) where
      K(u) = (xi+ u + xi-) / (u + 1) conjugates g^m to u -> mu u and
      r = min(0.9, 1.05 mu^{-1/2})
  - Explicit arcs from config: [left, right] pairs in increasing x,
    null standing for infinity

ROLE:
  Builds the SchottkyData every downstream module consumes.
"""
import logging
from typing import List, Optional, Sequence, Tuple

import numpy as np

from calculation_engines.interfaces.base_calculation import BaseCalculation
from calculation_engines.interfaces.calculation_input_models import (
    BoundaryPoint, CuspProfile, Factor, Isometry, SchottkyData, wrap_theta,
)
from calculation_engines.hyperbolic_calculations.mobius_calc import hyperbolic_geometry
from shared.middleware.error_handler import ConfigError, DomainError

logger = logging.getLogger(__name__)

TWO_PI = 2.0 * np.pi
SECOND_AXIS_RADIUS = 4.0
ARC_TOL = 1e-12

Arc = Tuple[float, float]


# ============================================================================
# ARCS ON THE BOUNDARY CIRCLE
# ============================================================================

def arc_length(arc: Arc) -> float:
    return float(np.mod(arc[1] - arc[0], TWO_PI))


def arc_offset(arc: Arc, theta):
    """Counterclockwise angle from the arc start, in [0, 2 pi)"""
    return np.mod(np.asarray(theta, dtype=float) - arc[0], TWO_PI)


def arc_contains(arc: Arc, theta, tol: float = ARC_TOL):
    off = arc_offset(arc, theta)
    return (off <= arc_length(arc) + tol) | (off >= TWO_PI - tol)


def arc_from_interval(left: Optional[float], right: Optional[float]) -> Arc:
    """Closed interval [left, right] traversed in increasing x; None is infinity"""
    return (BoundaryPoint.of(left).theta, BoundaryPoint.of(right).theta)


def complement_arcs(arcs: Sequence[Arc]) -> List[Arc]:
    """Open gaps between the arcs of one factor"""
    ordered = sorted(arcs, key=lambda a: float(wrap_theta(a[0])))
    return [(ordered[i][1], ordered[(i + 1) % len(ordered)][0]) for i in range(len(ordered))]


def factor_index(data: SchottkyData, theta) -> np.ndarray:
    """Index of the factor whose arcs contain theta, -1 outside all arcs"""
    theta = np.atleast_1d(np.asarray(theta, dtype=float))
    out = np.full(theta.shape, -1, dtype=int)
    for j, factor in enumerate(data.factors):
        for arc in factor.arcs:
            out[(out < 0) & arc_contains(arc, theta, tol=0.0)] = j
    return out


# ============================================================================
# GENERATORS AND FAMILIES
# ============================================================================

def conjugated_dilation(multiplier: float, attracting: float, repelling: float) -> Isometry:
    """Hyperbolic element with the given multiplier and finite fixed points"""
    return Isometry.conjugated(attracting, repelling, 0.5 * float(np.log(multiplier)))


class SchottkyConstruction(BaseCalculation):
    """Build Schottky data from family parameters or explicit arcs"""

    @property
    def calculation_name(self) -> str:
        return "schottky_data"

    def calculate(self, family: str = "cusp_pair", **kwargs) -> SchottkyData:
        if family == "cusp_pair":
            return self.cusp_pair(**kwargs)
        if family == "hyperbolic_pair":
            return self.hyperbolic_pair(**kwargs)
        raise ConfigError(f"Unknown Schottky family '{family}'", {"family": family})

    def suggest_intervals(self, generator: Isometry) -> Tuple[Arc, ...]:
        """Ping-pong arcs read off the isometric data of a generator"""
        kind = generator.kind
        if kind == "parabolic":
            if generator.c != 0.0:
                raise DomainError("Suggested arcs need the parabolic fixed point at infinity")
            half = abs(generator.b / generator.d) / 2.0
            return (arc_from_interval(half, -half),)
        if kind != "hyperbolic":
            raise DomainError(f"No ping-pong arcs for a {kind} generator")

        attracting, repelling = generator.fixed_points()
        if attracting.infinite or repelling.infinite:
            raise DomainError("Suggested arcs need finite fixed points")
        mu = float(np.exp(hyperbolic_geometry.translation_length(generator)))
        r = min(0.9, 1.05 / np.sqrt(mu))

        def K(u: float) -> float:
            return (attracting.value * u + repelling.value) / (u + 1.0)

        arcs = []
        for lo, hi in ((K(-r), K(r)), (K(1.0 / r), K(-1.0 / r))):
            a, b = sorted((lo, hi))
            arcs.append(arc_from_interval(a, b))
        return tuple(arcs)

    def arcs_from_config(self, pairs: Sequence[Sequence[Optional[float]]]) -> Tuple[Arc, ...]:
        try:
            return tuple(arc_from_interval(left, right) for left, right in pairs)
        except (TypeError, ValueError) as e:
            raise ConfigError("schottky.intervals must hold [left, right] pairs", {"intervals": pairs}) from e

    def _factor(self, generator: Isometry, kind: str, name: str, intervals=None) -> Factor:
        arcs = self.arcs_from_config(intervals) if intervals else self.suggest_intervals(generator)
        return Factor(generator=generator, kind=kind, arcs=arcs, name=name)

    def cusp_pair(self, tau: float = 6.0, h_lambda: float = 12.0, h_power: int = 2, x0: float = 0.0,
                  cusp_profile: Optional[CuspProfile] = None, cusp_height: float = 0.0,
                  intervals=None, **kwargs) -> SchottkyData:
        """<p, h^m> with p(z) = z + tau and h fixing -1 and +1"""
        if tau <= 0 or h_lambda <= 1 or h_power < 1:
            raise ConfigError("cusp_pair needs tau > 0, h_lambda > 1, h_power >= 1",
                              {"tau": tau, "h_lambda": h_lambda, "h_power": h_power})
        h = conjugated_dilation(h_lambda, -1.0, 1.0).power(h_power)
        p = Isometry.translation(tau)
        factors = (
            self._factor(p, "parabolic", "p", intervals[0] if intervals else None),
            self._factor(h, "hyperbolic", "h", intervals[1] if intervals else None),
        )
        data = SchottkyData(factors=factors, x0=BoundaryPoint.of(x0), cusp_profile=cusp_profile,
                            cusp_height=cusp_height, family="cusp_pair")
        logger.info("Schottky data built", extra={"family": "cusp_pair", "tau": tau,
                                                  "multiplier": h_lambda ** h_power})
        return data

    def hyperbolic_pair(self, h_lambda: float = 12.0, h_power: int = 2, second_lambda: float = 30.0,
                        x0: float = 0.0, intervals=None, **kwargs) -> SchottkyData:
        """<h^m, k> of two hyperbolic elements with disjoint axes"""
        if h_lambda <= 1 or second_lambda <= 1 or h_power < 1:
            raise ConfigError("hyperbolic_pair needs multipliers > 1 and h_power >= 1",
                              {"h_lambda": h_lambda, "second_lambda": second_lambda})
        h = conjugated_dilation(h_lambda, -1.0, 1.0).power(h_power)
        k = conjugated_dilation(second_lambda, -SECOND_AXIS_RADIUS, SECOND_AXIS_RADIUS)
        factors = (
            self._factor(h, "hyperbolic", "h", intervals[0] if intervals else None),
            self._factor(k, "hyperbolic", "k", intervals[1] if intervals else None),
        )
        return SchottkyData(factors=factors, x0=BoundaryPoint.of(x0), family="hyperbolic_pair")

    def from_config(self, config, cusp_profile: Optional[CuspProfile] = None) -> SchottkyData:
        """SchottkyData from a SchottkyConfig section"""
        params = dict(tau=config.tau, h_lambda=config.h_lambda, h_power=config.h_power,
                      second_lambda=config.second_lambda, x0=config.x0, intervals=config.intervals)
        if config.family == "cusp_pair":
            params.update(cusp_profile=cusp_profile, cusp_height=config.cusp_height)
        return self.calculate(family=config.family, **params)


# Singleton instance
schottky_construction = SchottkyConstruction()
