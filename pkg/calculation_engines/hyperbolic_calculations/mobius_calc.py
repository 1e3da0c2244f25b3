"""
Upper Half-Plane Geometry
Distances, Busemann cocycles, Gromov products and conformal derivatives

LOGIC:
  - d(z, w) = 2 asinh(|z - w| / (2 sqrt(Im z) sqrt(Im w))); the square
    roots are taken apart so heights down to 1e-300 do not underflow
  - Boundary points as circle angles theta = 2 arctan x (infinity at pi)
  - Busemann: B_x(z, w) = log P_x(w) - log P_x(z) with the Poisson kernel
    P_x(z) = Im z / |z cos(theta/2) - sin(theta/2)|^2 (up to a factor
    depending on x only), so B_inf(z, w) = log(Im w / Im z)
  - Gromov product of boundary points seen from i:
    (x|y)_i = -log |sin((theta_x - theta_y)/2)|; other base points are
    moved to i by z -> (z - Re o) / Im o first
  - Cocycle b(g, x) = B_x(g^{-1} o, o), conformal derivative e^{-b(g, x)}

ROLE:
  Exact hyperbolic model behind the symbolic coding and the transfer
  operator; also the reference for the perturbed cusp distances.
"""
from typing import Union

import numpy as np

from calculation_engines.interfaces.base_calculation import BaseCalculation
from calculation_engines.interfaces.calculation_input_models import BoundaryPoint, Isometry
from shared.middleware.error_handler import DomainError

Point = Union[complex, np.ndarray]
Boundary = Union[BoundaryPoint, float, np.ndarray]
BASE_POINT = 1j


def _theta(x: Boundary):
    return x.theta if isinstance(x, BoundaryPoint) else np.asarray(x, dtype=float)


def _to_standard(o: complex) -> Isometry:
    """Isometry moving o to i"""
    o = complex(o)
    return Isometry.from_matrix([[1.0, -o.real], [0.0, o.imag]])


class HyperbolicGeometry(BaseCalculation):
    """Closed-form geometry of the upper half-plane"""

    @property
    def calculation_name(self) -> str:
        return "dist"

    @property
    def description(self) -> str:
        return "Upper half-plane distance, Busemann and Gromov products"

    def validate_inputs(self, z: complex = None, w: complex = None, **kwargs) -> bool:
        return z is not None and w is not None and np.all(np.imag(z) > 0) and np.all(np.imag(w) > 0)

    def calculate(self, z: Point, w: Point, **kwargs):
        return self.dist(z, w)

    def dist(self, z: Point, w: Point):
        """Hyperbolic distance, vectorized"""
        z = np.asarray(z, dtype=complex)
        w = np.asarray(w, dtype=complex)
        if np.any(z.imag <= 0) or np.any(w.imag <= 0):
            raise DomainError("dist needs points of the upper half-plane")
        out = 2.0 * np.arcsinh(np.abs(z - w) / (2.0 * np.sqrt(z.imag) * np.sqrt(w.imag)))
        return float(out) if out.ndim == 0 else out

    def _log_poisson(self, theta, z):
        z = np.asarray(z, dtype=complex)
        c, s = np.cos(theta / 2.0), np.sin(theta / 2.0)
        return np.log(z.imag) - 2.0 * np.log(np.abs(z * c - s))

    def busemann(self, x: Boundary, z: Point, w: Point):
        """B_x(z, w): how much closer to x the point w is than z"""
        theta = _theta(x)
        out = self._log_poisson(theta, w) - self._log_poisson(theta, z)
        return float(out) if np.ndim(out) == 0 else out

    def gromov(self, x: Boundary, y: Boundary, o: complex = BASE_POINT):
        """(x|y)_o for boundary points; x = y raises DomainError (scalar) or gives inf (array)"""
        move = _to_standard(o)
        tx = move.apply_theta(_theta(x))
        ty = move.apply_theta(_theta(y))
        gap = np.abs(np.sin((tx - ty) / 2.0))
        if np.ndim(gap) == 0:
            if gap == 0.0:
                raise DomainError("Gromov product of a boundary point with itself")
            return float(-np.log(gap))
        with np.errstate(divide="ignore"):
            return -np.log(gap)

    def visual_distance(self, x: Boundary, y: Boundary, o: complex = BASE_POINT):
        """D(x, y) = exp(-(x|y)_o)"""
        move = _to_standard(o)
        out = np.abs(np.sin((move.apply_theta(_theta(x)) - move.apply_theta(_theta(y))) / 2.0))
        return float(out) if np.ndim(out) == 0 else out

    def gromov_interior(self, x: Boundary, z: Point, o: complex = BASE_POINT):
        """(x|z)_o = (d(o, z) + B_x(o, z)) / 2 for an interior point z"""
        out = 0.5 * (self.dist(o, z) + self.busemann(x, o, z))
        return float(out) if np.ndim(out) == 0 else out

    def cocycle_b(self, gamma: Isometry, x: Boundary, o: complex = BASE_POINT):
        """b(gamma, x) = B_x(gamma^{-1} o, o)"""
        return self.busemann(x, gamma.inverse().apply(complex(o)), o)

    def conformal_derivative(self, gamma: Isometry, x: Boundary, o: complex = BASE_POINT):
        """|gamma'(x)|_o = exp(-b(gamma, x))"""
        return np.exp(-self.cocycle_b(gamma, x, o))

    def translation_length(self, gamma: Isometry) -> float:
        """Displacement along the axis (0 for parabolic elements)"""
        t = abs(gamma.trace)
        return float(2.0 * np.arccosh(t / 2.0)) if t > 2.0 else 0.0

    def horocyclic_translation(self, gamma: Isometry, o: complex = BASE_POINT) -> float:
        """Length moved along the horocycle through o: 2 sinh(d(o, gamma o) / 2)"""
        return float(2.0 * np.sinh(self.dist(o, gamma.apply(complex(o))) / 2.0))


# Singleton instance
hyperbolic_geometry = HyperbolicGeometry()
