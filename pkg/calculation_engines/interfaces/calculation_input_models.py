"""
Calculation Input Models
Immutable value objects passed between calculation modules
"""
import math
from dataclasses import dataclass, field
from typing import Optional, Tuple

import numpy as np

from shared.middleware.error_handler import NumericError


VARIANTS = ("constant", "power_of_log", "iterated_log")


@dataclass(frozen=True)
class SlowlyVaryingSpec:
    """
    Closed-form slowly varying function L.

    constant:      L(t) = c
    power_of_log:  L(t) = (log(e + t))^beta
    iterated_log:  L(t) = (log log(e^e + t))^beta

    Below t_min the value is frozen to L(t_min).
    """
    variant: str = "constant"
    c: float = 1.0
    beta: float = 0.0
    t_min: float = 0.0

    def __post_init__(self):
        if self.variant not in VARIANTS:
            raise ValueError(f"Unknown slowly varying variant '{self.variant}'")
        if self.variant == "constant" and self.c <= 0:
            raise ValueError("constant variant needs c > 0")
        if self.t_min < 0:
            raise ValueError("t_min must be nonnegative")

    @classmethod
    def constant(cls, c: float = 1.0) -> "SlowlyVaryingSpec":
        return cls(variant="constant", c=c)

    @classmethod
    def power_of_log(cls, beta: float, t_min: float = 0.0) -> "SlowlyVaryingSpec":
        return cls(variant="power_of_log", beta=beta, t_min=t_min)

    @classmethod
    def iterated_log(cls, beta: float, t_min: float = 0.0) -> "SlowlyVaryingSpec":
        return cls(variant="iterated_log", beta=beta, t_min=t_min)

    @property
    def is_unit_constant(self) -> bool:
        return self.variant == "constant" and self.c == 1.0


@dataclass(frozen=True)
class CuspProfile:
    """
    Cusp profile T on the real line.

    log T(t) = -t + psi(t) where psi = 0 for t <= 0, psi is the quintic
    glue on [0, glue_end], and psi = alpha log t - log L(t) beyond glue_end.
    glue_coeffs hold the six coefficients of psi in the scaled variable
    x = t / glue_end, lowest degree first.
    """
    alpha: float
    L: SlowlyVaryingSpec
    glue_end: float
    glue_coeffs: Tuple[float, ...]
    pinch_A: float
    pinch_B: float
    hyperbolic: bool = False
    certificate: Optional[object] = field(default=None, compare=False)

    glue_start: float = 0.0


@dataclass(frozen=True)
class TestFunction:
    """Compactly supported piecewise-linear function u given by breakpoints"""
    __test__ = False

    knots: Tuple[float, ...]
    values: Tuple[float, ...]

    def __post_init__(self):
        if len(self.knots) != len(self.values) or len(self.knots) < 2:
            raise ValueError("TestFunction needs matching knots and values")
        if any(b <= a for a, b in zip(self.knots, self.knots[1:])):
            raise ValueError("TestFunction knots must be strictly increasing")

    @property
    def support(self) -> Tuple[float, float]:
        return self.knots[0], self.knots[-1]

    def __call__(self, t):
        return np.interp(t, self.knots, self.values, left=0.0, right=0.0)

    def integral(self) -> float:
        x = np.asarray(self.knots)
        y = np.asarray(self.values)
        return float(np.sum(np.diff(x) * (y[1:] + y[:-1]) / 2.0))

    def sup_norm(self) -> float:
        return float(np.max(np.abs(self.values)))

    def shifted(self, c: float) -> "TestFunction":
        """u(. - c)"""
        return TestFunction(tuple(k + c for k in self.knots), self.values)

    @classmethod
    def hat(cls, center: float = 0.0, halfwidth: float = 1.0, height: float = 1.0) -> "TestFunction":
        return cls((center - halfwidth, center, center + halfwidth), (0.0, height, 0.0))

    @classmethod
    def mollified_indicator(cls, a: float, b: float, width: float, height: float = 1.0) -> "TestFunction":
        """Trapezoid approximating height * 1_{]a, b]} with ramps of the given width"""
        return cls((a - width, a + width, b - width, b + width), (0.0, height, height, 0.0))

    @classmethod
    def exponential_window(cls, n: int, delta: float, width: float, samples: int = 64) -> "TestFunction":
        """Piecewise-linear e^{delta t} 1_{]-(n+1), -n]}(t) with ramps of the given width"""
        a, b = -(n + 1.0), -float(n)
        inner = np.linspace(a + width, b - width, samples)
        knots = np.concatenate([[a - width], inner, [b + width]])
        values = np.concatenate([[0.0], np.exp(delta * inner), [0.0]])
        return cls(tuple(float(k) for k in knots), tuple(float(v) for v in values))


@dataclass(frozen=True, order=True)
class Letter:
    """Letter g_j^n of the free-product alphabet"""
    factor: int
    exponent: int

    def __post_init__(self):
        if self.exponent == 0:
            raise ValueError("Letter exponent must be nonzero")


@dataclass(frozen=True, order=True)
class Word:
    """Finite word a_1 a_2 ... a_k; a_k acts first on boundary points"""
    letters: Tuple[Letter, ...] = ()

    @property
    def length(self) -> int:
        return len(self.letters)

    @property
    def last_factor(self) -> Optional[int]:
        """Factor index l_gamma of the last letter, None for the identity"""
        return self.letters[-1].factor if self.letters else None

    @property
    def first_factor(self) -> Optional[int]:
        return self.letters[0].factor if self.letters else None

    def is_admissible(self) -> bool:
        return all(a.factor != b.factor for a, b in zip(self.letters, self.letters[1:]))

    def prepend(self, letter: Letter) -> "Word":
        return Word((letter,) + self.letters)

    def suffix(self, start: int) -> "Word":
        return Word(self.letters[start:])

    def label(self, names: Tuple[str, ...] = ()) -> str:
        if not self.letters:
            return "e"
        parts = []
        for letter in self.letters:
            name = names[letter.factor] if letter.factor < len(names) else f"g{letter.factor}"
            parts.append(f"{name}^{letter.exponent}")
        return " ".join(parts)


@dataclass(frozen=True)
class DistanceModel:
    """
    EXACT_H2 uses hyperbolic distances throughout; MODIFIED_CUSP replaces
    parabolic single-letter lengths by the cusp distance table.
    """
    tag: str = "EXACT_H2"
    table: Optional[object] = field(default=None, compare=False)

    def __post_init__(self):
        if self.tag not in ("EXACT_H2", "MODIFIED_CUSP"):
            raise ValueError(f"Unknown distance model '{self.tag}'")
        if self.tag == "MODIFIED_CUSP" and self.table is None:
            raise ValueError("MODIFIED_CUSP needs a distance table")

    @property
    def modified(self) -> bool:
        return self.tag == "MODIFIED_CUSP"


@dataclass(frozen=True)
class QuadratureSpec:
    """Tolerances passed to adaptive quadrature"""
    epsabs: float = 1e-12
    epsrel: float = 1e-11
    limit: int = 200


# ============================================================================
# HYPERBOLIC GEOMETRY
# ============================================================================

def wrap_theta(theta):
    """Reduce circle angles to (-pi, pi]"""
    theta = np.asarray(theta, dtype=float)
    out = np.mod(theta + np.pi, 2.0 * np.pi) - np.pi
    return np.where(out <= -np.pi, out + 2.0 * np.pi, out)


@dataclass(frozen=True)
class BoundaryPoint:
    """
    Point of the real line or infinity.

    Stored as a real value with an explicit infinity flag; the circle
    angle theta = 2 arctan x puts infinity at theta = pi.
    """
    value: float = 0.0
    infinite: bool = False

    @classmethod
    def of(cls, x: Optional[float]) -> "BoundaryPoint":
        """None (or an infinite float) is the point at infinity"""
        if x is None or np.isinf(x):
            return cls(0.0, True)
        return cls(float(x), False)

    @classmethod
    def from_theta(cls, theta: float) -> "BoundaryPoint":
        theta = float(wrap_theta(theta))
        if theta == np.pi:
            return cls(0.0, True)
        return cls(float(np.tan(theta / 2.0)), False)

    @property
    def theta(self) -> float:
        return float(np.pi) if self.infinite else float(2.0 * np.arctan(self.value))

    def as_float(self) -> float:
        return float("inf") if self.infinite else self.value


INFINITY = BoundaryPoint(0.0, True)

ISOMETRY_KINDS = ("identity", "parabolic", "hyperbolic", "elliptic")
TRACE_TOL = 1e-12
DET_RESOLUTION = 1e-8


@dataclass(frozen=True)
class Isometry:
    """
    Mobius map z -> (a z + b) / (c z + d) with ad - bc = 1.

    Products are renormalized to determinant one.
    """
    a: float
    b: float
    c: float
    d: float

    def __post_init__(self):
        if abs(self.a * self.d - self.b * self.c - 1.0) > 1e-12 * max(1.0, abs(self.a * self.d)):
            raise ValueError("Isometry needs determinant one")

    @classmethod
    def from_matrix(cls, m) -> "Isometry":
        """
        Normalize a matrix of positive determinant to determinant one.

        A determinant within rounding of 1 (relative to the entry products)
        is left alone.
        """
        m = np.asarray(m, dtype=float)
        det = m[0, 0] * m[1, 1] - m[0, 1] * m[1, 0]
        scale = max(abs(m[0, 0] * m[1, 1]), abs(m[0, 1] * m[1, 0]), 1.0)
        if not (np.isfinite(det) and np.isfinite(scale)):
            raise NumericError("Isometry entries overflow double precision",
                               {"max_entry": float(np.max(np.abs(m)))})
        if abs(det - 1.0) <= DET_RESOLUTION * scale:
            return cls(float(m[0, 0]), float(m[0, 1]), float(m[1, 0]), float(m[1, 1]))
        if det <= 0:
            raise ValueError("Isometry matrix needs positive determinant")
        m = m / np.sqrt(det)
        return cls(float(m[0, 0]), float(m[0, 1]), float(m[1, 0]), float(m[1, 1]))

    @classmethod
    def identity(cls) -> "Isometry":
        return cls(1.0, 0.0, 0.0, 1.0)

    @classmethod
    def translation(cls, tau: float) -> "Isometry":
        """Parabolic z -> z + tau fixing infinity"""
        return cls(1.0, tau, 0.0, 1.0)

    @classmethod
    def dilation(cls, multiplier: float) -> "Isometry":
        """Hyperbolic z -> multiplier z with axis through i"""
        r = float(np.sqrt(multiplier))
        return cls(r, 0.0, 0.0, 1.0 / r)

    @property
    def matrix(self) -> np.ndarray:
        return np.array([[self.a, self.b], [self.c, self.d]])

    def __matmul__(self, other: "Isometry") -> "Isometry":
        return Isometry.from_matrix(self.matrix @ other.matrix)

    def inverse(self) -> "Isometry":
        return Isometry(self.d, -self.b, -self.c, self.a)

    def power(self, n: int) -> "Isometry":
        """
        g^n; hyperbolic elements with finite fixed points are raised in
        the chart where they act as u -> mu u, others by repeated squaring.
        """
        if n == 0:
            return Isometry.identity()
        if abs(n) > 1 and self.c != 0.0 and self.kind == "hyperbolic":
            return self._chart_power(n)
        if n < 0:
            return self.inverse().power(-n)
        result, base = Isometry.identity(), self
        while n:
            if n & 1:
                result = result @ base
            base = base @ base
            n >>= 1
        return result

    def _chart_power(self, n: int) -> "Isometry":
        attracting, repelling = self.fixed_points()
        sign = -1.0 if self.trace < 0 and n % 2 else 1.0
        return Isometry.conjugated(attracting.value, repelling.value,
                                   n * math.acosh(abs(self.trace) / 2.0), sign)

    @classmethod
    def conjugated(cls, xp: float, xm: float, half: float, sign: float = 1.0) -> "Isometry":
        """
        K diag(e^half, e^-half) K^{-1} with K = [[xp, xm], [1, 1]]: attracting
        fixed point xp, repelling xm, multiplier e^{2 half}; half < 0 gives
        the inverse.
        """
        try:
            p, q = math.exp(half), math.exp(-half)
        except OverflowError as e:
            raise NumericError("Isometry power overflows double precision",
                               {"half_log_multiplier": half}) from e
        D = xp - xm
        return cls(sign * (xp * p - xm * q) / D, sign * xp * xm * (q - p) / D,
                   sign * (p - q) / D, sign * (xp * q - xm * p) / D)

    @property
    def trace(self) -> float:
        return self.a + self.d

    @property
    def kind(self) -> str:
        if (abs(self.b) <= TRACE_TOL and abs(self.c) <= TRACE_TOL
                and abs(abs(self.a) - 1.0) <= TRACE_TOL):
            return "identity"
        t = abs(self.trace)
        if abs(t - 2.0) <= TRACE_TOL * 2.0:
            return "parabolic"
        return "hyperbolic" if t > 2.0 else "elliptic"

    def apply(self, z):
        """
        Action on the upper half-plane, vectorized.

        For c != 0, g z = a/c - 1/(c (c z + d)), so Im g z = Im z / |c z + d|^2
        is formed without the cancellation of ad - bc.
        """
        z = np.asarray(z, dtype=complex)
        if self.c == 0.0:
            out = (self.a * z + self.b) / self.d
        else:
            inv = 1.0 / (self.c * z + self.d)
            out = (self.a - inv.real) / self.c - 1j * (inv.imag / self.c)
        return complex(out) if out.ndim == 0 else out

    def apply_theta(self, theta):
        """Action on circle angles, vectorized"""
        theta = np.asarray(theta, dtype=float)
        s, c = np.sin(theta / 2.0), np.cos(theta / 2.0)
        out = 2.0 * np.arctan2(self.a * s + self.b * c, self.c * s + self.d * c)
        return wrap_theta(out)

    def apply_boundary(self, x: BoundaryPoint) -> BoundaryPoint:
        if x.infinite:
            return INFINITY if self.c == 0.0 else BoundaryPoint.of(self.a / self.c)
        den = self.c * x.value + self.d
        if den == 0.0:
            return INFINITY
        return BoundaryPoint.of((self.a * x.value + self.b) / den)

    def fixed_points(self) -> Tuple[BoundaryPoint, ...]:
        """Boundary fixed points; attracting first for hyperbolic maps"""
        kind = self.kind
        if kind in ("identity", "elliptic"):
            return ()
        if self.c == 0.0:
            if kind == "parabolic":
                return (INFINITY,)
            other = BoundaryPoint.of(self.b / (self.d - self.a))
            return (INFINITY, other) if abs(self.a) > abs(self.d) else (other, INFINITY)
        if kind == "parabolic":
            return (BoundaryPoint.of((self.a - self.d) / (2.0 * self.c)),)
        # roots of c x^2 + (d - a) x - b; the second from the product -b/c
        t = abs(self.trace)
        q = (self.a - self.d) + math.copysign(math.sqrt((t - 2.0) * (t + 2.0)), self.a - self.d)
        roots = [q / (2.0 * self.c), -2.0 * self.b / q]
        # |c x + d| > 1 at the attracting point
        roots.sort(key=lambda x: -abs(self.c * x + self.d))
        return tuple(BoundaryPoint.of(x) for x in roots)


@dataclass(frozen=True)
class Factor:
    """
    One free factor <g> with its ping-pong set.

    arcs are closed counterclockwise circle arcs (theta_start, theta_end)
    in angle coordinates; an arc may pass through infinity.
    """
    generator: Isometry
    kind: str
    arcs: Tuple[Tuple[float, float], ...]
    name: str = "g"

    def __post_init__(self):
        if self.kind not in ("parabolic", "hyperbolic"):
            raise ValueError(f"Factor kind must be parabolic or hyperbolic, got '{self.kind}'")

    @property
    def fixed_points(self) -> Tuple[BoundaryPoint, ...]:
        return self.generator.fixed_points()

    def element(self, n: int) -> Isometry:
        return self.generator.power(n)


@dataclass(frozen=True)
class SchottkyData:
    """
    Free product of cyclic factors with ping-pong sets.

    cusp_profile set means parabolic lengths follow the perturbed cusp
    starting cusp_height above the horocycle of o.
    """
    factors: Tuple[Factor, ...]
    o: complex = 1j
    x0: BoundaryPoint = BoundaryPoint(0.0)
    cusp_profile: Optional[CuspProfile] = field(default=None, compare=False)
    cusp_height: float = 0.0
    family: str = "custom"

    @property
    def size(self) -> int:
        return len(self.factors)

    @property
    def names(self) -> Tuple[str, ...]:
        return tuple(f.name for f in self.factors)

    def parabolic_factors(self) -> Tuple[int, ...]:
        return tuple(j for j, f in enumerate(self.factors) if f.kind == "parabolic")


@dataclass(frozen=True)
class ExtendedPoint:
    """
    Point of the extended limit set.

    A boundary point is given by its circle angle alone. An orbit point
    g x0 also remembers g and the factor of its first letter (None for x0
    itself), which is the ping-pong set containing it.
    """
    theta: float
    g: Optional[Isometry] = None
    factor: Optional[int] = None

    @property
    def is_orbit(self) -> bool:
        return self.g is not None

    @classmethod
    def boundary(cls, x) -> "ExtendedPoint":
        theta = x.theta if isinstance(x, BoundaryPoint) else float(x)
        return cls(theta=float(wrap_theta(theta)))

    @classmethod
    def base(cls, data: SchottkyData) -> "ExtendedPoint":
        """The orbit point x0 itself"""
        return cls(theta=data.x0.theta, g=Isometry.identity(), factor=None)
