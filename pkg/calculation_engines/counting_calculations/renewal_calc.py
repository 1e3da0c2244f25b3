"""
Renewal Sums
M(R, phi x u)(x) = h(x) sum_k rho^k P~^k(phi/h x u)(x, -R)

LOGIC:
  - Unnormalized levels Q^k(phi x u)(y, t) = sum_{gamma in Gamma(k)}
    e^{-s b~(gamma, y)} phi(gamma y) u(t + b~(gamma, y)) satisfy
      Q^k(y, t) = sum_a e^{-s b~(a, y)} Q^{k-1}(a y, t + b~(a, y))
    and M_k = Q^k(x, -R) = rho^k h(x) P~^k(phi/h x u)(x, -R)
  - Q^k lives on the boundary mesh times a uniform shift grid t_i = i dt;
    one level reads the previous one at (a y, t_i + b) through the mesh
    stencil and linear interpolation in t; level 0 is phi x u itself
  - Letters beyond the truncation land on the fixed point x_j and shift t
    by d(g^n) - 2 (xi|y)_o; their sum is a correlation of Q^{k-1}(x_j, .)
    with the kernel sum_n e^{-s d(g^n)} delta_{d(g^n)}, built from the exact
    letter distances and, far out, from the translation density dn/dd
  - The start point is expanded exactly for orbit_depth - 1 levels (orbit
    points keep their interior point g o), the last expansion reads the
    grid
  - Tail bound over k > k_max: h(x) |phi/h| C_u L(R)/R^alpha sum k^2 rho^k
    with C_u the largest P~^k R^alpha / (k^2 L(R) |phi/h|) seen

ROLE:
  The renewal subcommand, the level limits and the counting constant
  series.
"""
import logging
import math
from dataclasses import dataclass, field
from typing import Callable, Dict, List, Optional, Sequence

import numpy as np
from scipy.signal import fftconvolve

from calculation_engines.coding_calculations.cocycle_calc import extended_cocycle
from calculation_engines.coding_calculations.words_calc import letter_caps, letter_isometry
from calculation_engines.counting_calculations.level_constant_calc import (
    counting_shape, level_constant_calc,
)
from calculation_engines.hyperbolic_calculations.mobius_calc import hyperbolic_geometry as geo
from calculation_engines.hyperbolic_calculations.schottky_calc import factor_index
from calculation_engines.interfaces.base_calculation import BaseCalculation
from calculation_engines.interfaces.calculation_input_models import ExtendedPoint, Letter, TestFunction
from calculation_engines.interfaces.calculation_output_models import (
    LevelPrediction, RenewalResult, SeriesConstant, SpectralResult,
)
from calculation_engines.svf_calculations.eval_l_calc import eval_l_calc
from calculation_engines.transfer_calculations.doob_calc import doob_transform
from calculation_engines.transfer_calculations.operator_calc import (
    FoldedTail, TransferOperator, point_owner, transfer_assembly,
)
from shared.middleware.error_handler import BudgetExceededError, DomainError

logger = logging.getLogger(__name__)

CHUNK_CELLS = 4_000_000
EXPLICIT_TAIL_TERMS = 4096
FRONTIER_BUDGET = 2_000_000
MAX_EXPONENT = 10_000_000

Phi = Optional[Callable[[np.ndarray], np.ndarray]]


@dataclass
class ShiftGrid:
    """t_i = (start + i) dt for i = 0 ... size - 1"""
    start: int
    size: int
    dt: float

    @classmethod
    def covering(cls, lo: float, hi: float, dt: float) -> "ShiftGrid":
        start = math.floor(lo / dt)
        return cls(start=start, size=math.ceil(hi / dt) - start + 1, dt=dt)

    @property
    def times(self) -> np.ndarray:
        return (self.start + np.arange(self.size)) * self.dt

    def position(self, t) -> np.ndarray:
        return np.asarray(t, dtype=float) / self.dt - self.start


@dataclass
class _Front:
    theta: np.ndarray
    owner: np.ndarray
    weight: np.ndarray
    B: np.ndarray
    # interior points g o of an orbit frontier, None on the boundary
    z: Optional[np.ndarray] = None

    @property
    def size(self) -> int:
        return int(self.theta.size)


@dataclass
class _Plan:
    op: TransferOperator
    u: TestFunction
    phi: np.ndarray
    grid: ShiftGrid
    m_lo: float
    rows: np.ndarray
    cols: np.ndarray
    weight: np.ndarray
    shift: np.ndarray
    tail_rows: np.ndarray
    tail_tag: np.ndarray
    tail_weight: np.ndarray
    tail_shift: np.ndarray
    kernels: List[np.ndarray]
    G: List[Optional[np.ndarray]] = field(default_factory=list)
    H: List[Optional[np.ndarray]] = field(default_factory=list)


def _interp(table: Optional[np.ndarray], rows: np.ndarray, pos: np.ndarray) -> np.ndarray:
    """table[rows] at fractional grid positions, zero off the grid"""
    if table is None:
        return np.zeros(np.shape(pos))
    size = table.shape[1]
    f = np.floor(pos)
    a = pos - f
    i = f.astype(np.int64)
    in0 = (i >= 0) & (i < size)
    in1 = (i + 1 >= 0) & (i + 1 < size)
    v0 = np.where(in0, table[rows, np.clip(i, 0, size - 1)], 0.0)
    v1 = np.where(in1, table[rows, np.clip(i + 1, 0, size - 1)], 0.0)
    return (1.0 - a) * v0 + a * v1


def _shifted(padded: np.ndarray, src: np.ndarray, shift: np.ndarray, grid: ShiftGrid) -> np.ndarray:
    """Rows src of a zero-padded table at t_i + shift, one row per entry"""
    q = shift / grid.dt
    f = np.floor(q)
    a = (q - f)[:, None]
    idx = np.arange(grid.size)[None, :] + f.astype(np.int64)[:, None]
    lo = np.clip(idx + 1, 0, grid.size + 1)
    hi = np.clip(idx + 2, 0, grid.size + 1)
    rows = src[:, None]
    return (1.0 - a) * padded[rows, lo] + a * padded[rows, hi]


def tail_level_sum(rho: float, k_from: int) -> float:
    """sum_{k > k_from} k^2 rho^k"""
    if rho <= 0.0:
        return 0.0
    total = rho * (1.0 + rho) / (1.0 - rho) ** 3
    k = np.arange(1, k_from + 1, dtype=float)
    return max(0.0, total - float(np.sum(k ** 2 * rho ** k)))


class RenewalCalculation(BaseCalculation):
    """Level sums Q^k, the renewal form of M and the level limits"""

    @property
    def calculation_name(self) -> str:
        return "renewal_sum"

    @property
    def description(self) -> str:
        return "M(R, phi x u)(x) as h(x) sum_k rho^k P~^k(phi/h x u)(x, -R)"

    def validate_inputs(self, op: TransferOperator = None, u: TestFunction = None, k_max: int = None,
                        **kwargs) -> bool:
        return op is not None and u is not None and k_max is not None and k_max >= 0

    def calculate(self, op: TransferOperator, spectral: SpectralResult, u: TestFunction, R: float,
                  k_max: int, **kwargs) -> RenewalResult:
        return self.renewal_M(op, spectral, u, R, k_max, **kwargs)

    # ------------------------------------------------------------------
    # Grid construction
    # ------------------------------------------------------------------

    def _phi_nodes(self, op: TransferOperator, phi: Phi) -> np.ndarray:
        if phi is None:
            return np.ones(op.size)
        return np.asarray(phi(op.mesh.theta), dtype=float)

    def _phi_at(self, phi: Phi, theta: np.ndarray) -> np.ndarray:
        if phi is None:
            return np.ones(theta.shape)
        return np.asarray(phi(theta), dtype=float)

    def _parabolic_distance(self, op: TransferOperator, x: np.ndarray) -> np.ndarray:
        """d(o, p^n o) for horocyclic translations x = |n| tau_eff"""
        if op.model.modified:
            return np.asarray(op.model.table.distance(x), dtype=float)
        return 2.0 * np.arcsinh(x / 2.0)

    def _parabolic_translation(self, op: TransferOperator, d: np.ndarray) -> np.ndarray:
        if op.model.modified:
            return np.asarray(op.model.table.translation(d), dtype=float)
        return 2.0 * np.sinh(d / 2.0)

    def _tail_kernel(self, op: TransferOperator, tail: FoldedTail, dt: float, D_top: float) -> np.ndarray:
        """sum over folded exponents of e^{-s d} placed at d / dt, linear between cells"""
        data, s = op.data, op.s
        size = int(math.ceil(D_top / dt)) + 2
        kernel = np.zeros(size)

        def deposit(d: np.ndarray, w: np.ndarray) -> None:
            q = d / dt
            cell = np.floor(q).astype(np.int64)
            a = q - cell
            keep = (cell >= 0) & (cell + 1 < size)
            np.add.at(kernel, cell[keep], w[keep] * (1.0 - a[keep]))
            np.add.at(kernel, cell[keep] + 1, w[keep] * a[keep])

        cap = letter_caps(data, op.trunc_N, op.trunc_hyperbolic)[tail.factor]
        factor = data.factors[tail.factor]
        if tail.kind == "hyperbolic":
            n = cap + 1
            while n <= MAX_EXPONENT:
                d = geo.dist(data.o, factor.element(n).apply(data.o))
                if d > D_top:
                    break
                deposit(np.array([d]), np.array([tail.sides * math.exp(-s * d)]))
                n += 1
            return kernel

        tau = extended_cocycle.tau_eff(data, tail.factor)
        n = np.arange(cap + 1, cap + 1 + EXPLICIT_TAIL_TERMS, dtype=float)
        if op.model.modified:
            n = n[n * tau <= op.model.table.x_max]
        d = self._parabolic_distance(op, n * tau)
        near = d <= D_top
        deposit(d[near], tail.sides * np.exp(-s * d[near]))
        if n.size == 0 or not near.all():
            return kernel

        # far exponents: count them through the translation density
        d_start = float(self._parabolic_distance(op, np.array([(n[-1] + 0.5) * tau]))[0])
        cells = np.arange(math.floor(d_start / dt), math.floor(D_top / dt) + 1)
        lo = np.maximum((cells - 0.5) * dt, d_start)
        hi = np.minimum((cells + 0.5) * dt, D_top)
        live = hi > lo
        lo, hi = lo[live], hi[live]
        count = (self._parabolic_translation(op, hi) - self._parabolic_translation(op, lo)) / tau
        mid = 0.5 * (lo + hi)
        deposit(mid, tail.sides * np.exp(-s * mid) * count)
        return kernel

    def _plan(self, op: TransferOperator, u: TestFunction, phi_nodes: np.ndarray, R_max: float, k_max: int,
              t_step: float) -> _Plan:
        a_u, b_u = u.support
        m_lo = float(np.min(op.cocycle)) if op.cocycle.size else 0.0
        tails = op.tails if op.tail_compensation else []
        g_max = float(np.max(op.tail_gromov, initial=0.0)) if tails else 0.0
        lo = -R_max + min(0.0, m_lo) * k_max - 2.0 * g_max - 1.0
        hi = b_u + max(0.0, -m_lo) * k_max + 1.0
        grid = ShiftGrid.covering(lo, hi, t_step)

        kernels = []
        if tails:
            D_top = hi - lo + 2.0 * g_max + t_step
            if op.model.modified:
                needed = R_max + b_u + 2.0 * g_max
                if needed > op.model.table.d_max:
                    raise DomainError("R outside the cached distance range",
                                      {"R": R_max, "needed": needed, "d_max": op.model.table.d_max})
                D_top = min(D_top, op.model.table.d_max)
            kernels = [self._tail_kernel(op, tail, t_step, D_top) for tail in tails]

        order = np.argsort(op.rows, kind="stable")
        t_order = np.argsort(op.tail_rows, kind="stable") if tails else np.empty(0, dtype=int)
        tail_g = op.tail_gromov[t_order] if tails else np.empty(0)
        plan = _Plan(
            op=op, u=u, phi=phi_nodes, grid=grid, m_lo=m_lo,
            rows=op.rows[order], cols=op.cols[order],
            weight=op.coef[order] * np.exp(-op.s * op.cocycle[order]), shift=op.cocycle[order],
            tail_rows=op.tail_rows[t_order] if tails else np.empty(0, dtype=int),
            tail_tag=op.tail_tag[t_order] if tails else np.empty(0, dtype=int),
            tail_weight=np.exp(2.0 * op.s * tail_g), tail_shift=-2.0 * tail_g,
            kernels=kernels,
        )
        logger.debug("Renewal grid", extra={"cells": grid.size, "dt": t_step, "t0": grid.start * t_step,
                                            "m_lo": m_lo, "tails": len(kernels)})
        return plan

    def _correlate(self, plan: _Plan, level_row: Callable[[int], np.ndarray]) -> Optional[np.ndarray]:
        """H[tail](t_i) = sum_l kernel[l] Q(x_j, t_i + l dt)"""
        if not plan.kernels:
            return None
        mesh = plan.op.mesh
        out = np.zeros((len(plan.kernels), plan.grid.size))
        for idx, (tail, kernel) in enumerate(zip(plan.op.tails, plan.kernels)):
            row = level_row(mesh.fixed_nodes[(tail.factor, tail.fixed_point)])
            if not np.any(row) or not np.any(kernel):
                continue
            padded = np.concatenate([row, np.zeros(kernel.size - 1)])
            out[idx] = fftconvolve(padded, kernel[::-1], mode="valid")[:plan.grid.size]
        return out

    def _accumulate(self, out: np.ndarray, rows: np.ndarray, weight: np.ndarray,
                    values: Callable[[slice], np.ndarray]) -> None:
        chunk = max(1, CHUNK_CELLS // out.shape[1])
        for start in range(0, rows.size, chunk):
            sl = slice(start, start + chunk)
            vals = values(sl) * weight[sl, None]
            uniq, first = np.unique(rows[sl], return_index=True)
            out[uniq] += np.add.reduceat(vals, first, axis=0)

    def _build_levels(self, plan: _Plan, k_max: int) -> None:
        """Q^m on the grid for m = 1 ... k_max - 1 and the tail correlations"""
        grid, times = plan.grid, plan.grid.times
        u_grid = plan.u(times)
        plan.G = [None]
        plan.H = [self._correlate(plan, lambda node: plan.phi[node] * u_grid)]
        for m in range(1, k_max):
            prev, prev_h = plan.G[m - 1], plan.H[m - 1]
            if m > 1 and prev is None and prev_h is None:
                plan.G.append(None)
                plan.H.append(None)
                continue
            out = np.zeros((plan.op.size, grid.size))
            if m == 1:
                self._accumulate(out, plan.rows, plan.weight, lambda sl: plan.phi[plan.cols[sl], None]
                                 * plan.u(times[None, :] + plan.shift[sl, None]))
            else:
                padded = np.pad(prev, ((0, 0), (1, 1))) if prev is not None else None
                if padded is not None:
                    self._accumulate(out, plan.rows, plan.weight,
                                     lambda sl: _shifted(padded, plan.cols[sl], plan.shift[sl], grid))
            if prev_h is not None:
                padded_h = np.pad(prev_h, ((0, 0), (1, 1)))
                self._accumulate(out, plan.tail_rows, plan.tail_weight,
                                 lambda sl: _shifted(padded_h, plan.tail_tag[sl], plan.tail_shift[sl], grid))
            live = bool(np.any(out))
            plan.G.append(out if live else None)
            plan.H.append(self._correlate(plan, lambda node: out[node]) if live else None)
            logger.debug("Renewal level built", extra={"m": m, "live": live})

    # ------------------------------------------------------------------
    # Point evaluation
    # ------------------------------------------------------------------

    def _sample(self, plan: _Plan, m: int, cols: np.ndarray, times: np.ndarray) -> np.ndarray:
        if m == 0:
            return plan.phi[cols] * plan.u(times)
        return _interp(plan.G[m], cols, plan.grid.position(times))

    def _tail_terms(self, plan: _Plan, front: _Front):
        """(selection, Gromov product) per folded tail at the frontier"""
        if not plan.kernels:
            return []
        data = plan.op.data
        terms = []
        for idx, tail in enumerate(plan.op.tails):
            sel = front.owner != tail.factor
            if not np.any(sel):
                continue
            xi = data.factors[tail.factor].fixed_points[tail.gromov_point]
            if front.z is None:
                g = geo.gromov(xi, front.theta[sel], data.o)
            else:
                g = geo.gromov_interior(xi, front.z[sel], data.o)
            terms.append((idx, sel, np.asarray(g, dtype=float)))
        return terms

    def _letter_parts(self, plan: _Plan, front: _Front):
        """(letter, selection, isometry, cocycle) per explicit letter at the frontier"""
        op = plan.op
        parts = []
        for letter in op.letters:
            sel = front.owner != letter.factor
            if not np.any(sel):
                continue
            a = letter_isometry(op.data, letter)
            if front.z is None:
                b = extended_cocycle.boundary_letter_cocycle(op.data, op.model, letter, front.theta[sel], a)
            else:
                b = extended_cocycle.orbit_letter_cocycle(op.data, op.model, letter, front.z[sel], a)
            parts.append((letter, sel, a, np.asarray(b, dtype=float)))
        return parts

    def _letter_terms(self, plan: _Plan, front: _Front):
        """(selection, cocycle, stencil) per explicit letter at the frontier"""
        terms = []
        for letter, sel, a, b in self._letter_parts(plan, front):
            lo, hi, w = plan.op.mesh.stencil(letter.factor, a.apply_theta(front.theta[sel]))
            terms.append((sel, b, lo, hi, w))
        return terms

    def _tail_values(self, plan: _Plan, m: int, front: _Front, times: np.ndarray, tail_terms) -> np.ndarray:
        out = np.zeros(front.size)
        H = plan.H[m]
        if H is None:
            return out
        for idx, sel, g in tail_terms:
            pos = plan.grid.position(times[sel] - 2.0 * g)
            out[sel] += np.exp(2.0 * plan.op.s * g) * _interp(H, np.full(pos.shape, idx), pos)
        return out

    def _row_values(self, plan: _Plan, m: int, front: _Front, times: np.ndarray, letter_terms,
                    tail_terms) -> np.ndarray:
        """Q^{m+1}(y, t) at frontier points y from level m"""
        out = self._tail_values(plan, m, front, times, tail_terms)
        if m > 0 and plan.G[m] is None:
            return out
        for sel, b, lo, hi, w in letter_terms:
            t = times[sel] + b
            vals = (1.0 - w) * self._sample(plan, m, lo, t) + w * self._sample(plan, m, hi, t)
            out[sel] += np.exp(-plan.op.s * b) * vals
        return out

    def _start(self, plan: _Plan, x: ExtendedPoint) -> _Front:
        data = plan.op.data
        return _Front(
            theta=np.array([x.theta]), owner=np.array([point_owner(data, x)], dtype=int),
            weight=np.ones(1), B=np.zeros(1),
            z=np.array([x.g.apply(data.o)], dtype=complex) if x.is_orbit else None,
        )

    def _expand(self, plan: _Plan, front: _Front, B_cap: float, budget: int) -> _Front:
        """Exact children a y over the explicit letters with B below B_cap"""
        op = plan.op
        thetas, owners, weights, Bs, zs = [], [], [], [], []
        for letter, sel, a, b in self._letter_parts(plan, front):
            B = front.B[sel] + b
            keep = B <= B_cap
            if not np.any(keep):
                continue
            idx = np.flatnonzero(sel)[keep]
            thetas.append(np.asarray(a.apply_theta(front.theta[idx]), dtype=float))
            owners.append(np.full(idx.size, letter.factor, dtype=int))
            weights.append(front.weight[idx] * np.exp(-op.s * b[keep]))
            Bs.append(B[keep])
            if front.z is not None:
                zs.append(a.apply(front.z[idx]))
        if not thetas:
            return _Front(np.empty(0), np.empty(0, dtype=int), np.empty(0), np.empty(0),
                          None if front.z is None else np.empty(0, dtype=complex))
        nxt = _Front(theta=np.concatenate(thetas), owner=np.concatenate(owners),
                     weight=np.concatenate(weights), B=np.concatenate(Bs),
                     z=None if front.z is None else np.concatenate(zs))
        if nxt.size > budget:
            raise BudgetExceededError("Renewal orbit frontier exceeded its budget", partial=None,
                                      frontier=nxt.size, details={"budget": budget})
        return nxt

    # ------------------------------------------------------------------
    # Level sums
    # ------------------------------------------------------------------

    def level_sums(self, op: TransferOperator, u: TestFunction, R_values: Sequence[float], k_max: int,
                   phi: Phi = None, x: Optional[ExtendedPoint] = None, orbit_depth: int = 1,
                   t_step: float = 0.01, frontier_budget: int = FRONTIER_BUDGET,
                   phi_nodes: Optional[np.ndarray] = None) -> np.ndarray:
        """
        M_k(R, phi x u)(x) = Q^k(phi x u)(x, -R) for k = 0 ... k_max.

        Args:
            op: Operator at the exponent s of the sums
            u: Compactly supported test function
            R_values: Radii
            k_max: Deepest level
            phi: Function of the circle angle (default 1)
            phi_nodes: Values of phi at the mesh nodes (default phi at the node angles)
            x: Start point (default x0)
            orbit_depth: Levels read from exact orbit points before the grid
            t_step: Shift grid spacing

        Returns:
            Array of shape (len(R_values), k_max + 1)
        """
        if orbit_depth < 1:
            raise DomainError("orbit_depth must be at least 1", {"orbit_depth": orbit_depth})
        x = ExtendedPoint.base(op.data) if x is None else x
        R_values = [float(R) for R in R_values]
        phi_nodes = self._phi_nodes(op, phi) if phi_nodes is None else np.asarray(phi_nodes, dtype=float)
        plan = self._plan(op, u, phi_nodes, max(R_values), k_max, t_step)
        self._build_levels(plan, k_max)
        b_u = u.support[1]

        out = np.zeros((len(R_values), k_max + 1))
        for r, R in enumerate(R_values):
            front = self._start(plan, x)
            for j in range(min(orbit_depth, k_max + 1)):
                times = -R + front.B
                out[r, j] += float(np.sum(front.weight * self._phi_at(phi, front.theta) * u(times)))
                if j == k_max:
                    break
                tail_terms = self._tail_terms(plan, front)
                if j == orbit_depth - 1:
                    letter_terms = self._letter_terms(plan, front)
                    for k in range(j + 1, k_max + 1):
                        vals = self._row_values(plan, k - j - 1, front, times, letter_terms, tail_terms)
                        out[r, k] += float(np.sum(front.weight * vals))
                    break
                for k in range(j + 1, k_max + 1):
                    out[r, k] += float(np.sum(front.weight * self._tail_values(plan, k - j - 1, front, times,
                                                                                tail_terms)))
                B_cap = R + b_u - min(0.0, plan.m_lo) * (k_max - j - 1)
                front = self._expand(plan, front, B_cap, frontier_budget)
                if front.size == 0:
                    break
        logger.info("Level sums", extra={"R": R_values, "k_max": k_max, "orbit_depth": orbit_depth,
                                         "cells": plan.grid.size})
        return out

    # ------------------------------------------------------------------
    # Renewal form
    # ------------------------------------------------------------------

    def calibrate_Cu(self, p_tilde: Sequence[Sequence[float]], R_values: Sequence[float], alpha: float,
                     L, phi_norm: float = 1.0, safety: float = 1.0) -> float:
        """
        Empirical constant of |P~^k| <= C_u k^2 |phi| L(R) / R^alpha.

        Args:
            p_tilde: Per-R rows of P~^k values, k = 0 ... (level 0 ignored)
            R_values: Radii aligned with the rows

        Returns:
            safety * max over R and k >= 1 of |P~^k| R^alpha / (k^2 L(R) |phi|)
        """
        best = 0.0
        for row, R in zip(p_tilde, R_values):
            scale = R ** alpha / eval_l_calc.calculate(spec=L, t=R) / phi_norm
            for k, value in enumerate(row):
                if k >= 1:
                    best = max(best, abs(value) * scale / k ** 2)
        return safety * best

    def _check_convergent(self, spectral: SpectralResult) -> None:
        if spectral.h is None or not math.isfinite(spectral.rho) or spectral.rho >= 1.0:
            raise DomainError("Renewal sum needs rho < 1 (Convergent verdict)", {"rho": spectral.rho})

    def renewal_M(self, op: TransferOperator, spectral: SpectralResult, u: TestFunction, R: float,
                  k_max: int, phi: Phi = None, x: Optional[ExtendedPoint] = None, orbit_depth: int = 1,
                  t_step: float = 0.01, error_bars: bool = True) -> RenewalResult:
        """
        M(R, phi x u)(x) summed over k <= k_max with its error bars.

        Bars: the level bound over k > k_max, the change when the letter
        truncation is halved and the change under a doubled shift step
        plus one more exact orbit level.

        Raises:
            DomainError: rho >= 1
        """
        self._check_convergent(spectral)
        x = ExtendedPoint.base(op.data) if x is None else x
        rho = spectral.rho
        per_k = self.level_sums(op, u, [R], k_max, phi, x, orbit_depth, t_step)[0]
        value = float(np.sum(per_k))

        h_x = doob_transform.eigenfunction_at(op, spectral, x)
        phi_norm = float(np.max(np.abs(self._phi_nodes(op, phi) / spectral.h)))
        p_tilde = [float(m / (rho ** k * h_x)) for k, m in enumerate(per_k)]
        alpha, L = counting_shape(op.data, op.model)
        C_u = self.calibrate_Cu([p_tilde], [R], alpha, L, phi_norm)
        scale = eval_l_calc.calculate(spec=L, t=R) / R ** alpha
        tail_bound = h_x * phi_norm * C_u * scale * tail_level_sum(rho, k_max)

        truncation_bar = interpolation_bar = 0.0
        if error_bars and k_max >= 1:
            coarse = self.level_sums(op, u, [R], k_max, phi, x, orbit_depth, 2.0 * t_step)[0]
            interpolation_bar = abs(float(np.sum(coarse)) - value)
            try:
                deeper = self.level_sums(op, u, [R], k_max, phi, x, orbit_depth + 1, t_step)[0]
                interpolation_bar += abs(float(np.sum(deeper)) - value)
            except BudgetExceededError as exc:
                logger.warning("Deeper orbit start skipped", extra={"frontier": exc.frontier})
            if op.trunc_N >= 2:
                half_hyp = None if op.trunc_hyperbolic is None else max(1, op.trunc_hyperbolic // 2)
                half = transfer_assembly.calculate(data=op.data, model=op.model, trunc_N=op.trunc_N // 2,
                                                   trunc_hyperbolic=half_hyp, mesh=op.mesh,
                                                   tail_compensation=op.tail_compensation, s=op.s)
                shorter = self.level_sums(half, u, [R], k_max, phi, x, orbit_depth, t_step)[0]
                truncation_bar = abs(float(np.sum(shorter)) - value)

        logger.info("Renewal sum", extra={"R": R, "k_max": k_max, "value": value, "tail_bound": tail_bound,
                                          "truncation_bar": truncation_bar,
                                          "interpolation_bar": interpolation_bar})
        return RenewalResult(R=float(R), k_max=k_max, value=value, tail_bound=tail_bound,
                             truncation_bar=truncation_bar, interpolation_bar=interpolation_bar,
                             per_k=[float(v) for v in per_k], p_tilde=p_tilde, C_u=C_u)

    def _h_at(self, op: TransferOperator, spectral: SpectralResult, theta: np.ndarray) -> np.ndarray:
        """h at boundary angles; gap angles take the value at x0"""
        theta = np.atleast_1d(np.asarray(theta, dtype=float))
        out = np.full(theta.shape, float(spectral.h[op.mesh.x0_index]))
        live = factor_index(op.data, theta) >= 0
        if np.any(live):
            out[live] = op.mesh.interpolate(spectral.h, theta[live])
        return out

    def p_tilde_levels(self, op: TransferOperator, spectral: SpectralResult, u: TestFunction,
                       R_values: Sequence[float], k_max: int, psi: Phi = None,
                       x: Optional[ExtendedPoint] = None, **kwargs) -> np.ndarray:
        """P~^k(psi x u)(x, -R) for k = 0 ... k_max, one row per R"""
        doob_transform._check(spectral)
        x = ExtendedPoint.base(op.data) if x is None else x

        def weighted(theta):
            return self._phi_at(psi, np.atleast_1d(theta)) * self._h_at(op, spectral, theta)

        sums = self.level_sums(op, u, R_values, k_max, weighted, x,
                               phi_nodes=self._phi_nodes(op, psi) * spectral.h, **kwargs)
        h_x = doob_transform.eigenfunction_at(op, spectral, x)
        powers = spectral.rho ** np.arange(k_max + 1)
        return sums / (powers[None, :] * h_x)

    # ------------------------------------------------------------------
    # One exact step
    # ------------------------------------------------------------------

    def p_tilde_apply(self, op: TransferOperator, spectral: SpectralResult, u: TestFunction,
                      x: ExtendedPoint, t: float, phi: Phi = None) -> float:
        """
        P~(phi x u)(x, t) over every letter, each side cut at the first
        exponent whose cocycle leaves the support of u.
        """
        doob_transform._check(spectral)
        data, model, s = op.data, op.model, op.s
        h_x = doob_transform.eigenfunction_at(op, spectral, x)
        owner = point_owner(data, x)
        b_u = u.support[1]
        total = 0.0
        for j in range(data.size):
            if j == owner:
                continue
            for sign in (1, -1):
                n = 1
                while True:
                    if n > MAX_EXPONENT:
                        raise BudgetExceededError("Letter enumeration exceeded its exponent cap", partial=total,
                                                  frontier=n, details={"factor": j})
                    letter = Letter(j, sign * n)
                    a = letter_isometry(data, letter)
                    b = extended_cocycle.letter_cocycle(data, model, letter, x, a)
                    if t + b > b_u:
                        break
                    value = float(u(t + b))
                    if value != 0.0:
                        image = np.array([float(a.apply_theta(x.theta))])
                        h_img = float(op.mesh.interpolate(spectral.h, image, j)[0])
                        total += math.exp(-s * b) * h_img * float(self._phi_at(phi, image)[0]) * value
                    n += 1
        return total / (spectral.rho * h_x)

    # ------------------------------------------------------------------
    # Level limits
    # ------------------------------------------------------------------

    def _markov(self, op: TransferOperator, spectral: SpectralResult, psi: np.ndarray) -> np.ndarray:
        """P psi = L(h psi) / (rho h) at the nodes"""
        return transfer_assembly.apply_L(op, spectral.h * psi) / (spectral.rho * spectral.h)

    def _markov_at(self, op: TransferOperator, spectral: SpectralResult, psi: np.ndarray,
                   x: ExtendedPoint, h_x: float) -> float:
        if x.is_orbit and x.factor is None:
            return float(self._markov(op, spectral, psi)[op.mesh.x0_index])
        return transfer_assembly.apply_at(op, spectral.h * psi, x) / (spectral.rho * h_x)

    def _predict(self, op: TransferOperator, spectral: SpectralResult, constants: Dict[int, float],
                 k_max: int, psi: np.ndarray, x: ExtendedPoint) -> np.ndarray:
        h_x = doob_transform.eigenfunction_at(op, spectral, x)
        values = np.zeros(k_max)
        for j, c_j in constants.items():
            C = level_constant_calc.level_vector(op, spectral, j, c_j)
            at_x = [level_constant_calc.level_constant_Cj(op, spectral, j, x, c_j)]
            for _ in range(1, k_max):
                at_x.append(self._markov_at(op, spectral, C, x, h_x))
                C = self._markov(op, spectral, C)
            fixed = op.mesh.fixed_nodes[(j, 0)]
            iterate = psi.copy()
            at_fixed = [float(iterate[fixed])]
            for _ in range(1, k_max):
                iterate = self._markov(op, spectral, iterate)
                at_fixed.append(float(iterate[fixed]))
            for k in range(1, k_max + 1):
                values[k - 1] += sum(at_x[l] * at_fixed[k - 1 - l] for l in range(k))
        return values

    def level_predictions(self, op: TransferOperator, spectral: SpectralResult, constants: Dict[int, float],
                          k_max: int, psi: Phi = None, x: Optional[ExtendedPoint] = None) -> LevelPrediction:
        """
        sum_j sum_{l < k} P^l C_j(x) P^{k-1-l} psi(x_j) for k = 1 ... k_max.

        Multiplied by the integral of u this is the limit of
        (R^alpha / L(R)) P~^k(psi x u)(x, -R).
        """
        doob_transform._check(spectral)
        x = ExtendedPoint.base(op.data) if x is None else x
        values = self._predict(op, spectral, constants, k_max, self._phi_nodes(op, psi), x)
        return LevelPrediction(k=list(range(1, k_max + 1)), values=[float(v) for v in values],
                               constants={int(j): float(c) for j, c in constants.items()})

    def series_constant(self, op: TransferOperator, spectral: SpectralResult, constants: Dict[int, float],
                        k_max: int, phi: Phi = None, x: Optional[ExtendedPoint] = None) -> SeriesConstant:
        """
        C_phi(x) = h(x) sum_k rho^k sum_j sum_l P^l C_j(x) P^{k-1-l}(phi/h)(x_j).

        Levels beyond k_max are estimated from the largest per-level slope
        value_k / k, the level limits growing at most linearly in k.
        """
        self._check_convergent(spectral)
        x = ExtendedPoint.base(op.data) if x is None else x
        psi = self._phi_nodes(op, phi) / spectral.h
        values = self._predict(op, spectral, constants, k_max, psi, x)
        h_x = doob_transform.eigenfunction_at(op, spectral, x)
        rho = spectral.rho
        per_k = [h_x * rho ** k * float(v) for k, v in enumerate(values, start=1)]
        slope = max((abs(float(v)) / k for k, v in enumerate(values, start=1)), default=0.0)
        k = np.arange(k_max + 1, k_max + 1 + 10_000, dtype=float)
        remainder = h_x * slope * float(np.sum(k * rho ** k))
        logger.info("Series constant", extra={"value": float(np.sum(per_k)), "remainder": remainder,
                                              "k_max": k_max})
        return SeriesConstant(value=float(np.sum(per_k)), remainder=remainder, k_max=k_max,
                              per_k=[float(v) for v in per_k])


# Singleton instance
renewal_calc = RenewalCalculation()
