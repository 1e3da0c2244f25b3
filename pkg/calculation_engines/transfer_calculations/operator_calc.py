"""
Transfer Operator
L_s phi(x) = sum over letters a of 1_{x outside F_{l_a}} e^{-s b~(a, x)} phi(a x)

LOGIC:
  - Entries are assembled once per (data, model, truncation, mesh) and kept
    free of s: row x, interpolation column, coefficient c and cocycle value
    b; at a given s the entry is c e^{-s b}
  - Mesh nodes use the boundary cocycle; the node x0 uses the orbit-point
    branch b~(a, x0) = d(o, a o). Images a x0 are interpolated like
    boundary points
  - Letters beyond the truncation are folded into the node of the fixed
    point they accumulate at:
      parabolic, MODIFIED_CUSP  e^{2s (x_P|x)} 2 tail_sum(s, N, tau_eff)
      parabolic, EXACT_H2       e^{2s (x_P|x)} 2 tau_eff^{-2s} zeta(2s, N + 1)
      hyperbolic, per side      e^{2s (xi-|x)} e^{-s d(o, g^{N+1} o)} / (1 - e^{-s l})
    for n > 0 the images pile up at the attracting fixed point while the
    weight sees the repelling one xi- (and the other way round for n < 0);
    the folded entries stay a diagnostic when tail_compensation is off

ROLE:
  The operator whose spectral radius decides convergence at s = delta.
"""
import logging
import math
from dataclasses import dataclass, field, replace
from typing import Dict, List, Optional

import numpy as np
from scipy import sparse
from scipy.special import zeta

from calculation_engines.coding_calculations.cocycle_calc import extended_cocycle
from calculation_engines.coding_calculations.words_calc import alphabet, letter_caps, letter_isometry
from calculation_engines.hyperbolic_calculations.mobius_calc import hyperbolic_geometry as geo
from calculation_engines.hyperbolic_calculations.schottky_calc import factor_index
from calculation_engines.interfaces.base_calculation import BaseCalculation
from calculation_engines.interfaces.calculation_input_models import (
    DistanceModel, ExtendedPoint, Letter, SchottkyData, Word,
)
from calculation_engines.transfer_calculations.mesh_calc import BoundaryMesh, mesh_construction
from shared.middleware.error_handler import DomainError

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class FoldedTail:
    """Letters |n| > N of one factor accumulating at one fixed point"""
    factor: int
    fixed_point: int
    gromov_point: int
    kind: str
    sides: int


def point_owner(data: SchottkyData, x: ExtendedPoint) -> int:
    """Factor whose ping-pong set holds x, -1 for x0 and gap points"""
    if x.is_orbit:
        return -1 if x.factor is None else int(x.factor)
    return int(factor_index(data, x.theta)[0])


@dataclass
class TransferOperator:
    data: SchottkyData
    model: DistanceModel
    mesh: BoundaryMesh
    trunc_N: int
    trunc_hyperbolic: Optional[int]
    tail_compensation: bool
    letters: List[Letter]
    rows: np.ndarray
    cols: np.ndarray
    coef: np.ndarray
    cocycle: np.ndarray
    tails: List[FoldedTail]
    tail_rows: np.ndarray
    tail_cols: np.ndarray
    tail_tag: np.ndarray
    tail_gromov: np.ndarray
    s: float = 1.0
    _cache: Dict[str, object] = field(init=False, default_factory=dict, repr=False)

    def at(self, s: float) -> "TransferOperator":
        """Same entries at another exponent"""
        return replace(self, s=float(s))

    @property
    def size(self) -> int:
        return self.mesh.size

    @property
    def bipartite(self) -> bool:
        return self.data.size == 2

    def tail_value(self, tail: FoldedTail) -> float:
        """Sum of e^{-s d(o, g^n o)} over the folded exponents of one side group"""
        s = self.s
        factor = self.data.factors[tail.factor]
        cap = letter_caps(self.data, self.trunc_N, self.trunc_hyperbolic)[tail.factor]
        if tail.kind == "parabolic":
            tau = extended_cocycle.tau_eff(self.data, tail.factor)
            if self.model.modified:
                one_side = self.model.table.tail_sum(s, cap, tau)
            elif 2.0 * s <= 1.0:
                one_side = math.inf
            else:
                one_side = float(tau ** (-2.0 * s) * zeta(2.0 * s, cap + 1.0))
            return tail.sides * one_side
        if s <= 0.0:
            return math.inf
        ell = geo.translation_length(factor.generator)
        d_next = geo.dist(self.data.o, factor.element(cap + 1).apply(self.data.o))
        return tail.sides * math.exp(-s * d_next) / -math.expm1(-s * ell)

    def tail_values(self) -> np.ndarray:
        if "tail_values" not in self._cache:
            self._cache["tail_values"] = np.array([self.tail_value(t) for t in self.tails])
        return self._cache["tail_values"]

    @property
    def infinite(self) -> bool:
        """Folded tails diverge at this s"""
        return self.tail_compensation and bool(np.any(np.isinf(self.tail_values())))

    def truncated_matrix(self) -> sparse.csr_matrix:
        if "truncated" not in self._cache:
            values = self.coef * np.exp(-self.s * self.cocycle)
            self._cache["truncated"] = sparse.csr_matrix(
                (values, (self.rows, self.cols)), shape=(self.size, self.size)
            )
        return self._cache["truncated"]

    def tail_entries(self) -> np.ndarray:
        """Folded weights aligned with tail_rows / tail_cols"""
        return self.tail_values()[self.tail_tag] * np.exp(2.0 * self.s * self.tail_gromov)

    def tail_matrix(self) -> sparse.csr_matrix:
        if "tail" not in self._cache:
            self._cache["tail"] = sparse.csr_matrix(
                (self.tail_entries(), (self.tail_rows, self.tail_cols)), shape=(self.size, self.size)
            )
        return self._cache["tail"]

    def matrix(self) -> sparse.csr_matrix:
        """Finite discretized operator (tails folded in when compensated)"""
        if self.infinite:
            raise DomainError("Folded tail diverges at this exponent", {"s": self.s})
        if not self.tail_compensation:
            return self.truncated_matrix()
        return (self.truncated_matrix() + self.tail_matrix()).tocsr()


class TransferAssembly(BaseCalculation):
    """Assemble, apply and evaluate the discretized transfer operator"""

    @property
    def calculation_name(self) -> str:
        return "transfer_operator"

    @property
    def description(self) -> str:
        return "Ruelle operator L_s on a boundary mesh"

    def validate_inputs(self, data: SchottkyData = None, model: DistanceModel = None,
                        trunc_N: int = None, **kwargs) -> bool:
        return data is not None and model is not None and trunc_N is not None and trunc_N >= 1

    def calculate(self, data: SchottkyData, model: DistanceModel, trunc_N: int,
                  trunc_hyperbolic: Optional[int] = None, mesh: Optional[BoundaryMesh] = None,
                  mesh_points: int = 96, tail_compensation: bool = True, s: float = 1.0,
                  **kwargs) -> TransferOperator:
        """
        Assemble L_s.

        Args:
            data: Schottky data
            model: Distance model
            trunc_N: Parabolic letters per side
            trunc_hyperbolic: Hyperbolic letters per side (default trunc_N)
            mesh: Boundary mesh (built from mesh_points when missing)
            mesh_points: Nodes per arc
            tail_compensation: Fold letters beyond the truncation into fixed points
            s: Exponent

        Returns:
            TransferOperator
        """
        mesh = mesh_construction.calculate(data, mesh_points) if mesh is None else mesh
        letters = alphabet(data, trunc_N, trunc_hyperbolic)
        base = ExtendedPoint.base(data)
        x0 = mesh.x0_index

        rows, cols, coef, cocycle = [], [], [], []
        for letter in letters:
            a = letter_isometry(data, letter)
            src = mesh.nodes_outside(letter.factor)
            b = np.asarray(extended_cocycle.boundary_letter_cocycle(data, model, letter, mesh.theta[src], a),
                           dtype=float).copy()
            b[src == x0] = extended_cocycle.letter_cocycle(data, model, letter, base, a)
            lo, hi, w = mesh.stencil(letter.factor, a.apply_theta(mesh.theta[src]))
            rows.extend([src, src])
            cols.extend([lo, hi])
            coef.extend([1.0 - w, w])
            cocycle.extend([b, b])

        tails, t_rows, t_cols, t_tag, t_gromov = [], [], [], [], []
        for j, factor in enumerate(data.factors):
            fixed = factor.fixed_points
            groups = [(0, 0, 2)] if factor.kind == "parabolic" else [(0, 1, 1), (1, 0, 1)]
            src = mesh.nodes_outside(j)
            for k, k_g, sides in groups:
                tails.append(FoldedTail(factor=j, fixed_point=k, gromov_point=k_g, kind=factor.kind, sides=sides))
                g = np.asarray(geo.gromov(fixed[k_g], mesh.theta[src], data.o), dtype=float).copy()
                g[src == x0] = geo.gromov_interior(fixed[k_g], data.o, data.o)
                t_rows.append(src)
                t_cols.append(np.full(src.shape, mesh.fixed_nodes[(j, k)]))
                t_tag.append(np.full(src.shape, len(tails) - 1))
                t_gromov.append(g)

        op = TransferOperator(
            data=data, model=model, mesh=mesh, trunc_N=trunc_N, trunc_hyperbolic=trunc_hyperbolic,
            tail_compensation=tail_compensation, letters=letters,
            rows=np.concatenate(rows), cols=np.concatenate(cols),
            coef=np.concatenate(coef), cocycle=np.concatenate(cocycle),
            tails=tails, tail_rows=np.concatenate(t_rows), tail_cols=np.concatenate(t_cols),
            tail_tag=np.concatenate(t_tag), tail_gromov=np.concatenate(t_gromov), s=float(s),
        )
        logger.info("Transfer operator assembled", extra={
            "model": model.tag, "letters": len(letters), "nodes": mesh.size, "entries": int(op.rows.size)
        })
        return op

    # ------------------------------------------------------------------
    # Weights and action
    # ------------------------------------------------------------------

    def weight_w(self, s: float, word: Word, x: ExtendedPoint, model: DistanceModel,
                 data: SchottkyData) -> float:
        """w_s(gamma, x) = e^{-s b~(gamma, x)}, 0 when x lies in F of the last letter"""
        if not word.letters:
            return 1.0
        if point_owner(data, x) == word.last_factor:
            return 0.0
        return math.exp(-s * extended_cocycle.cocycle(data, model, word, x))

    def apply_L(self, op: TransferOperator, phi: np.ndarray) -> np.ndarray:
        """(L_s phi) at the mesh nodes"""
        phi = np.asarray(phi, dtype=float)
        out = op.truncated_matrix() @ phi
        if op.tail_compensation:
            out = out + self.tail_estimate(op, phi)
        return out

    def tail_estimate(self, op: TransferOperator, phi: np.ndarray) -> np.ndarray:
        """Folded contribution of the letters beyond the truncation"""
        phi = np.asarray(phi, dtype=float)
        at_fixed = phi[op.tail_cols]
        terms = np.zeros(at_fixed.shape)
        live = at_fixed != 0.0
        terms[live] = op.tail_entries()[live] * at_fixed[live]
        return np.bincount(op.tail_rows, weights=terms, minlength=op.size)

    def tails_at(self, op: TransferOperator, phi: np.ndarray, x: ExtendedPoint) -> float:
        """Folded contribution at an arbitrary point"""
        data = op.data
        owner = point_owner(data, x)
        total = 0.0
        for value, tail in zip(op.tail_values(), op.tails):
            if tail.factor == owner:
                continue
            xi = data.factors[tail.factor].fixed_points[tail.gromov_point]
            if x.is_orbit:
                g = geo.gromov_interior(xi, x.g.apply(data.o), data.o)
            else:
                g = geo.gromov(xi, x.theta, data.o)
            at_fixed = phi[op.mesh.fixed_nodes[(tail.factor, tail.fixed_point)]]
            if at_fixed != 0.0:
                total += value * math.exp(2.0 * op.s * g) * at_fixed
        return total

    def apply_at(self, op: TransferOperator, phi: np.ndarray, x: ExtendedPoint,
                 with_tail: Optional[bool] = None) -> float:
        """(L_s phi)(x) summed letter by letter at any point of the extended set"""
        phi = np.asarray(phi, dtype=float)
        owner = point_owner(op.data, x)
        total = 0.0
        for letter in op.letters:
            if letter.factor == owner:
                continue
            a = letter_isometry(op.data, letter)
            b = extended_cocycle.letter_cocycle(op.data, op.model, letter, x, a)
            image = float(a.apply_theta(x.theta))
            total += math.exp(-op.s * b) * float(op.mesh.interpolate(phi, image, letter.factor)[0])
        with_tail = op.tail_compensation if with_tail is None else with_tail
        if with_tail:
            total += self.tails_at(op, phi, x)
        return total


# Singleton instance
transfer_assembly = TransferAssembly()
