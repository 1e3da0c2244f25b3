"""
Boundary Mesh
Piecewise-linear functions on the ping-pong arcs plus the isolated point x0

LOGIC:
  - Every arc of factor j carries mesh_points nodes uniform in the circle
    angle, at cell midpoints so they stay strictly inside the arc, plus the
    fixed points of the factor generator lying on that arc
  - Node order: factor 0 arcs, factor 1 arcs, ..., x0 last
  - A function is its vector of node values; between nodes of one arc it
    is linear in the arc offset, and constant between the outermost node
    and the arc end
  - A point handed to an interpolation stencil of factor j must lie on an
    arc of factor j; anything else is a ping-pong leak

ROLE:
  Discretization of C(extended limit set) for the transfer operator and
  the Doob weights.
"""
import logging
from dataclasses import dataclass, field
from typing import Dict, List, Optional, Tuple

import numpy as np

from calculation_engines.hyperbolic_calculations.schottky_calc import (
    TWO_PI, arc_contains, arc_length, arc_offset, factor_index,
)
from calculation_engines.interfaces.base_calculation import BaseCalculation
from calculation_engines.interfaces.calculation_input_models import SchottkyData, wrap_theta
from shared.middleware.error_handler import DomainError, NumericError

logger = logging.getLogger(__name__)

LEAK_TOL = 1e-9
NODE_MERGE = 1e-12


@dataclass
class ArcGrid:
    """Nodes of one arc, sorted by offset from the arc start"""
    arc: Tuple[float, float]
    offsets: np.ndarray
    nodes: np.ndarray

    def offset_of(self, theta: np.ndarray) -> np.ndarray:
        off = arc_offset(self.arc, theta)
        return np.where(off > TWO_PI - LEAK_TOL, off - TWO_PI, off)


@dataclass
class BoundaryMesh:
    data: SchottkyData
    theta: np.ndarray
    owner: np.ndarray
    grids: List[List[ArcGrid]]
    fixed_nodes: Dict[Tuple[int, int], int] = field(default_factory=dict)

    @property
    def size(self) -> int:
        return int(self.theta.size)

    @property
    def x0_index(self) -> int:
        return self.size - 1

    def nodes_outside(self, factor: int) -> np.ndarray:
        """Nodes where letters of this factor act (x0 included)"""
        return np.flatnonzero(self.owner != factor)

    def stencil(self, factor: int, theta) -> Tuple[np.ndarray, np.ndarray, np.ndarray]:
        """
        Linear interpolation stencil on the arcs of one factor.

        Returns:
            (lower node, upper node, weight of the upper node) per point

        Raises:
            NumericError: A point lies outside every arc of the factor
        """
        theta = np.atleast_1d(np.asarray(theta, dtype=float))
        lo = np.full(theta.shape, -1, dtype=int)
        hi = np.full(theta.shape, -1, dtype=int)
        w = np.zeros(theta.shape)
        for grid in self.grids[factor]:
            hit = (lo < 0) & arc_contains(grid.arc, theta, tol=LEAK_TOL)
            if not np.any(hit):
                continue
            off = grid.offset_of(theta[hit])
            if grid.offsets.size == 1:
                lo[hit] = hi[hit] = grid.nodes[0]
                continue
            k = np.clip(np.searchsorted(grid.offsets, off), 1, grid.offsets.size - 1)
            left, right = grid.offsets[k - 1], grid.offsets[k]
            lo[hit] = grid.nodes[k - 1]
            hi[hit] = grid.nodes[k]
            w[hit] = np.clip((off - left) / (right - left), 0.0, 1.0)
        if np.any(lo < 0):
            leaked = theta[lo < 0]
            raise NumericError(
                "Pushforward outside the ping-pong arcs",
                {"factor": factor, "theta": [float(t) for t in leaked[:5]], "count": int(leaked.size)}
            )
        return lo, hi, w

    def interpolate(self, values: np.ndarray, theta, factor: Optional[int] = None) -> np.ndarray:
        """Mesh function at boundary angles; factor None locates the owning arcs"""
        theta = np.atleast_1d(np.asarray(theta, dtype=float))
        if factor is not None:
            lo, hi, w = self.stencil(factor, theta)
            return (1.0 - w) * values[lo] + w * values[hi]
        owner = factor_index(self.data, theta)
        out = np.empty(theta.shape)
        for j in np.unique(owner):
            sel = owner == j
            if j < 0:
                raise DomainError("Point outside every ping-pong arc",
                                  {"theta": [float(t) for t in theta[sel][:5]]})
            out[sel] = self.interpolate(values, theta[sel], int(j))
        return out


class MeshConstruction(BaseCalculation):

    @property
    def calculation_name(self) -> str:
        return "boundary_mesh"

    def validate_inputs(self, data: SchottkyData = None, mesh_points: int = 96, **kwargs) -> bool:
        return data is not None and mesh_points >= 2

    def calculate(self, data: SchottkyData, mesh_points: int = 96, **kwargs) -> BoundaryMesh:
        """
        Mesh with mesh_points nodes per arc.

        Args:
            data: Schottky data
            mesh_points: Uniform nodes per arc (fixed points come on top)

        Returns:
            BoundaryMesh
        """
        thetas: List[float] = []
        owners: List[int] = []
        grids: List[List[ArcGrid]] = []
        fixed_nodes: Dict[Tuple[int, int], int] = {}

        for j, factor in enumerate(data.factors):
            fixed = [p.theta for p in factor.fixed_points]
            factor_grids = []
            for arc in factor.arcs:
                length = arc_length(arc)
                offsets = (np.arange(mesh_points) + 0.5) * length / mesh_points
                for theta_f in fixed:
                    if arc_contains(arc, theta_f):
                        offsets = np.append(offsets, float(arc_offset(arc, theta_f)))
                offsets = np.sort(offsets)
                offsets = offsets[np.concatenate([[True], np.diff(offsets) > NODE_MERGE])]
                start = len(thetas)
                nodes = np.arange(start, start + offsets.size)
                thetas.extend(float(t) for t in wrap_theta(arc[0] + offsets))
                owners.extend([j] * offsets.size)
                grid = ArcGrid(arc=arc, offsets=offsets, nodes=nodes)
                factor_grids.append(grid)
                for k, theta_f in enumerate(fixed):
                    if arc_contains(arc, theta_f):
                        off = grid.offset_of(np.array([theta_f]))[0]
                        fixed_nodes[(j, k)] = int(nodes[int(np.argmin(np.abs(offsets - off)))])
            grids.append(factor_grids)
            for k in range(len(fixed)):
                if (j, k) not in fixed_nodes:
                    raise DomainError("Fixed point outside the arcs of its own factor",
                                      {"factor": j, "fixed_point": k})

        thetas.append(data.x0.theta)
        owners.append(-1)
        mesh = BoundaryMesh(data=data, theta=np.array(thetas), owner=np.array(owners, dtype=int),
                            grids=grids, fixed_nodes=fixed_nodes)
        logger.debug("Boundary mesh built", extra={"nodes": mesh.size, "mesh_points": mesh_points})
        return mesh


# Singleton instance
mesh_construction = MeshConstruction()
