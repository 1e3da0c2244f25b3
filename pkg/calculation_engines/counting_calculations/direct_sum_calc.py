"""
Direct Sums over Enumerated Words
M(R, phi x u)(x) and its pieces summed word by word, no renewal form

LOGIC:
  - M(R, phi x u)(x) = sum_gamma e^{-delta b~(gamma, x)} phi(gamma x) u(-R + b~(gamma, x))
    over the words whose last letter does not own x; at x0, b~ is d(o, gamma o)
    and the ball of radius R + sup supp u holds every live word
  - At a boundary x, b~ >= d - C_F, so the ball grows by the cocycle margin
  - Decomposition: each gamma with d <= R sits in exactly one window
    n = floor(R - d) and contributes e^{delta R} e^{-delta d} e^{delta (d - R)} = 1,
    so e^{delta R} sum_n M(R, 1 x e_n)(x0) = N(R); the mollified windows
    are reported beside it
  - Step split of P~^{k+1}(phi x u)(x, -R) by the first-acting letter beta
    and the rest gamma:
      A  d(o, beta o) <= r
      B  d(o, beta o) >  r, d(o, gamma o) <= r
      C  both above r

ROLE:
  Oracle for the renewal sums and the decomposition diagnostics.
"""
import logging
import math
from dataclasses import dataclass
from typing import Callable, List, Optional

import numpy as np

from calculation_engines.coding_calculations.ball_calc import ball_enumeration
from calculation_engines.coding_calculations.cocycle_calc import extended_cocycle
from calculation_engines.coding_calculations.words_calc import compose
from calculation_engines.interfaces.base_calculation import BaseCalculation
from calculation_engines.interfaces.calculation_input_models import (
    DistanceModel, ExtendedPoint, SchottkyData, TestFunction, Word,
)
from calculation_engines.interfaces.calculation_output_models import (
    BallResult, DecompositionCheck, DirectSum, SpectralResult, StepSplit,
)
from calculation_engines.transfer_calculations.critical_calc import factor_exponent
from calculation_engines.transfer_calculations.doob_calc import doob_transform
from calculation_engines.transfer_calculations.operator_calc import TransferOperator, point_owner
from shared.middleware.error_handler import BudgetExceededError

logger = logging.getLogger(__name__)

MARGIN_PAD = 0.5
MATCH_TOL = 1e-9

Phi = Optional[Callable[[np.ndarray], np.ndarray]]


@dataclass
class _Term:
    word: Word
    b: float
    theta: float


class DirectSumCalculation(BaseCalculation):
    """Word-by-word sums of M and of P~^{k+1}"""

    @property
    def calculation_name(self) -> str:
        return "direct_sum"

    @property
    def description(self) -> str:
        return "M(R, phi x u)(x) by direct summation over enumerated words"

    def calculate(self, data: SchottkyData, model: DistanceModel, u: TestFunction, R: float, **kwargs) -> DirectSum:
        return self.direct_M(data, model, u, R, **kwargs)

    # ------------------------------------------------------------------
    # Enumeration
    # ------------------------------------------------------------------

    def _ball(self, data: SchottkyData, model: DistanceModel, radius: float, k_cap: Optional[int],
              node_budget: int, workers: int, seed: int, c_prune: Optional[float]) -> BallResult:
        try:
            return ball_enumeration.enumerate_ball(data, model, radius, k_cap=k_cap, c_prune=c_prune,
                                                   node_budget=node_budget, keep_words=True,
                                                   workers=workers, seed=seed)
        except BudgetExceededError as exc:
            logger.warning("Direct sum on a partial enumeration", extra={"radius": radius,
                                                                        "frontier": exc.frontier})
            return exc.partial

    def _terms(self, data: SchottkyData, model: DistanceModel, x: ExtendedPoint, b_u: float, R: float,
               k_cap: Optional[int], node_budget: int, workers: int, seed: int,
               c_prune: Optional[float]):
        """Live words with b~(gamma, x) and the angle of gamma x"""
        at_base = x.is_orbit and x.factor is None
        radius = R + b_u
        if not at_base:
            radius += ball_enumeration.cocycle_margin(data, model, seed=seed + 1) + MARGIN_PAD
        if radius <= 0.0:
            return [], "exact"
        ball = self._ball(data, model, radius, k_cap, node_budget, workers, seed, c_prune)
        owner = point_owner(data, x)
        terms: List[_Term] = []
        for word, d in zip(ball.words, ball.distances):
            if not word.letters or word.last_factor == owner:
                continue
            b = float(d) if at_base else extended_cocycle.cocycle(data, model, word, x)
            if -R + b > b_u:
                continue
            terms.append(_Term(word=word, b=b, theta=float(compose(data, word).apply_theta(x.theta))))
        return terms, ball.completeness

    def _phi(self, phi: Phi, theta) -> np.ndarray:
        theta = np.atleast_1d(np.asarray(theta, dtype=float))
        return np.ones(theta.shape) if phi is None else np.asarray(phi(theta), dtype=float)

    # ------------------------------------------------------------------
    # M(R, phi x u)(x)
    # ------------------------------------------------------------------

    def direct_M(self, data: SchottkyData, model: DistanceModel, u: TestFunction, R: float, phi: Phi = None,
                 x: Optional[ExtendedPoint] = None, delta: Optional[float] = None, k_cap: Optional[int] = None,
                 node_budget: int = 5_000_000, workers: int = 1, seed: int = 0,
                 c_prune: Optional[float] = None) -> DirectSum:
        """
        M(R, phi x u)(x) over every enumerated word.

        Args:
            data: Schottky data
            model: Distance model
            u: Compactly supported test function
            R: Radius
            phi: Function of the circle angle (default 1)
            x: Start point (default x0)
            delta: Exponent (default: the factor exponent)
            k_cap: Longest word summed

        Returns:
            DirectSum with the per-length split
        """
        x = ExtendedPoint.base(data) if x is None else x
        delta = factor_exponent(data) if delta is None else float(delta)
        terms, completeness = self._terms(data, model, x, u.support[1], R, k_cap, node_budget, workers,
                                          seed, c_prune)
        depth = max((t.word.length for t in terms), default=0)
        per_k = [[] for _ in range(depth + 1)]
        per_k[0].append(float(self._phi(phi, x.theta)[0] * u(-R)))
        live = 0
        if terms:
            b = np.array([t.b for t in terms])
            weights = np.exp(-delta * b) * self._phi(phi, [t.theta for t in terms]) * u(-R + b)
            for term, w in zip(terms, weights):
                if w != 0.0:
                    per_k[term.word.length].append(float(w))
                    live += 1
        sums = [math.fsum(v) for v in per_k]
        value = math.fsum(sums)
        logger.info("Direct sum", extra={"R": R, "value": value, "words": live, "completeness": completeness})
        return DirectSum(R=float(R), value=value, per_k=sums, words=live, completeness=completeness)

    # ------------------------------------------------------------------
    # Decomposition
    # ------------------------------------------------------------------

    def decomposition_check(self, data: SchottkyData, model: DistanceModel, R: float,
                            delta: Optional[float] = None, mollify: float = 1e-3,
                            node_budget: int = 5_000_000, workers: int = 1, seed: int = 0,
                            c_prune: Optional[float] = None) -> DecompositionCheck:
        """N(R) against e^{delta R} sum_n M(R, 1 x e_n)(x0) with exact and mollified e_n"""
        delta = factor_exponent(data) if delta is None else float(delta)
        try:
            ball = ball_enumeration.enumerate_ball(data, model, R + mollify, c_prune=c_prune,
                                                   node_budget=node_budget, workers=workers, seed=seed)
        except BudgetExceededError as exc:
            ball = exc.partial
        d = np.asarray(ball.distances, dtype=float)
        inside = d[d <= R]
        brute = int(inside.size)

        windows = np.floor(R - inside).astype(int)
        per_n = {}
        for n, dist in zip(windows, inside):
            per_n.setdefault(int(n), []).append(math.exp(-delta * dist) * math.exp(delta * (dist - R)))
        decomposed = math.exp(delta * R) * math.fsum(math.fsum(v) for v in per_n.values())

        mollified = 0.0
        for n in range(int(math.floor(R)) + 2):
            e_n = TestFunction.exponential_window(n, delta, mollify)
            mollified += float(np.sum(np.exp(-delta * d) * e_n(d - R)))
        mollified *= math.exp(delta * R)

        exact_match = round(decomposed) == brute and abs(decomposed - brute) <= MATCH_TOL * max(1, brute)
        logger.info("Decomposition check", extra={"R": R, "brute": brute, "decomposed": decomposed,
                                                  "mollified": mollified, "exact_match": exact_match})
        return DecompositionCheck(R=float(R), brute=brute, decomposed=decomposed, mollified=mollified,
                                  exact_match=exact_match)

    # ------------------------------------------------------------------
    # Step split
    # ------------------------------------------------------------------

    def step_split(self, op: TransferOperator, spectral: SpectralResult, u: TestFunction, k: int, r: float,
                   R: float, phi: Phi = None, x: Optional[ExtendedPoint] = None, node_budget: int = 5_000_000,
                   workers: int = 1, seed: int = 0, c_prune: Optional[float] = None) -> StepSplit:
        """
        P~^{k+1}(phi x u)(x, -R) split by the distances of its first-acting
        letter and of the remaining word.
        """
        doob_transform._check(spectral)
        data, model, s = op.data, op.model, op.s
        x = ExtendedPoint.base(data) if x is None else x
        h_x = doob_transform.eigenfunction_at(op, spectral, x)
        terms, _ = self._terms(data, model, x, u.support[1], R, k + 1, node_budget, workers, seed, c_prune)
        terms = [t for t in terms if t.word.length == k + 1]

        parts = {"A": [], "B": [], "C": []}
        everything = []
        scale = spectral.rho ** (k + 1) * h_x
        for term in terms:
            value = float(u(-R + term.b))
            if value == 0.0:
                continue
            image = np.array([term.theta])
            h_img = float(op.mesh.interpolate(spectral.h, image, term.word.first_factor)[0])
            contribution = math.exp(-s * term.b) * h_img / scale * float(self._phi(phi, image)[0]) * value
            everything.append(contribution)
            beta = term.word.letters[-1]
            if extended_cocycle.letter_distance(data, model, beta) <= r:
                parts["A"].append(contribution)
            elif extended_cocycle.word_distance(Word(term.word.letters[:-1]), model, data) <= r:
                parts["B"].append(contribution)
            else:
                parts["C"].append(contribution)

        result = StepSplit(k=k, r=float(r), R=float(R), A=math.fsum(parts["A"]), B=math.fsum(parts["B"]),
                           C=math.fsum(parts["C"]), total=math.fsum(everything))
        logger.info("Step split", extra=result.model_dump())
        return result


# Singleton instance
direct_sum_calc = DirectSumCalculation()
