"""
Ball Enumeration
Orbit points gamma o with d(o, gamma o) <= R, by pruned depth-first search

LOGIC:
  - Words grow by prepending letters: d(a gamma) = b~(a, gamma x0) + d(gamma),
    the child isometry is a gamma
  - Slack S = 2 C_prune where C_prune = 1.5 * max observed violation of
    d(o, a gamma o) >= d(o, a o) + d(o, gamma o) - 2 C
  - A node with distance d is expanded while d + gain - S <= R, gain being
    the smallest single-letter distance
  - A letter a is tried from a node while
    d + d(a) - S - max(0, S - gain) <= R; single-letter distances grow with
    |n|, so exponents are cut by bisection and the countable alphabet
    needs no cap
  - Completeness is "exact" when S covers the empirical constant C_F of
    d(o, g o) - C_F <= b~(g, x), "heuristic-complete" otherwise
  - Subtrees under each first-acting letter are independent; they are
    merged in letter order so any worker count gives the same output

ROLE:
  Realizes the orbital function N(R) for counting and the A7 oracle.
"""
import bisect
import logging
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass
from typing import Dict, List, Optional, Tuple

import numpy as np

from calculation_engines.coding_calculations.cocycle_calc import EXACT, extended_cocycle
from calculation_engines.coding_calculations.words_calc import compose, letter_isometry, word_enumeration
from calculation_engines.hyperbolic_calculations.mobius_calc import hyperbolic_geometry as geo
from calculation_engines.hyperbolic_calculations.schottky_calc import factor_index
from calculation_engines.hyperbolic_calculations.validation_calc import schottky_validation
from calculation_engines.interfaces.base_calculation import BaseCalculation
from calculation_engines.interfaces.calculation_input_models import (
    DistanceModel, ExtendedPoint, Isometry, Letter, SchottkyData, Word,
)
from calculation_engines.interfaces.calculation_output_models import BallResult
from shared.middleware.error_handler import BudgetExceededError, DomainError

logger = logging.getLogger(__name__)

SAMPLE_CAPS = {"parabolic": 20, "hyperbolic": 3}
SAFETY = 1.5


@dataclass
class _BallSetup:
    data: SchottkyData
    model: DistanceModel
    R: float
    slack: float
    gain: float
    k_cap: Optional[int]
    keep_words: bool
    budget: int
    # per factor: single-letter distances for |n| = 1, 2, ...
    letter_d: Tuple[Tuple[float, ...], ...]


@dataclass
class _Subtree:
    distances: List[float]
    lengths: List[int]
    words: Optional[List[Word]]
    nodes: int
    frontier: int = 0
    exhausted: bool = False


def _letter_distances(data: SchottkyData, model: DistanceModel, bound: float) -> Tuple[Tuple[float, ...], ...]:
    """Single-letter distances per factor up to the first exceeding bound"""
    out = []
    for j in range(data.size):
        values = []
        n = 1
        while True:
            d = extended_cocycle.letter_distance(data, model, Letter(j, n))
            values.append(d)
            if d > bound:
                break
            n += 1
        out.append(tuple(values))
    return tuple(out)


def _child_letters(setup: _BallSetup, d: float, first: Optional[int]) -> List[Letter]:
    """Letters worth trying in front of a node, in letter order"""
    bound = setup.R - d + setup.slack + max(0.0, setup.slack - setup.gain)
    letters = []
    for j, dists in enumerate(setup.letter_d):
        if j == first:
            continue
        top = bisect.bisect_right(dists, bound)
        letters.extend(Letter(j, -n) for n in range(top, 0, -1))
        letters.extend(Letter(j, n) for n in range(1, top + 1))
    return letters


def _child_distance(setup: _BallSetup, letter: Letter, a: Isometry, g: Isometry, child: Isometry,
                    d: float, first: Optional[int]) -> float:
    data = setup.data
    if not setup.model.modified:
        return geo.dist(data.o, child.apply(data.o))
    x = ExtendedPoint(theta=float(g.apply_theta(data.x0.theta)), g=g, factor=first)
    return extended_cocycle.letter_cocycle(data, setup.model, letter, x, a) + d


def _explore(setup: _BallSetup, root: Letter) -> _Subtree:
    """Depth-first search of the words whose first-acting letter is root"""
    data = setup.data
    cache: Dict[Letter, Isometry] = {}

    def isometry(letter: Letter) -> Isometry:
        if letter not in cache:
            cache[letter] = letter_isometry(data, letter)
        return cache[letter]

    out = _Subtree([], [], [] if setup.keep_words else None, 0)
    a = isometry(root)
    identity = Isometry.identity()
    # (isometry, distance, first factor, letters)
    stack = [(a @ identity, _child_distance(setup, root, a, identity, a @ identity, 0.0, None),
              root.factor, (root,))]
    while stack:
        g, d, first, letters = stack.pop()
        out.nodes += 1
        if out.nodes > setup.budget:
            out.exhausted = True
            out.frontier = len(stack) + 1
            return out
        if d <= setup.R:
            out.distances.append(d)
            out.lengths.append(len(letters))
            if out.words is not None:
                out.words.append(Word(letters))
        if d + setup.gain - setup.slack > setup.R:
            continue
        if setup.k_cap is not None and len(letters) >= setup.k_cap:
            continue
        children = []
        for letter in _child_letters(setup, d, first):
            b = isometry(letter)
            child = b @ g
            children.append((child, _child_distance(setup, letter, b, g, child, d, first),
                             letter.factor, (letter,) + letters))
        stack.extend(reversed(children))
    return out


class BallEnumeration(BaseCalculation):
    """Pruned enumeration of the orbit ball of radius R"""

    @property
    def calculation_name(self) -> str:
        return "enumerate_ball"

    @property
    def description(self) -> str:
        return "Words with d(o, gamma o) <= R by pruned depth-first search"

    def validate_inputs(self, data: SchottkyData = None, R: float = None, **kwargs) -> bool:
        return data is not None and R is not None and R > 0

    def calculate(self, data: SchottkyData, model: DistanceModel, R: float, **kwargs) -> BallResult:
        return self.enumerate_ball(data, model, R, **kwargs)

    # ------------------------------------------------------------------
    # Pruning constant
    # ------------------------------------------------------------------

    def _sample_caps(self, data: SchottkyData) -> Tuple[int, ...]:
        return tuple(SAMPLE_CAPS[f.kind] for f in data.factors)

    def superadditivity_margin(self, data: SchottkyData, model: DistanceModel = EXACT,
                               samples: int = 10_000, seed: int = 0, max_length: int = 6) -> float:
        """
        C_prune = 1.5 * max over sampled (a, gamma) of (d(a) + d(gamma) - d(a gamma)) / 2.

        Args:
            data: Schottky data
            model: Distance model
            samples: Number of random admissible pairs
            seed: Seed of the sampler
            max_length: Longest gamma sampled

        Returns:
            C_prune (0 when no violation is observed)
        """
        rng = np.random.default_rng(seed)
        caps = self._sample_caps(data)
        worst = 0.0
        for _ in range(samples):
            gamma = word_enumeration.random_word(data, rng, int(rng.integers(1, max_length + 1)), caps)
            a = word_enumeration.random_word(data, rng, 1, caps, first_factor_not=gamma.first_factor)
            joined = Word(a.letters + gamma.letters)
            violation = 0.5 * (extended_cocycle.word_distance(a, model, data)
                               + extended_cocycle.word_distance(gamma, model, data)
                               - extended_cocycle.word_distance(joined, model, data))
            worst = max(worst, violation)
        c_prune = SAFETY * worst
        logger.info("Superadditivity margin", extra={"model": model.tag, "samples": samples,
                                                     "max_violation": worst, "c_prune": c_prune})
        return c_prune

    def cocycle_margin(self, data: SchottkyData, model: DistanceModel = EXACT, words: int = 200,
                       seed: int = 1, sample_theta: Optional[np.ndarray] = None) -> float:
        """Empirical C_F: max of d(o, g o) - b~(g, x) over x outside F_{l_g}"""
        rng = np.random.default_rng(seed)
        caps = self._sample_caps(data)
        sample = np.linspace(-np.pi, np.pi, 64, endpoint=False) + 0.01 if sample_theta is None else sample_theta
        sampled = [word_enumeration.random_word(data, rng, int(rng.integers(1, 5)), caps) for _ in range(words)]
        if not model.modified:
            report = schottky_validation.property_margin(
                data, [(compose(data, w), w.last_factor) for w in sampled], sample
            )
            return report.C_F
        owner = factor_index(data, sample)
        C_F = 0.0
        for w in sampled:
            d = extended_cocycle.word_distance(w, model, data)
            for theta in sample[owner != w.last_factor]:
                C_F = max(C_F, d - extended_cocycle.cocycle(data, model, w, ExtendedPoint.boundary(theta)))
        return C_F

    # ------------------------------------------------------------------
    # Enumeration
    # ------------------------------------------------------------------

    def enumerate_ball(self, data: SchottkyData, model: DistanceModel, R: float,
                       k_cap: Optional[int] = None, c_prune: Optional[float] = None,
                       node_budget: int = 5_000_000, keep_words: bool = False, workers: int = 1,
                       seed: int = 0, certify: bool = True) -> BallResult:
        """
        All orbit points within distance R, identity included.

        Args:
            data: Validated Schottky data
            model: Distance model
            R: Radius
            k_cap: Longest word explored (None for no cap)
            c_prune: Pruning constant; estimated by superadditivity_margin when None
            node_budget: Largest number of search nodes
            keep_words: Return the words with their distances
            workers: Processes for the root subtrees
            seed: Seed of the margin sampler
            certify: Compare the slack with the empirical cocycle margin

        Returns:
            BallResult with distances in search order
        """
        if R <= 0:
            raise DomainError("Ball radius must be positive", {"R": R})
        if c_prune is None:
            c_prune = self.superadditivity_margin(data, model, seed=seed)
        slack = 2.0 * c_prune

        first_letters = [extended_cocycle.letter_distance(data, model, Letter(j, 1)) for j in range(data.size)]
        gain = min(first_letters)
        letter_d = _letter_distances(data, model, R + slack + max(0.0, slack - gain))
        setup = _BallSetup(data=data, model=model, R=R, slack=slack, gain=gain, k_cap=k_cap,
                           keep_words=keep_words, budget=node_budget, letter_d=letter_d)
        roots = [] if k_cap == 0 else _child_letters(setup, 0.0, None)

        if workers > 1 and len(roots) > 1:
            with ProcessPoolExecutor(max_workers=workers) as executor:
                parts = list(executor.map(_explore, [setup] * len(roots), roots))
        else:
            parts = [_explore(setup, root) for root in roots]

        distances = [0.0]
        lengths = [0]
        words: Optional[List[Word]] = [Word()] if keep_words else None
        nodes, frontier, exhausted = 0, 0, False
        for part in parts:
            distances.extend(part.distances)
            lengths.extend(part.lengths)
            if words is not None:
                words.extend(part.words)
            nodes += part.nodes
            frontier += part.frontier
            exhausted = exhausted or part.exhausted

        completeness = "partial" if exhausted else "heuristic-complete"
        if certify and not exhausted and slack >= self.cocycle_margin(data, model, seed=seed + 1):
            completeness = "exact"
        result = BallResult(R=R, count=len(distances), distances=np.asarray(distances),
                            words=words, lengths=np.asarray(lengths, dtype=int), nodes=nodes,
                            completeness=completeness, c_prune=c_prune)
        if exhausted or nodes > node_budget:
            raise BudgetExceededError(
                "Ball enumeration exceeded its node budget", partial=result, frontier=frontier,
                details={"R": R, "nodes": nodes, "budget": node_budget}
            )
        logger.info("Ball enumerated", extra={"R": R, "count": result.count, "nodes": nodes,
                                              "completeness": completeness, "workers": workers})
        return result

    def brute_force_ball(self, data: SchottkyData, model: DistanceModel, R: float, k_cap: int,
                         trunc_N: int, trunc_hyperbolic: Optional[int] = None) -> np.ndarray:
        """Sorted distances <= R over every word of length <= k_cap, no pruning"""
        found = []
        for k in range(k_cap + 1):
            for word in word_enumeration.enumerate_words(data, k, trunc_N, trunc_hyperbolic):
                d = extended_cocycle.word_distance(word, model, data)
                if d <= R:
                    found.append(d)
        return np.sort(np.asarray(found))


# Singleton instance
ball_enumeration = BallEnumeration()
