"""
Extended Cocycle and Word Distances
b~ on boundary points and orbit points g x0, under two distance models

LOGIC:
  - EXACT_H2:
      b~(gamma, x) = B_x(gamma^{-1} o, o)                  x a boundary point
      b~(gamma, g x0) = d(gamma^{-1} o, g o) - d(o, g o)   x an orbit point
      d(o, gamma o) from the composed Mobius matrix
  - MODIFIED_CUSP: a parabolic letter p^n with fixed point x_P and
    horocyclic translation tau_eff gets
      b~(p^n, y) = d_mod(|n| tau_eff) - 2 (x_P | y)_o
    where d_mod comes from the cusp distance table and (x_P | y)_o is the
    hyperbolic Gromov product (with g o in place of y for orbit points);
    hyperbolic letters keep the exact formula
  - Longer words are telescoped letter by letter:
      b~(a_1 ... a_k, x) = sum_l b~(a_l, a_{l+1} ... a_k x)
    and d(o, gamma o) = b~(gamma, x0) in both models

ROLE:
  Distances of orbit points for counting, weights of the transfer
  operator.
"""
from typing import Optional

from calculation_engines.coding_calculations.words_calc import compose, letter_isometry
from calculation_engines.hyperbolic_calculations.mobius_calc import hyperbolic_geometry as geo
from calculation_engines.interfaces.base_calculation import BaseCalculation
from calculation_engines.interfaces.calculation_input_models import (
    DistanceModel, ExtendedPoint, Isometry, Letter, SchottkyData, Word,
)
from shared.middleware.error_handler import DomainError

EXACT = DistanceModel("EXACT_H2")


def push(letter: Letter, a: Isometry, x: ExtendedPoint) -> ExtendedPoint:
    """a x for a letter a; orbit points stay orbit points"""
    theta = float(a.apply_theta(x.theta))
    if x.is_orbit:
        return ExtendedPoint(theta=theta, g=a @ x.g, factor=letter.factor)
    return ExtendedPoint(theta=theta)


class ExtendedCocycle(BaseCalculation):
    """Letter and word cocycles, word distances"""

    @property
    def calculation_name(self) -> str:
        return "word_distance"

    @property
    def description(self) -> str:
        return "Distance d(o, gamma o) of a word under EXACT_H2 or MODIFIED_CUSP"

    def calculate(self, word: Word, model: DistanceModel, data: SchottkyData, **kwargs) -> float:
        return self.word_distance(word, model, data)

    # ------------------------------------------------------------------
    # Single letters
    # ------------------------------------------------------------------

    def tau_eff(self, data: SchottkyData, factor: int) -> float:
        return geo.horocyclic_translation(data.factors[factor].generator, data.o)

    def uses_table(self, data: SchottkyData, model: DistanceModel, letter: Letter) -> bool:
        return model.modified and data.factors[letter.factor].kind == "parabolic"

    def letter_distance(self, data: SchottkyData, model: DistanceModel, letter: Letter,
                        a: Optional[Isometry] = None) -> float:
        """d(o, a o) in the model"""
        if self.uses_table(data, model, letter):
            return float(model.table.distance(abs(letter.exponent) * self.tau_eff(data, letter.factor)))
        a = letter_isometry(data, letter) if a is None else a
        return geo.dist(data.o, a.apply(data.o))

    def boundary_letter_cocycle(self, data: SchottkyData, model: DistanceModel, letter: Letter,
                                theta, a: Optional[Isometry] = None):
        """b~(a, x) at boundary angles, vectorized"""
        a = letter_isometry(data, letter) if a is None else a
        if self.uses_table(data, model, letter):
            x_P = data.factors[letter.factor].fixed_points[0]
            return self.letter_distance(data, model, letter) - 2.0 * geo.gromov(x_P, theta, data.o)
        return geo.cocycle_b(a, theta, data.o)

    def orbit_letter_cocycle(self, data: SchottkyData, model: DistanceModel, letter: Letter,
                             z, a: Optional[Isometry] = None):
        """b~(a, g x0) from the interior points z = g o, vectorized"""
        a = letter_isometry(data, letter) if a is None else a
        if self.uses_table(data, model, letter):
            x_P = data.factors[letter.factor].fixed_points[0]
            return self.letter_distance(data, model, letter) - 2.0 * geo.gromov_interior(x_P, z, data.o)
        return geo.dist(a.inverse().apply(data.o), z) - geo.dist(data.o, z)

    def letter_cocycle(self, data: SchottkyData, model: DistanceModel, letter: Letter,
                       x: ExtendedPoint, a: Optional[Isometry] = None) -> float:
        """b~(a, x) for a single letter"""
        if not x.is_orbit:
            return float(self.boundary_letter_cocycle(data, model, letter, x.theta, a))
        return float(self.orbit_letter_cocycle(data, model, letter, x.g.apply(data.o), a))

    # ------------------------------------------------------------------
    # Words
    # ------------------------------------------------------------------

    def telescoped(self, data: SchottkyData, model: DistanceModel, word: Word, x: ExtendedPoint) -> float:
        """sum_l b~(a_l, a_{l+1} ... a_k x)"""
        total = 0.0
        for letter in reversed(word.letters):
            a = letter_isometry(data, letter)
            total = self.letter_cocycle(data, model, letter, x, a) + total
            x = push(letter, a, x)
        return total

    def cocycle(self, data: SchottkyData, model: DistanceModel, word: Word, x: ExtendedPoint) -> float:
        """b~(gamma, x); closed form under EXACT_H2, telescoped otherwise"""
        if model.modified:
            return self.telescoped(data, model, word, x)
        g = compose(data, word)
        if x.is_orbit:
            z = x.g.apply(data.o)
            return geo.dist(g.inverse().apply(data.o), z) - geo.dist(data.o, z)
        return float(geo.cocycle_b(g, x.theta, data.o))

    def word_distance(self, word: Word, model: DistanceModel, data: SchottkyData) -> float:
        """
        d(o, gamma o) of an admissible word.

        Args:
            word: Admissible word
            model: Distance model
            data: Schottky data

        Returns:
            Distance (0 for the identity)
        """
        if not word.is_admissible():
            raise DomainError("Word is not admissible", {"word": word.label(data.names)})
        if not word.letters:
            return 0.0
        if model.modified:
            return self.telescoped(data, model, word, ExtendedPoint.base(data))
        g = compose(data, word)
        return geo.dist(data.o, g.apply(data.o))

    def telescoping_residual(self, data: SchottkyData, word: Word) -> float:
        """|d(o, gamma o) - sum of letter cocycles| under EXACT_H2"""
        exact = self.word_distance(word, EXACT, data)
        return abs(exact - self.telescoped(data, EXACT, word, ExtendedPoint.base(data)))


# Singleton instance
extended_cocycle = ExtendedCocycle()
