"""
Admissible Words
Truncated alphabet, enumeration of Gamma(k) and word composition

LOGIC:
  - Alphabet: letters g_j^n with 1 <= |n| <= N_j, N_j = trunc_N for
    parabolic factors and trunc_hyperbolic (default trunc_N) otherwise
  - A word a_1 ... a_k is admissible when consecutive letters belong to
    different factors; a_k acts first on boundary points
  - |Gamma(k)| follows from c_j = 2 N_j by the recursion
    v_j <- c_j (sum(v) - v_j), started from v = c

ROLE:
  Symbolic layer shared by the cocycle, ball enumeration, the transfer
  operator and the counting sums.
"""
from typing import Dict, Iterator, List, Optional, Sequence, Tuple

import numpy as np

from calculation_engines.interfaces.base_calculation import BaseCalculation
from calculation_engines.interfaces.calculation_input_models import (
    ExtendedPoint, Isometry, Letter, SchottkyData, Word,
)
from shared.middleware.error_handler import DomainError


def letter_caps(data: SchottkyData, trunc_N: int, trunc_hyperbolic: Optional[int] = None) -> Tuple[int, ...]:
    """Largest |exponent| per factor"""
    hyp = trunc_N if trunc_hyperbolic is None else trunc_hyperbolic
    return tuple(trunc_N if f.kind == "parabolic" else hyp for f in data.factors)


def alphabet(data: SchottkyData, trunc_N: int, trunc_hyperbolic: Optional[int] = None) -> List[Letter]:
    """Truncated alphabet in letter order"""
    if trunc_N < 1 or (trunc_hyperbolic is not None and trunc_hyperbolic < 1):
        raise DomainError("Truncation must be at least 1", {"trunc_N": trunc_N})
    letters = []
    for j, cap in enumerate(letter_caps(data, trunc_N, trunc_hyperbolic)):
        letters.extend(Letter(j, n) for n in range(-cap, cap + 1) if n != 0)
    return letters


def letter_isometry(data: SchottkyData, letter: Letter) -> Isometry:
    return data.factors[letter.factor].element(letter.exponent)


def compose(data: SchottkyData, word: Word, cache: Optional[Dict[Letter, Isometry]] = None) -> Isometry:
    """Isometry a_1 ... a_k, multiplied from the right end"""
    g = Isometry.identity()
    for letter in reversed(word.letters):
        if cache is not None:
            if letter not in cache:
                cache[letter] = letter_isometry(data, letter)
            a = cache[letter]
        else:
            a = letter_isometry(data, letter)
        g = a @ g
    return g


def orbit_point(data: SchottkyData, word: Word, g: Optional[Isometry] = None) -> ExtendedPoint:
    """gamma x0 as a point of the extended limit set"""
    g = compose(data, word) if g is None else g
    return ExtendedPoint(theta=float(g.apply_theta(data.x0.theta)), g=g, factor=word.first_factor)


class WordEnumeration(BaseCalculation):
    """Enumerate and sample admissible words"""

    @property
    def calculation_name(self) -> str:
        return "enumerate_words"

    def validate_inputs(self, data: SchottkyData = None, k: int = None, trunc_N: int = None, **kwargs) -> bool:
        return data is not None and k is not None and k >= 0 and trunc_N is not None and trunc_N >= 1

    def calculate(self, data: SchottkyData, k: int, trunc_N: int, **kwargs) -> Iterator[Word]:
        return self.enumerate_words(data, k, trunc_N, kwargs.get("trunc_hyperbolic"))

    def enumerate_words(self, data: SchottkyData, k: int, trunc_N: int,
                        trunc_hyperbolic: Optional[int] = None) -> Iterator[Word]:
        """
        All admissible words of length k, each once, in lexicographic order.

        Args:
            data: Schottky data
            k: Symbolic length
            trunc_N: Largest |exponent| of parabolic letters
            trunc_hyperbolic: Largest |exponent| of hyperbolic letters

        Yields:
            Word
        """
        if k < 0:
            raise DomainError("Word length must be nonnegative", {"k": k})
        letters = alphabet(data, trunc_N, trunc_hyperbolic)
        if k == 0:
            yield Word()
            return

        def extend(prefix: Tuple[Letter, ...]) -> Iterator[Word]:
            if len(prefix) == k:
                yield Word(prefix)
                return
            last = prefix[-1].factor if prefix else None
            for letter in letters:
                if letter.factor != last:
                    yield from extend(prefix + (letter,))

        yield from extend(())

    def word_count(self, data: SchottkyData, k: int, trunc_N: int,
                   trunc_hyperbolic: Optional[int] = None) -> int:
        """|Gamma(k)| for the truncated alphabet"""
        if k == 0:
            return 1
        c = np.array([2 * cap for cap in letter_caps(data, trunc_N, trunc_hyperbolic)], dtype=object)
        v = c.copy()
        for _ in range(k - 1):
            v = c * (sum(v) - v)
        return int(sum(v))

    def random_word(self, data: SchottkyData, rng: np.random.Generator, k: int,
                    caps: Sequence[int], first_factor_not: Optional[int] = None) -> Word:
        """Uniform admissible word of length k with |exponent| <= caps[j]"""
        letters: List[Letter] = []
        previous = first_factor_not
        for _ in range(k):
            choices = [j for j in range(data.size) if j != previous]
            j = int(rng.choice(choices))
            n = int(rng.integers(1, caps[j] + 1)) * (1 if rng.random() < 0.5 else -1)
            letters.append(Letter(j, n))
            previous = j
        return Word(tuple(letters))


# Singleton instance
word_enumeration = WordEnumeration()
