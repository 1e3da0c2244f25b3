"""
Contraction Profile
Per-level maxima of |gamma'(x)| over Gamma(k) and boundary samples outside F_{l_gamma}

LOGIC:
  - |gamma'(x)| = exp(-b(gamma, x)) in the visual metric seen from o
  - k = 0 gives the identity derivative 1
  - A geometric bound C r^k shows up as a negative slope of log max
    against k, fitted for k >= 1
"""
import logging
from typing import Iterable, Optional

import numpy as np

from calculation_engines.coding_calculations.words_calc import compose, word_enumeration
from calculation_engines.hyperbolic_calculations.mobius_calc import hyperbolic_geometry as geo
from calculation_engines.hyperbolic_calculations.schottky_calc import factor_index
from calculation_engines.interfaces.base_calculation import BaseCalculation
from calculation_engines.interfaces.calculation_input_models import SchottkyData
from calculation_engines.interfaces.calculation_output_models import ContractionProfile

logger = logging.getLogger(__name__)


class ContractionProfileCalculation(BaseCalculation):

    @property
    def calculation_name(self) -> str:
        return "contraction_profile"

    def calculate(self, data: SchottkyData, k_list: Iterable[int], sample_theta, trunc_N: int = 3,
                  trunc_hyperbolic: Optional[int] = None, **kwargs) -> ContractionProfile:
        """
        Largest boundary derivative per symbolic length.

        Args:
            data: Schottky data
            k_list: Word lengths
            sample_theta: Boundary sample in angle coordinates
            trunc_N: Largest |exponent| of parabolic letters
            trunc_hyperbolic: Largest |exponent| of hyperbolic letters

        Returns:
            ContractionProfile
        """
        sample = np.asarray(sample_theta, dtype=float)
        owner = factor_index(data, sample)
        ks, maxima = [], []
        for k in sorted(set(int(k) for k in k_list)):
            best = 1.0 if k == 0 else 0.0
            if k > 0:
                for word in word_enumeration.enumerate_words(data, k, trunc_N, trunc_hyperbolic):
                    x = sample[owner != word.last_factor]
                    if x.size:
                        g = compose(data, word)
                        best = max(best, float(np.max(geo.conformal_derivative(g, x, data.o))))
            ks.append(k)
            maxima.append(best)

        positive = [(k, m) for k, m in zip(ks, maxima) if k >= 1 and m > 0]
        slope = None
        if len(positive) >= 2:
            slope = float(np.polyfit([k for k, _ in positive], np.log([m for _, m in positive]), 1)[0])
        logger.debug("Contraction profile", extra={"k": ks, "slope": slope})
        return ContractionProfile(k=ks, max_derivative=maxima, slope=slope)


# Singleton instance
contraction_profile_calc = ContractionProfileCalculation()
