"""
Base Calculation Interface
Abstract base class for the numerical calculations of the lab
"""
from abc import ABC, abstractmethod
from typing import Any

from shared.middleware.error_handler import DomainError


class BaseCalculation(ABC):
    """
    Abstract base class for all calculation modules.

    A calculation is a stateless singleton: `calculate` takes keyword
    inputs and returns a float, a numpy array or a pydantic output model.
    Side effects are limited to logging and the distance-table cache.
    """

    @abstractmethod
    def calculate(self, **kwargs) -> Any:
        """
        Perform the calculation.

        Args:
            **kwargs: Calculation-specific inputs (profiles, Schottky data, grids)

        Returns:
            Scalar, array or output model
        """
        pass

    def validate_inputs(self, **kwargs) -> bool:
        """Cheap precondition check run by __call__; True when the inputs are usable"""
        return True

    @property
    @abstractmethod
    def calculation_name(self) -> str:
        """Unique identifier, used in logs and error details"""
        pass

    @property
    def description(self) -> str:
        return f"{self.calculation_name} calculation"

    def __call__(self, **kwargs) -> Any:
        """
        Validate, then calculate.

        Raises:
            DomainError: validate_inputs rejected the inputs
        """
        if not self.validate_inputs(**kwargs):
            raise DomainError(f"Invalid inputs for {self.calculation_name}",
                              {"calculation": self.calculation_name, "inputs": sorted(kwargs)})
        return self.calculate(**kwargs)
