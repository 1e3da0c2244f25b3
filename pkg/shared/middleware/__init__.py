"""Middleware package"""
from .error_handler import (
    LabError,
    ConfigError,
    SchottkyValidationError,
    NumericError,
    DomainError,
    ProfileConstructionError,
    BudgetExceededError,
    handle_lab_error,
    EXIT_OK,
    EXIT_UNEXPECTED,
    EXIT_CONFIG,
    EXIT_VALIDATION,
    EXIT_NUMERIC,
    EXIT_BUDGET,
)

__all__ = [
    "LabError",
    "ConfigError",
    "SchottkyValidationError",
    "NumericError",
    "DomainError",
    "ProfileConstructionError",
    "BudgetExceededError",
    "handle_lab_error",
    "EXIT_OK",
    "EXIT_UNEXPECTED",
    "EXIT_CONFIG",
    "EXIT_VALIDATION",
    "EXIT_NUMERIC",
    "EXIT_BUDGET",
]
