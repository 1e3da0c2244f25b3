"""
Error handling for the cusp counting lab
Provides one exception hierarchy and a single exit-code mapping for every engine
"""
import logging
import traceback
from typing import Any, Optional

logger = logging.getLogger(__name__)


# Process exit codes shared by every subcommand
EXIT_OK = 0
EXIT_UNEXPECTED = 1
EXIT_CONFIG = 2
EXIT_VALIDATION = 3
EXIT_NUMERIC = 4
EXIT_BUDGET = 5


class LabError(Exception):
    """Base exception for lab errors"""
    def __init__(
        self,
        message: str,
        exit_code: int = EXIT_UNEXPECTED,
        details: dict = None
    ):
        self.message = message
        self.exit_code = exit_code
        self.details = details or {}
        super().__init__(self.message)


class ConfigError(LabError):
    """Exception for unreadable or invalid run configuration"""
    def __init__(self, message: str, details: dict = None):
        super().__init__(message, EXIT_CONFIG, details)


class SchottkyValidationError(LabError):
    """Exception when generators or intervals fail the ping-pong check"""
    def __init__(self, message: str = "Schottky data failed validation", details: dict = None):
        super().__init__(message, EXIT_VALIDATION, details)


class NumericError(LabError):
    """Exception for root-finding, quadrature or iteration failures"""
    def __init__(self, message: str, details: dict = None):
        super().__init__(message, EXIT_NUMERIC, details)


class DomainError(NumericError):
    """Exception when an input lies outside an operation's domain"""


class ProfileConstructionError(NumericError):
    """Exception when no rung of the glue ladder passes the certificate"""


class BudgetExceededError(LabError):
    """Exception when an enumeration exhausts its node budget"""
    def __init__(
        self,
        message: str = "Enumeration node budget exceeded",
        partial: Optional[Any] = None,
        frontier: int = 0,
        details: dict = None
    ):
        self.partial = partial
        self.frontier = frontier
        merged = {"frontier": frontier}
        merged.update(details or {})
        super().__init__(message, EXIT_BUDGET, merged)


def handle_lab_error(exc: BaseException, command: str = "") -> int:
    """Log an error raised by a subcommand and return its exit code"""
    if isinstance(exc, LabError):
        logger.error(f"{exc.__class__.__name__}: {exc.message}", extra={
            "command": command,
            "exit_code": exc.exit_code,
            "details": exc.details
        })
        return exc.exit_code

    logger.error(
        f"Unexpected error: {str(exc)}",
        extra={
            "command": command,
            "traceback": traceback.format_exc()
        }
    )
    return EXIT_UNEXPECTED
