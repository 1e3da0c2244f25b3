"""Utility functions package"""
from .helpers import log_grid

__all__ = ["log_grid"]
