import numpy as np


def log_grid(lo: float, hi: float, count: int) -> np.ndarray:
    """Log-spaced grid including both ends"""
    return np.exp(np.linspace(np.log(lo), np.log(hi), count))
