"""
Data Access Layer
Handles on-disk caching of computed tables
"""

from .cache_manager import CacheManager

__all__ = [
    'CacheManager'
]
