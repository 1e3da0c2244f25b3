"""
Cache Manager
Manages local caching of cusp distance tables and other expensive results
"""

import hashlib
import logging
import pickle
from datetime import datetime
from pathlib import Path
from typing import Any, Callable, Optional

from shared.config.settings import settings

logger = logging.getLogger(__name__)

CATEGORIES = ('tables', 'results')


class CacheManager:
    """
    Manages on-disk pickle caching of computed results.

    Distance tables are the main client: they cost thousands of adaptive
    quadratures and depend only on the profile parameters, the cusp height
    and the grid specification.
    """

    def __init__(self, cache_dir: Optional[str] = None, enabled: Optional[bool] = None):
        """
        Initialize cache manager.

        Args:
            cache_dir: Directory for cache. If None, uses settings.cache_dir
            enabled: Turn caching off entirely. If None, uses settings.cache_enabled
        """
        self.cache_dir = Path(cache_dir or settings.cache_dir)
        self.enabled = settings.cache_enabled if enabled is None else enabled

        if self.enabled:
            for category in CATEGORIES:
                (self.cache_dir / category).mkdir(parents=True, exist_ok=True)

    def _generate_key(self, *args) -> str:
        """
        Generate a unique cache key from arguments.

        Args:
            *args: Arguments to hash (their repr must be deterministic)

        Returns:
            MD5 hash string
        """
        key_string = '_'.join(repr(arg) for arg in args)
        return hashlib.md5(key_string.encode()).hexdigest()

    def _path(self, key: str, category: str) -> Path:
        if category not in CATEGORIES:
            raise ValueError(f"Unknown cache category '{category}'")
        return self.cache_dir / category / f"{key}.pkl"

    def cache_result(self, key: str, data: Any, category: str = 'tables') -> None:
        """
        Cache a result.

        Args:
            key: Unique identifier for the data
            data: Picklable data
            category: Cache category ('tables' or 'results')
        """
        if not self.enabled:
            return
        file_path = self._path(key, category)

        try:
            with open(file_path, 'wb') as f:
                pickle.dump({
                    'data': data,
                    'timestamp': datetime.now().isoformat(),
                    'key': key
                }, f)
        except OSError as e:
            logger.warning("Failed to cache data", extra={"key": key, "error": str(e)})

    def load_cached_result(self, key: str, category: str = 'tables') -> Optional[Any]:
        """
        Load a cached result.

        Returns:
            Cached data or None if not found or unreadable
        """
        if not self.enabled:
            return None
        file_path = self._path(key, category)
        if not file_path.exists():
            return None

        try:
            with open(file_path, 'rb') as f:
                return pickle.load(f)['data']
        except (OSError, pickle.UnpicklingError, EOFError, KeyError) as e:
            logger.warning("Failed to load cached data", extra={"key": key, "error": str(e)})
            return None

    def get_or_compute(self, key: str, producer: Callable[[], Any], category: str = 'tables') -> Any:
        """Return the cached value for key, computing and storing it on a miss"""
        cached = self.load_cached_result(key, category)
        if cached is not None:
            logger.debug("Cache hit", extra={"key": key, "category": category})
            return cached
        logger.info("Cache miss, computing", extra={"key": key, "category": category})
        data = producer()
        self.cache_result(key, data, category)
        return data

    def is_cached(self, key: str, category: str = 'tables') -> bool:
        return self.enabled and self._path(key, category).exists()

    def clear_cache(self, category: Optional[str] = None) -> None:
        """
        Clear cache.

        Args:
            category: Specific category to clear, or None for all
        """
        if not self.enabled:
            return
        for name in CATEGORIES:
            if category in (name, None):
                for file in (self.cache_dir / name).glob('*.pkl'):
                    file.unlink()

    def get_cache_info(self) -> dict:
        """
        Get information about cached data.

        Returns:
            Dict with cache statistics
        """
        info = {'cache_dir': str(self.cache_dir), 'enabled': self.enabled}
        for name in CATEGORIES:
            folder = self.cache_dir / name
            info[f'{name}_count'] = len(list(folder.glob('*.pkl'))) if folder.exists() else 0
        info['total_size_mb'] = sum(
            f.stat().st_size for f in self.cache_dir.rglob('*.pkl')
        ) / (1024 * 1024) if self.cache_dir.exists() else 0.0
        return info

    def generate_table_key(self, table_type: str, *args) -> str:
        """
        Generate cache key for a computed table.

        Args:
            table_type: Kind of table
            *args: Parameters the table depends on

        Returns:
            Cache key string
        """
        return self._generate_key(table_type, *args)
