"""
Test script for Data Access Layer
Validates the on-disk cache used for distance tables

Run: python data_access/test_data_access.py
"""

import sys
import tempfile
from pathlib import Path
sys.path.insert(0, str(Path(__file__).parent.parent))

import numpy as np

from data_access import CacheManager


def print_section(title):
    print("\n" + "=" * 70)
    print(f"  {title}")
    print("=" * 70)


def test_cache_round_trip():
    """Store, detect and reload a table"""
    print_section("TEST 1: CacheManager round trip")

    with tempfile.TemporaryDirectory() as folder:
        cache = CacheManager(cache_dir=folder, enabled=True)
        print(f"✓ CacheManager initialized in {cache.cache_dir}")

        table = {"log_n": np.linspace(0.0, 5.0, 6), "d": np.arange(6.0)}
        key = cache.generate_table_key("distance_table", 1.5, "constant", 0.0, 400, 7.0)
        assert key == cache.generate_table_key("distance_table", 1.5, "constant", 0.0, 400, 7.0)
        assert key != cache.generate_table_key("distance_table", 1.5, "constant", 0.5, 400, 7.0)
        print(f"✓ Generated cache key: {key[:16]}...")

        assert not cache.is_cached(key)
        cache.cache_result(key, table)
        assert cache.is_cached(key)
        loaded = cache.load_cached_result(key)
        assert np.array_equal(loaded["d"], table["d"])
        print("✓ Table cached and reloaded")

        info = cache.get_cache_info()
        assert info["tables_count"] == 1 and info["results_count"] == 0
        print(f"✓ Cache statistics: {info['tables_count']} table(s), {info['total_size_mb']:.4f} MB")

        cache.clear_cache(category="tables")
        assert not cache.is_cached(key)
        print("✓ Test cache cleared")


def test_get_or_compute():
    """The producer runs once per key"""
    print_section("TEST 2: get_or_compute")

    calls = []

    def producer():
        calls.append(1)
        return [1.0, 2.0, 3.0]

    with tempfile.TemporaryDirectory() as folder:
        cache = CacheManager(cache_dir=folder, enabled=True)
        first = cache.get_or_compute("k", producer)
        second = cache.get_or_compute("k", producer)
        assert first == second == [1.0, 2.0, 3.0]
        assert len(calls) == 1
        print("✓ Second lookup served from disk")

        off = CacheManager(cache_dir=folder, enabled=False)
        off.get_or_compute("k", producer)
        assert len(calls) == 2
        assert not off.is_cached("k")
        print("✓ Disabled cache always recomputes")


def test_unknown_category():
    with tempfile.TemporaryDirectory() as folder:
        cache = CacheManager(cache_dir=folder, enabled=True)
        try:
            cache.cache_result("k", 1, category="plots")
        except ValueError:
            print("✓ Unknown category rejected")
        else:
            raise AssertionError("unknown category accepted")


def run_all_tests():
    """Run all data access tests"""
    print("\n" + "=" * 70)
    print("  DATA ACCESS LAYER TEST SUITE")
    print("=" * 70)

    try:
        test_cache_round_trip()
        test_get_or_compute()
        test_unknown_category()

        print("\n" + "=" * 70)
        print("  ✓ ALL TESTS PASSED")
        print("=" * 70 + "\n")
        return True
    except Exception as e:
        print(f"\n✗ TEST FAILED: {e}")
        import traceback
        traceback.print_exc()
        return False


if __name__ == "__main__":
    success = run_all_tests()
    sys.exit(0 if success else 1)
