"""
Ordered parallel map.
Per-angle and per-row work is fanned out over a thread pool capped by
TOMOKIT_THREADS; results always come back in input order so reductions done
by the caller are deterministic.
"""
from concurrent.futures import ThreadPoolExecutor
from typing import Callable, Iterable, List, Optional, TypeVar

from app.config.settings import TOMOKIT_THREADS

T = TypeVar("T")
R = TypeVar("R")


def ordered_map(fn: Callable[[T], R], items: Iterable[T], max_workers: Optional[int] = None) -> List[R]:
    """
    Apply fn to every item, possibly concurrently.

    Args:
        fn: Pure function of one item
        items: Work items
        max_workers: Optional cap below TOMOKIT_THREADS

    Returns:
        Results in the order of items
    """
    items = list(items)
    workers = min(TOMOKIT_THREADS, max_workers or TOMOKIT_THREADS, len(items))
    if workers <= 1:
        return [fn(item) for item in items]
    with ThreadPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(fn, items))


def ordered_sum(parts: List):
    """Left-to-right sum; keeps floating-point reductions independent of scheduling."""
    total = parts[0]
    for part in parts[1:]:
        total = total + part
    return total
