"""Order-preserving worker pool used by the sweeps."""

from __future__ import annotations

from concurrent.futures import ProcessPoolExecutor
from typing import Callable, Sequence, TypeVar

A = TypeVar("A")
B = TypeVar("B")


def parallel_map(func: Callable[[A], B], items: Sequence[A], jobs: int = 1) -> list[B]:
    """``[func(x) for x in items]``, optionally across ``jobs`` processes.

    Results come back in input order whatever the worker count, so merged
    output is deterministic.
    """
    if jobs <= 1 or len(items) <= 1:
        return [func(x) for x in items]
    with ProcessPoolExecutor(max_workers=jobs) as pool:
        return list(pool.map(func, items))
