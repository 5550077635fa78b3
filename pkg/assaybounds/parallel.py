"""Deterministic fan-out helpers.

Results always come back in input order, so any reduction over them is
independent of the number of worker threads.
"""

from collections.abc import Callable, Iterable
from concurrent.futures import ThreadPoolExecutor
from typing import TypeVar

import numpy as np

T = TypeVar("T")
R = TypeVar("R")


def thread_map(fn: Callable[[T], R], items: Iterable[T], threads: int = 1) -> list[R]:
    items = list(items)
    if threads <= 1 or len(items) <= 1:
        return [fn(item) for item in items]
    with ThreadPoolExecutor(max_workers=min(threads, len(items))) as pool:
        return list(pool.map(fn, items))


def stream(seed: int, *stream_id: int) -> np.random.Generator:
    """Counter-based generator keyed by (seed, stream_id...)."""
    return np.random.Generator(np.random.Philox(np.random.SeedSequence([seed, *stream_id])))
