"""Block-parallel map with schedule-independent results."""
from __future__ import annotations

import os
from concurrent.futures import ThreadPoolExecutor
from typing import Callable, Optional

BLOCK_SIZE = 8192


def resolve_threads(threads: Optional[int] = None) -> int:
    """``threads`` if given, else ``$FORGE_DEFAULT_THREADS``, else 1."""
    if threads is None:
        env = os.environ.get("FORGE_DEFAULT_THREADS")
        threads = int(env) if env else 1
    return max(1, int(threads))


def block_ranges(n: int, block: int = BLOCK_SIZE):
    """``[(index, start, stop), ...]`` covering ``range(n)``."""
    return [(i, s, min(s + block, n)) for i, s in enumerate(range(0, n, block))]


def map_blocks(fn: Callable, n: int, threads: Optional[int] = None, block: int = BLOCK_SIZE):
    """Evaluate ``fn(index, start, stop)`` for every block; results in block order.

    Every block owns its random stream, so the output does not depend on
    the number of worker threads.
    """
    ranges = block_ranges(n, block)
    workers = min(resolve_threads(threads), len(ranges)) or 1
    if workers == 1:
        return [fn(*r) for r in ranges]
    with ThreadPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(lambda r: fn(*r), ranges))
