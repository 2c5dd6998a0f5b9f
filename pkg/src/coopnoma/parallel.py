"""Block-parallel execution with results independent of the worker count."""

from __future__ import annotations

import os
from concurrent.futures import ThreadPoolExecutor

from .channel import block_sizes


def resolve_threads(threads: int | None) -> int:
    if not threads:
        return os.cpu_count() or 1
    if threads < 0:
        raise ValueError(f"threads must be >= 0, got {threads}")
    return threads


def map_blocks(fn, trials: int, threads: int | None = 1) -> list:
    """``[fn(block, size) for each block]`` in block order.

    Callers reduce the list in order, so even floating-point sums come out
    bitwise identical for any ``threads``.
    """
    blocks = list(block_sizes(trials))
    workers = min(resolve_threads(threads), max(len(blocks), 1))
    if workers == 1:
        return [fn(b, s) for b, s in blocks]
    with ThreadPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(lambda bs: fn(*bs), blocks))
