"""Data-parallel map over contiguous index ranges.

Work is split into contiguous ranges of item positions. Every item is
computed independently of how the ranges are cut, and results come back in
range order, so the output does not depend on the worker count. Workers are
forked processes that inherit the shared (read-only) state, which avoids
pickling the knowledge bases and block indices.
"""
from __future__ import annotations

import multiprocessing
import os
from typing import Any, Callable, TypeVar

T = TypeVar("T")

_SHARED: Any = None


def available_workers() -> int:
    try:
        return len(os.sched_getaffinity(0))
    except AttributeError:  # pragma: no cover - non-Linux
        return os.cpu_count() or 1


def split_ranges(n: int, parts: int) -> list[tuple[int, int]]:
    parts = max(1, min(parts, n))
    step, extra = divmod(n, parts)
    out, lo = [], 0
    for p in range(parts):
        hi = lo + step + (1 if p < extra else 0)
        out.append((lo, hi))
        lo = hi
    return out


def _run(job):
    fn, lo, hi = job
    return fn(_SHARED, lo, hi)


def map_ranges(fn: Callable[[Any, int, int], list[T]], n: int, shared: Any,
               workers: int = 1, chunks_per_worker: int = 4) -> list[T]:
    """Return ``fn(shared, 0, n)`` computed as concatenated per-range results.

    ``fn`` must be a module-level function returning one result per position
    of its ``[lo, hi)`` range.
    """
    global _SHARED
    if workers <= 1 or n < 2 or "fork" not in multiprocessing.get_all_start_methods():
        return fn(shared, 0, n)
    jobs = [(fn, lo, hi) for lo, hi in split_ranges(n, workers * chunks_per_worker)]
    _SHARED = shared
    try:
        ctx = multiprocessing.get_context("fork")
        with ctx.Pool(workers) as pool:
            parts = pool.map(_run, jobs, chunksize=1)
    finally:
        _SHARED = None
    out: list[T] = []
    for part in parts:
        out.extend(part)
    return out
