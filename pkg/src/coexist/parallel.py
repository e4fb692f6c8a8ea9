"""Deterministic worker-pool helper.

The degree comes from the COEXIST_THREADS environment variable (default 1;
results never depend on it: outputs are collected in input order and all
reductions downstream are order-independent).
"""

from __future__ import annotations

import os
from concurrent.futures import ThreadPoolExecutor
from typing import Callable, Iterable, Sequence, TypeVar

T = TypeVar("T")
R = TypeVar("R")


def worker_count() -> int:
    raw = os.environ.get("COEXIST_THREADS", "1")
    try:
        n = int(raw)
    except ValueError:
        raise ValueError(f"COEXIST_THREADS must be an integer, got {raw!r}") from None
    return max(1, n)


def pmap(fn: Callable[[T], R], items: Iterable[T]) -> list[R]:
    """Map preserving input order; uses a thread pool when COEXIST_THREADS > 1."""
    seq: Sequence[T] = list(items)
    n = worker_count()
    if n <= 1 or len(seq) <= 1:
        return [fn(x) for x in seq]
    with ThreadPoolExecutor(max_workers=n) as pool:
        return list(pool.map(fn, seq))
