"""Channel-level worker pool honouring the PREICTAL_THREADS environment variable."""
from __future__ import annotations

import os
from concurrent.futures import ThreadPoolExecutor
from typing import Callable, Iterable, Sequence, TypeVar

T = TypeVar("T")
R = TypeVar("R")


def thread_count() -> int:
    """Worker cap from PREICTAL_THREADS (0 or unset = auto)."""
    raw = os.environ.get("PREICTAL_THREADS", "0")
    try:
        n = int(raw)
    except ValueError:
        n = 0
    if n <= 0:
        n = os.cpu_count() or 1
    return max(1, n)


def map_channels(fn: Callable[[T], R], items: Iterable[T]) -> list[R]:
    """Order-preserving map; runs in a thread pool when more than one worker
    is allowed. All mapped functions must be pure so concurrency never
    changes results."""
    items = list(items)
    workers = min(thread_count(), len(items)) if items else 1
    if workers <= 1:
        return [fn(x) for x in items]
    with ThreadPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(fn, items))
