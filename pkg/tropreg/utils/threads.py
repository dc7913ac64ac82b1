import os
from concurrent.futures import ThreadPoolExecutor
from typing import Callable, Iterable, List, Optional, TypeVar

THREADS_KEY = "TROPREG_THREADS"

T = TypeVar("T")
R = TypeVar("R")


def resolve_threads(threads: Optional[int] = None) -> int:
    """
    Number of worker threads to use.
    ``None`` falls back to the TROPREG_THREADS environment variable, then to 1.
    Set to 0 for the number of CPUs (capped at 8).
    """
    if threads is None:
        env_value = os.environ.get(THREADS_KEY, "").strip()
        if not env_value:
            return 1
        try:
            threads = int(env_value)
        except ValueError:
            raise ValueError(f"{THREADS_KEY} must be an integer, got {env_value!r}")
    if threads < 0:
        raise ValueError(f"Number of threads must be >= 0, got {threads}")
    if threads == 0:
        threads = min(8, os.cpu_count() or 1)
    return threads


def parallel_map(fn: Callable[[T], R], items: Iterable[T], threads: int = 1) -> List[R]:
    """Apply ``fn`` to every item; results keep the order of ``items``."""
    items = list(items)
    if threads <= 1 or len(items) <= 1:
        return [fn(item) for item in items]
    with ThreadPoolExecutor(max_workers=min(threads, len(items))) as executor:
        return list(executor.map(fn, items))
