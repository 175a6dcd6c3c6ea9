from __future__ import annotations

import asyncio
import logging
from collections.abc import Callable, Iterable
from concurrent.futures import ThreadPoolExecutor
from typing import TypeVar

import psutil

logger = logging.getLogger(__name__)

T = TypeVar("T")
R = TypeVar("R")


def default_thread_count() -> int:
    return psutil.cpu_count(logical=False) or psutil.cpu_count() or 1


async def _gather(fn: Callable[[T], R], items: list[T], threads: int) -> list[R]:
    gate = asyncio.Semaphore(threads)

    async def run(item: T) -> R:
        async with gate:
            return await asyncio.to_thread(fn, item)

    # gather keeps input order, so reductions over the results are ordered
    return list(await asyncio.gather(*(run(item) for item in items)))


def parallel_map(
    fn: Callable[[T], R], items: Iterable[T], *, threads: int | None = None
) -> list[R]:
    """Apply `fn` to every item, in worker threads when more than one is allowed.

    Results come back in input order. ``threads=1`` runs in the calling thread.
    Inside a running event loop the work goes to a thread pool instead.
    """
    work = list(items)
    n = default_thread_count() if threads is None else max(1, threads)
    if n == 1 or len(work) <= 1:
        return [fn(item) for item in work]
    n = min(n, len(work))
    logger.debug("mapping %d items over %d threads", len(work), n)
    try:
        asyncio.get_running_loop()
    except RuntimeError:
        return asyncio.run(_gather(fn, work, n))
    with ThreadPoolExecutor(max_workers=n) as pool:
        return list(pool.map(fn, work))


def chunked(n: int, parts: int) -> list[slice]:
    parts = max(1, min(parts, n))
    bounds = [round(i * n / parts) for i in range(parts + 1)]
    return [slice(lo, hi) for lo, hi in zip(bounds[:-1], bounds[1:]) if hi > lo]
