"""Worker pool shared by the distance, confinement, search, sampling and decoding drivers."""
import logging
import os
from concurrent.futures import ProcessPoolExecutor

logger = logging.getLogger(__name__)


def available_threads():
    try:
        return len(os.sched_getaffinity(0))
    except AttributeError:
        return os.cpu_count() or 1


def resolve_threads(threads=None):
    if threads is None:
        return available_threads()
    threads = int(threads)
    if threads < 1:
        raise ValueError(f"threads must be at least 1, got {threads}")
    return threads


def chunked(items, n_chunks):
    """Split a sequence into at most ``n_chunks`` contiguous, nonempty chunks."""
    items = list(items)
    n_chunks = max(1, min(n_chunks, len(items)))
    size, extra = divmod(len(items), n_chunks)
    chunks, start = [], 0
    for i in range(n_chunks):
        stop = start + size + (i < extra)
        chunks.append(items[start:stop])
        start = stop
    return [chunk for chunk in chunks if chunk]


def run_parallel(func, items, threads=None):
    """``[func(item) for item in items]``, spread over a process pool when threads > 1."""
    items = list(items)
    threads = resolve_threads(threads)
    if threads <= 1 or len(items) <= 1:
        return [func(item) for item in items]
    logger.debug(f"run_parallel: {len(items)} tasks on {min(threads, len(items))} workers")
    with ProcessPoolExecutor(max_workers=min(threads, len(items))) as pool:
        return list(pool.map(func, items))
