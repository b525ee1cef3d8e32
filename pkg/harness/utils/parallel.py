"""
Parallel Utility Module

Thread-pool helpers shared by the numeric stages. Work is cut into contiguous
chunks whose results are returned in chunk order, so a stage's output never
depends on how many threads ran it.
"""
import concurrent.futures
from typing import Callable, List, Tuple, TypeVar

from harness.utils.logging_config import get_logger

logger = get_logger(__name__)

ChunkResult = TypeVar('ChunkResult')


def chunk_bounds(n_items: int, n_chunks: int) -> List[Tuple[int, int]]:
    """
    Split ``range(n_items)`` into at most ``n_chunks`` contiguous half-open slices.

    Args:
        n_items: number of items to split
        n_chunks: requested number of chunks (values < 1 are treated as 1)

    Returns:
        List of (start, stop) pairs covering 0..n_items in order
    """
    n_chunks = max(1, min(n_chunks, n_items)) if n_items > 0 else 1
    base, extra = divmod(n_items, n_chunks)
    bounds = []
    start = 0
    for index in range(n_chunks):
        stop = start + base + (1 if index < extra else 0)
        bounds.append((start, stop))
        start = stop
    return bounds


def map_chunks(
    func: Callable[[int, int], ChunkResult],
    n_items: int,
    threads: int = 1,
    chunks_per_thread: int = 4,
) -> List[ChunkResult]:
    """
    Apply ``func(start, stop)`` to contiguous chunks of ``range(n_items)``.

    With a single thread the chunks run inline; otherwise they are submitted to a
    ThreadPoolExecutor. Results always come back in chunk order.

    Args:
        func: callable receiving the half-open chunk bounds
        n_items: number of items to cover
        threads: number of worker threads
        chunks_per_thread: chunks per worker, for load balancing

    Returns:
        List of per-chunk results, ordered by chunk start
    """
    if threads <= 1:
        return [func(start, stop) for start, stop in chunk_bounds(n_items, 1)]

    bounds = chunk_bounds(n_items, threads * chunks_per_thread)
    logger.debug(f"Running {len(bounds)} chunks over {n_items} items on {threads} threads")
    with concurrent.futures.ThreadPoolExecutor(max_workers=threads) as executor:
        futures = [executor.submit(func, start, stop) for start, stop in bounds]
        return [future.result() for future in futures]
