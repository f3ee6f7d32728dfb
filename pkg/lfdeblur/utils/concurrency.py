import asyncio
from typing import Callable, List, Sequence, TypeVar

from lfdeblur.core.logger import get_logger

logger = get_logger(__name__)

T = TypeVar("T")
R = TypeVar("R")


async def gather_bounded(fn: Callable[[T], R], items: Sequence[T], jobs: int = 1) -> List[R]:
    """
    Run a blocking function over items in worker threads, at most `jobs` at a time.

    Args:
        fn: Blocking callable applied to each item
        items: Work items
        jobs: Maximum number of concurrent workers

    Returns:
        Results in the order of `items`, independent of completion order
    """
    if jobs < 1:
        raise ValueError(f"jobs must be >= 1, got {jobs}")
    semaphore = asyncio.Semaphore(jobs)

    async def run_one(index: int, item: T) -> R:
        async with semaphore:
            logger.debug(f"Starting work item {index + 1}/{len(items)}")
            return await asyncio.to_thread(fn, item)

    return list(await asyncio.gather(*(run_one(i, item) for i, item in enumerate(items))))
