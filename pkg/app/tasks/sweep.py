import asyncio
import logging
import typing as t

logger = logging.getLogger(__name__)

T = t.TypeVar("T")
R = t.TypeVar("R")


async def gather_rows(fn: t.Callable[[int, T], R], items: t.Sequence[T], workers: int) -> list[R]:
    """Run ``fn(index, item)`` on worker threads, at most ``workers`` at a time.

    Results come back in input order regardless of completion order.
    """
    if workers < 1:
        raise ValueError("workers must be >= 1")
    gate = asyncio.Semaphore(workers)

    async def one(index: int, item: T) -> R:
        async with gate:
            # blocking numpy work stays off the event loop
            return await asyncio.to_thread(fn, index, item)

    logger.info("sweep: %d rows on %d workers", len(items), workers)
    return list(await asyncio.gather(*(one(i, item) for i, item in enumerate(items))))


def run_rows(fn: t.Callable[[int, T], R], items: t.Sequence[T], workers: int) -> list[R]:
    """Blocking entry point for the CLI; the API awaits ``gather_rows`` directly."""
    return asyncio.run(gather_rows(fn, items, workers))
