"""Ordered fan-out of independent sample tasks over worker processes."""

import logging
from collections.abc import Callable, Iterable, Iterator
from concurrent.futures import ProcessPoolExecutor
from typing import TypeVar

from ..models.settings import get_settings

logger = logging.getLogger(__name__)

T = TypeVar("T")
R = TypeVar("R")


def map_ordered(
    fn: Callable[[T], R], tasks: Iterable[T], workers: int | None = None, chunksize: int = 1
) -> Iterator[R]:
    """Apply ``fn`` to every task, yielding results in task order.

    ``fn`` must be a module-level callable. With one worker the tasks run inline, so the
    results are the same for any worker count.
    """
    n_workers = workers if workers is not None else get_settings().workers
    if n_workers <= 1:
        for task in tasks:
            yield fn(task)
        return

    logger.debug(f"Dispatching tasks to {n_workers} worker processes")
    with ProcessPoolExecutor(max_workers=n_workers) as executor:
        yield from executor.map(fn, tasks, chunksize=chunksize)
