"""Fan a per-point function out over worker processes, keeping input order.

The shared, read-only `context` (netlist, pump solution, ...) is shipped once per worker
through the pool initializer instead of once per task.
"""

from collections.abc import Callable, Iterable
from concurrent.futures import ProcessPoolExecutor
from functools import partial
from typing import Any, TypeVar

from loguru import logger

T = TypeVar("T")
R = TypeVar("R")

_context: Any = None


def _install(context: Any) -> None:
    global _context
    _context = context


def _call(fn: Callable[[Any, T], R], item: T) -> R:
    return fn(_context, item)


def ordered_map(
    fn: Callable[[Any, T], R],
    items: Iterable[T],
    *,
    context: Any,
    threads: int = 1,
) -> list[R]:
    """`[fn(context, item) for item in items]`, optionally over `threads` processes.

    `fn` must be a module-level function so it can be pickled.
    """
    items = list(items)
    if threads <= 1 or len(items) <= 1:
        return [fn(context, item) for item in items]

    chunksize = max(1, len(items) // (4 * threads))
    logger.debug(f"Dispatching {len(items)} points over {threads} processes.")
    with ProcessPoolExecutor(
        max_workers=threads,
        initializer=_install,
        initargs=(context,),
    ) as pool:
        return list(pool.map(partial(_call, fn), items, chunksize=chunksize))
