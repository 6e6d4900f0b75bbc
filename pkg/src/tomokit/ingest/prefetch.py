"""Bounded prefetching: up to depth concurrent fetches feed a queue.

Consumers iterate (item, result) pairs in completion order and block
while the queue is empty.  Worker exceptions surface on the consumer
side at the point of iteration.
"""

from __future__ import annotations

import queue
import threading
from typing import Callable, Generic, Iterable, Iterator, TypeVar

from .cache import MAX_PREFETCH_DEPTH

T = TypeVar("T")
R = TypeVar("R")

_SENTINEL = object()


class Prefetcher(Generic[T, R]):
    def __init__(
        self,
        fetch: Callable[[T], R],
        items: Iterable[T],
        depth: int = 2,
        queue_size: int | None = None,
    ):
        if not 1 <= depth <= MAX_PREFETCH_DEPTH:
            raise ValueError(f"depth must lie in [1, {MAX_PREFETCH_DEPTH}]")
        self._fetch = fetch
        self._input: queue.Queue = queue.Queue()
        self._items = list(items)
        for item in self._items:
            self._input.put(item)
        self._output: queue.Queue = queue.Queue(maxsize=queue_size or 2 * depth)
        self._threads = [
            threading.Thread(target=self._worker, daemon=True) for _ in range(depth)
        ]

    def _worker(self) -> None:
        while True:
            try:
                item = self._input.get_nowait()
            except queue.Empty:
                return
            try:
                result = self._fetch(item)
            except BaseException as exc:  # propagated to the consumer
                self._output.put((item, _SENTINEL, exc))
            else:
                self._output.put((item, result, None))

    def __iter__(self) -> Iterator[tuple[T, R]]:
        for t in self._threads:
            t.start()
        for _ in range(len(self._items)):
            item, result, exc = self._output.get()
            if exc is not None:
                raise exc
            yield item, result
        for t in self._threads:
            t.join()
