"""Bounded single-consumer hand-off buffers between pipeline stages."""

from __future__ import annotations

import threading
from collections import deque
from enum import Enum
from typing import Generic, Iterator, TypeVar

T = TypeVar("T")


class StageSignal(str, Enum):
    BUILDER_O = "Builder.O"
    BUILDER_D = "Builder.D"
    BUILDER_A = "Builder.A"
    BUILDER_S = "Builder.S"
    MINER_QFETCH = "Miner.Qfetch"
    MINER_A = "Miner.A"
    MINER_M = "Miner.M"
    MINER_QGEN = "Miner.Qgen"
    RESULT_R = "Result.R"


class ChannelAborted(Exception):
    pass


class ChannelClosed(Exception):
    pass


class Channel(Generic[T]):
    """A bounded FIFO buffer.

    ``put`` blocks while full, ``get`` blocks while empty. After ``close`` the
    consumer drains what is left and then sees :class:`ChannelClosed`;
    ``abort`` wakes everybody with :class:`ChannelAborted`.
    """

    def __init__(self, signal: StageSignal, capacity: int = 1):
        if capacity < 1:
            raise ValueError("channel capacity must be >= 1")
        self.signal = signal
        self.capacity = capacity
        self._items: deque[T] = deque()
        self._cond = threading.Condition()
        self._closed = False
        self._aborted = False

    def put(self, item: T) -> None:
        with self._cond:
            while len(self._items) >= self.capacity and not self._aborted:
                self._cond.wait()
            if self._aborted:
                raise ChannelAborted(self.signal.value)
            if self._closed:
                raise ChannelClosed(self.signal.value)
            self._items.append(item)
            self._cond.notify_all()

    def get(self) -> T:
        with self._cond:
            while not self._items and not self._closed and not self._aborted:
                self._cond.wait()
            if self._aborted:
                raise ChannelAborted(self.signal.value)
            if not self._items:
                raise ChannelClosed(self.signal.value)
            item = self._items.popleft()
            self._cond.notify_all()
            return item

    def close(self) -> None:
        with self._cond:
            self._closed = True
            self._cond.notify_all()

    def abort(self) -> None:
        with self._cond:
            self._aborted = True
            self._cond.notify_all()

    @property
    def aborted(self) -> bool:
        return self._aborted

    def __iter__(self) -> Iterator[T]:
        while True:
            try:
                yield self.get()
            except ChannelClosed:
                return

    def __len__(self) -> int:
        return len(self._items)
