"""Deterministic event queue, simulation clock and keyed random streams."""

from __future__ import annotations

import enum
import hashlib
import heapq
from dataclasses import dataclass, field
from typing import Any, Callable

import numpy as np

NS_PER_MS = 1_000_000
NS_PER_S = 1_000_000_000
TTI_NS = 500_000


def ms(value: float) -> int:
    """Milliseconds to integer nanoseconds."""
    return int(round(value * NS_PER_MS))


def seconds(value: float) -> int:
    return int(round(value * NS_PER_S))


def to_seconds(ticks: int) -> float:
    return ticks / NS_PER_S


class SchedulingError(RuntimeError):
    """Raised when an event is scheduled before the current clock."""


class EventKind(enum.IntEnum):
    PACKET_ARRIVAL = 0
    TTI_BOUNDARY = 1
    HARQ_FEEDBACK = 2
    COMPUTE_DONE = 3
    ROUND_TRIGGER = 4
    METRIC_SAMPLE = 5


@dataclass(order=True, frozen=True)
class Event:
    time: int
    seq: int
    kind: EventKind = field(compare=False)
    payload: Any = field(default=None, compare=False)


Handler = Callable[[Event], None]


class Simulator:
    """Single-threaded discrete-event core.

    Events dispatch in ``(time, seq)`` order; ``seq`` is a per-instance
    insertion counter so simultaneous events keep FIFO order. Handlers are
    registered per :class:`EventKind`.
    """

    def __init__(self, record_trace: bool = False):
        self.now = 0
        self._queue: list[tuple[int, int, Event]] = []
        self._seq = 0
        self._handlers: dict[EventKind, Handler] = {}
        self.trace: list[tuple[int, int, int]] | None = [] if record_trace else None

    def on(self, kind: EventKind, handler: Handler) -> None:
        self._handlers[kind] = handler

    def schedule(self, time: int, kind: EventKind, payload: Any = None) -> Event:
        if time < self.now:
            raise SchedulingError(f"event at t={time} ns scheduled while clock is {self.now} ns")
        ev = Event(time, self._seq, kind, payload)
        self._seq += 1
        heapq.heappush(self._queue, (time, ev.seq, ev))
        return ev

    def __len__(self) -> int:
        return len(self._queue)

    def peek_time(self) -> int | None:
        return self._queue[0][0] if self._queue else None

    def run_until(self, t_end: int) -> int:
        """Dispatch every event with ``time <= t_end`` (cascades included)."""
        if t_end < self.now:
            raise SchedulingError(f"run_until({t_end}) is before clock {self.now}")
        count = 0
        queue = self._queue
        handlers = self._handlers
        trace = self.trace
        while queue and queue[0][0] <= t_end:
            time, seq, ev = heapq.heappop(queue)
            self.now = time
            if trace is not None:
                trace.append((time, seq, int(ev.kind)))
            handler = handlers.get(ev.kind)
            if handler is not None:
                handler(ev)
            count += 1
        self.now = t_end
        return count


def _stream_key(base_seed: int, label: str) -> np.ndarray:
    digest = hashlib.sha256(f"{int(base_seed)}/{label}".encode()).digest()
    return np.frombuffer(digest[:16], dtype=np.uint64).copy()


class RngStream:
    """Counter-based random stream keyed by ``(base_seed, label)``.

    Backed by Philox, so the sequence a stream yields never depends on how
    much any other stream has been consumed.
    """

    _BLOCK = 4096

    def __init__(self, base_seed: int, label: str):
        self.base_seed = int(base_seed)
        self.label = label
        self.gen = np.random.Generator(np.random.Philox(key=_stream_key(base_seed, label)))
        self._buf = np.empty(0)
        self._pos = 0

    def uniform(self) -> float:
        """One U[0,1) draw; buffered for per-event use in hot loops."""
        if self._pos >= len(self._buf):
            self._buf = self.gen.random(self._BLOCK)
            self._pos = 0
        u = self._buf[self._pos]
        self._pos += 1
        return float(u)

    def random(self, size=None):
        return self.gen.random(size)

    def normal(self, loc=0.0, scale=1.0, size=None):
        return self.gen.normal(loc, scale, size)

    def integers(self, low, high=None, size=None):
        return self.gen.integers(low, high, size)


class RngFactory:
    """Hands out :class:`RngStream` objects for one base seed."""

    def __init__(self, base_seed: int):
        self.base_seed = int(base_seed)

    def stream(self, label: str) -> RngStream:
        return RngStream(self.base_seed, label)


def rng_stream(base_seed: int, label: str) -> RngStream:
    return RngStream(base_seed, label)
