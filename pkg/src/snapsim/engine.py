"""Deterministic discrete-event scheduler.

Events are kept in a binary heap ordered by ``(at, seq)``; ``seq`` is a
monotone insertion counter, so events sharing a timestamp are dispatched in
the order they were scheduled.
"""

from __future__ import annotations

import enum
import heapq
import math
import random
from dataclasses import dataclass, field
from typing import Any, Callable

DEFAULT_EVENT_LIMIT = 10**7


class SchedulingInPast(ValueError):
    pass


class EventLimitExceeded(RuntimeError):
    pass


class EventKind(enum.Enum):
    MESSAGE_ARRIVAL = "arrival"
    TIMER_FIRE = "timer"
    SNAPSHOT_INITIATE = "initiate"


@dataclass(slots=True)
class Event:
    at: float
    seq: int
    kind: EventKind
    target: int
    payload: Any = None


class Scheduler:
    """Virtual-time event loop.

    ``dispatch`` is called once per event, in ``(at, seq)`` order, and may
    schedule further events.
    """

    def __init__(self, dispatch: Callable[[Event], None] | None = None,
                 event_limit: int = DEFAULT_EVENT_LIMIT):
        self._dispatch = dispatch
        self._heap: list[tuple[float, int, Event]] = []
        self._seq = 0
        self._now = 0.0
        self.event_limit = event_limit
        self.dispatched = 0

    def set_dispatch(self, dispatch: Callable[[Event], None]) -> None:
        self._dispatch = dispatch

    def now(self) -> float:
        return self._now

    def pending(self) -> int:
        return len(self._heap)

    def schedule(self, at: float, kind: EventKind, target: int,
                 payload: Any = None) -> int:
        if not math.isfinite(at):
            raise SchedulingInPast(f"non-finite event time {at!r}")
        if at < self._now:
            raise SchedulingInPast(f"event at {at} scheduled when now={self._now}")
        seq = self._seq
        self._seq += 1
        heapq.heappush(self._heap, (at, seq, Event(at, seq, kind, target, payload)))
        return seq

    def run_until_quiescent(self) -> float:
        if self._dispatch is None:
            raise RuntimeError("no dispatch function configured")
        heap = self._heap
        pop = heapq.heappop
        dispatch = self._dispatch
        limit = self.event_limit
        while heap:
            if self.dispatched >= limit:
                raise EventLimitExceeded(
                    f"dispatched {self.dispatched} events without quiescence")
            at, _, event = pop(heap)
            self._now = at
            self.dispatched += 1
            dispatch(event)
        return self._now


@dataclass
class RngStream:
    """Named, independently seeded uniform source.

    Seeding goes through ``random.Random`` with a string key, which is hashed
    with SHA-512 and therefore stable across platforms and interpreter runs.
    """

    seed: int
    stream_id: str
    _rng: random.Random = field(init=False, repr=False)

    def __post_init__(self) -> None:
        if not 0 <= self.seed < 2**64:
            raise ValueError("seed must be a 64-bit unsigned integer")
        self._rng = random.Random(f"{self.seed}/{self.stream_id}")

    def uniform(self) -> float:
        """Uniform variate on (0, 1]."""
        return 1.0 - self._rng.random()

    def gauss(self, mu: float, sigma: float) -> float:
        return self._rng.gauss(mu, sigma)

    def randrange(self, n: int) -> int:
        return self._rng.randrange(n)
