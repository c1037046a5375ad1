"""Directed channels with FIFO, non-FIFO and causal (BSS) delivery.

The topology is the complete directed graph over ``n`` processes. Under causal
ordering every transmission is a causal broadcast: the addressed process gets
the message, every other process gets a payload-free relay copy that only
advances its delivery clock. That is what the Birman-Schiper-Stephenson
condition needs in order to be live for point-to-point traffic.
"""

from __future__ import annotations

import enum
import heapq
from dataclasses import dataclass
from typing import Callable, NamedTuple, Union

from . import kernels
from .clocks import LengthMismatch, VectorClock
from .engine import EventKind, Scheduler


class ChannelOrdering(enum.Enum):
    FIFO = "fifo"
    NON_FIFO = "nonfifo"
    CAUSAL = "causal"


class Color(enum.Enum):
    WHITE = "white"
    RED = "red"


class Epoch(enum.Enum):
    PRE_RECORD = "pre"
    POST_RECORD = "post"


class ControlKind(enum.Enum):
    MARKER = "marker"
    SNAPSHOT_REQUEST = "request"
    RECORDED_NOTICE = "notice"


class ChannelId(NamedTuple):
    src: int
    dst: int

    def __str__(self) -> str:
        return f"{self.src}->{self.dst}"


def channel_id(src: int, dst: int) -> ChannelId:
    if src == dst:
        raise ValueError(f"self-channel {src}->{dst} does not exist")
    return ChannelId(src, dst)


@dataclass(slots=True, eq=False)
class AppMessage:
    id: int
    src: int
    dst: int
    send_time: float
    color: Color = Color.WHITE
    vc: VectorClock | None = None
    white_sent_counts: dict | None = None
    epoch: Epoch = Epoch.PRE_RECORD

    kind = "app"

    @property
    def channel(self) -> ChannelId:
        return ChannelId(self.src, self.dst)


@dataclass(slots=True, eq=False)
class ControlMessage:
    id: int
    src: int
    dst: int
    send_time: float
    control: ControlKind
    snapshot_id: int = 0
    vc: VectorClock | None = None

    @property
    def kind(self) -> str:
        return self.control.value

    @property
    def channel(self) -> ChannelId:
        return ChannelId(self.src, self.dst)


Message = Union[AppMessage, ControlMessage]


@dataclass(slots=True, eq=False)
class Envelope:
    """What travels on the wire. ``message`` is None for causal relay copies."""

    src: int
    dst: int
    message: Message | None
    bss_vc: VectorClock | None = None


def bss_deliverable(msg_vc: VectorClock, sender: int, local_vc) -> bool:
    """Birman-Schiper-Stephenson delivery condition."""
    if len(msg_vc) != len(local_vc):
        raise LengthMismatch(f"clock lengths differ: {len(msg_vc)} vs {len(local_vc)}")
    return kernels.bss_deliverable(msg_vc, sender, local_vc)


class CausalBuffer:
    """Per-process BSS hold-back queue.

    ``local`` is the process's BSS vector: its own entry counts its
    broadcasts, entry ``k`` counts broadcasts delivered from ``k``.

    Delivery order is "earliest arrival among the deliverable messages",
    i.e. what a scan in arrival order restarted after every delivery yields
    (see :func:`scan_drain`). It is computed incrementally: a message that
    is not next in its sender's sequence waits in ``_future``; a sequence
    head blocked on entry ``k`` waits in ``_waiting[k]`` until ``local[k]``
    catches up; unblocked heads sit in ``_ready`` keyed by arrival number.
    Entries of ``local`` only grow, so a message never becomes blocked
    again once checked past an entry.
    """

    __slots__ = ("local", "_future", "_waiting", "_ready", "_arrivals", "_size")

    def __init__(self, n: int):
        self.local = [0] * n
        self._future: list[dict[int, tuple[int, Envelope]]] = [{} for _ in range(n)]
        self._waiting: list[list] = [[] for _ in range(n)]
        self._ready: list[tuple[int, Envelope]] = []
        self._arrivals = 0
        self._size = 0

    def __len__(self) -> int:
        return self._size

    @property
    def has_ready(self) -> bool:
        return bool(self._ready)

    def add(self, env: Envelope) -> None:
        arrival = self._arrivals
        self._arrivals += 1
        self._size += 1
        s = env.src
        seq = env.bss_vc[s]
        if seq == self.local[s] + 1:
            self._check(arrival, env, 0)
        else:
            self._future[s][seq] = (arrival, env)

    def _check(self, arrival: int, env: Envelope, start: int) -> None:
        k = kernels.first_blocking(env.bss_vc, env.src, self.local, start)
        if k < 0:
            heapq.heappush(self._ready, (arrival, env))
        else:
            heapq.heappush(self._waiting[k], (env.bss_vc[k], arrival, env))

    def drain(self) -> list[Envelope]:
        out = []
        local = self.local
        ready = self._ready
        while ready:
            _, env = heapq.heappop(ready)
            s = env.src
            local[s] = env.bss_vc[s]
            self._size -= 1
            out.append(env)
            nxt = self._future[s].pop(local[s] + 1, None)
            if nxt is not None:
                self._check(nxt[0], nxt[1], 0)
            waiting = self._waiting[s]
            while waiting and waiting[0][0] <= local[s]:
                _, arrival, woken = heapq.heappop(waiting)
                self._check(arrival, woken, s + 1)
        return out


def scan_drain(local: list[int], pending: list[Envelope]) -> list[Envelope]:
    """Reference BSS drain: rescan ``pending`` (arrival order) after each delivery.

    Mutates ``local`` and ``pending``. Quadratic; used to cross-check
    :class:`CausalBuffer`.
    """
    out = []
    while pending:
        i = kernels.first_deliverable(local, [e.bss_vc for e in pending],
                                      [e.src for e in pending])
        if i < 0:
            break
        env = pending.pop(i)
        local[env.src] = env.bss_vc[env.src]
        out.append(env)
    return out


class Network:
    """Channel layer for one simulation instance.

    ``deliver(message)`` is called for every delivered message, in delivery
    order. ``relay_latency`` supplies latencies for causal relay copies.
    """

    def __init__(self, n: int, ordering: ChannelOrdering, scheduler: Scheduler,
                 deliver: Callable[[Message], None],
                 relay_latency: Callable[[], float] | None = None):
        self.n = n
        self.ordering = ordering
        self.scheduler = scheduler
        self.deliver = deliver
        self.relay_latency = relay_latency
        self._last_arrival: dict[tuple[int, int], float] = {}
        buffer_cls = kernels.CausalBuffer or CausalBuffer
        self.buffers = ([buffer_cls(n) for _ in range(n)]
                        if ordering is ChannelOrdering.CAUSAL else [])
        self.sent = 0
        self.delivered = 0

    def _schedule(self, env: Envelope, latency: float) -> float:
        if not latency > 0:
            raise ValueError(f"latency must be positive, got {latency!r}")
        sched = self.scheduler
        at = sched.now() + latency
        if self.ordering is ChannelOrdering.FIFO:
            key = (env.src, env.dst)
            last = self._last_arrival.get(key)
            if last is not None and at < last:
                at = last
            self._last_arrival[key] = at
        sched.schedule(at, EventKind.MESSAGE_ARRIVAL, env.dst, env)
        return at

    def send(self, msg: Message, latency: float) -> float:
        """Transmit ``msg`` to ``msg.dst``; returns its scheduled arrival time."""
        if not (0 <= msg.src < self.n and 0 <= msg.dst < self.n) or msg.src == msg.dst:
            raise ValueError(f"no channel {msg.src}->{msg.dst}")
        if self.ordering is not ChannelOrdering.CAUSAL:
            self.sent += 1
            return self._schedule(Envelope(msg.src, msg.dst, msg), latency)
        return self.broadcast({msg.dst: msg}, lambda: latency, src=msg.src)[msg.dst]

    def broadcast(self, msgs: dict[int, Message], latency: Callable[[], float],
                  src: int) -> dict[int, float]:
        """Send ``msgs[dst]`` to each listed destination.

        Under causal ordering this is one BSS broadcast (one clock tick);
        unlisted processes receive relay copies. Elsewhere it is a sequence
        of independent unicasts in ascending destination order.
        """
        arrivals = {}
        self.sent += len(msgs)
        if self.ordering is not ChannelOrdering.CAUSAL:
            for dst in sorted(msgs):
                arrivals[dst] = self._schedule(Envelope(src, dst, msgs[dst]), latency())
            return arrivals
        clock = self.buffers[src].local
        clock[src] += 1
        vc = tuple(clock)
        schedule = self.scheduler.schedule
        now = self.scheduler.now()
        relay = self.relay_latency
        arrival = EventKind.MESSAGE_ARRIVAL
        for dst in range(self.n):
            if dst == src:
                continue
            msg = msgs.get(dst)
            lat = latency() if msg is not None else relay()
            if not lat > 0:
                raise ValueError(f"latency must be positive, got {lat!r}")
            arrivals[dst] = at = now + lat
            schedule(at, arrival, dst, Envelope(src, dst, msg, vc))
        return arrivals

    def on_arrival(self, env: Envelope) -> None:
        if self.ordering is not ChannelOrdering.CAUSAL:
            self.delivered += 1
            self.deliver(env.message)
            return
        buf = self.buffers[env.dst]
        buf.add(env)
        if buf.has_ready:
            self.causal_deliver_loop(env.dst)

    def causal_deliver_loop(self, pid: int) -> list[Message]:
        """Deliver everything the BSS condition now allows at ``pid``."""
        delivered = []
        for env in self.buffers[pid].drain():
            if env.message is not None:
                self.delivered += 1
                delivered.append(env.message)
                self.deliver(env.message)
        return delivered
