"""One simulation instance: engine + network + workload + snapshot algorithm."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, Sequence

from . import clocks
from .engine import DEFAULT_EVENT_LIMIT, Event, EventKind, Scheduler
from .errors import ConfigInvalid
from .metrics import EventLog
from .records import GlobalSnapshot, LocalSnapshot, RecordingWindow
from .snapshots import SnapshotAlgorithm, resolve
from .transport import (AppMessage, ChannelOrdering, ControlKind,
                        ControlMessage, Message, Network)


@dataclass(frozen=True)
class PlannedSend:
    """One application message of the workload, fixed before the run."""

    id: int
    time: float
    src: int
    dst: int
    latency: float


@dataclass
class SimulationResult:
    snapshot: GlobalSnapshot
    windows: list[RecordingWindow]
    log: EventLog
    end_time: float
    trace: list[str] | None


def _fmt(t: float) -> str:
    return f"{t:.6f}"


class Simulation:
    def __init__(self, n: int, algorithm: str | type[SnapshotAlgorithm],
                 workload: Sequence[PlannedSend], *,
                 control_latency: Callable[[], float],
                 relay_latency: Callable[[], float] | None = None,
                 initiator: int = 0, initiation_time: float = 0.0,
                 ordering: ChannelOrdering | None = None,
                 track_clocks: bool = False, trace: bool = False,
                 event_limit: int = DEFAULT_EVENT_LIMIT):
        algo_cls = resolve(algorithm) if isinstance(algorithm, str) else algorithm
        if n < 1:
            raise ConfigInvalid("need at least one process")
        if not 0 <= initiator < n:
            raise ConfigInvalid(f"initiator {initiator} outside 0..{n - 1}")
        if ordering is not None and ordering is not algo_cls.ordering:
            raise ConfigInvalid(
                f"{algo_cls.name} requires {algo_cls.ordering.value} channels, "
                f"not {ordering.value}")
        self.n = n
        self.algorithm_name = algo_cls.name
        self.control_latency = control_latency
        self.scheduler = Scheduler(self._dispatch, event_limit)
        self.network = Network(n, algo_cls.ordering, self.scheduler, self._deliver,
                               relay_latency or control_latency)
        self.log = EventLog()
        self.trace: list[str] | None = [] if trace else None
        self.sent = [0] * n
        self.received = [0] * n
        self.track_clocks = track_clocks or algo_cls.needs_clocks
        self.clocks = [clocks.zero(n)] * n if self.track_clocks else None
        self.algorithm = algo_cls(self)
        self._emit(f"RUN algo={algo_cls.name} n={n}")

        self._next_id = 0
        for ps in sorted(workload, key=lambda p: (p.time, p.id)):
            if not (0 <= ps.src < n and 0 <= ps.dst < n) or ps.src == ps.dst:
                raise ConfigInvalid(f"planned send {ps.id} uses no channel {ps.src}->{ps.dst}")
            self.scheduler.schedule(ps.time, EventKind.TIMER_FIRE, ps.src, ps)
            self._next_id = max(self._next_id, ps.id + 1)
        self.scheduler.schedule(initiation_time, EventKind.SNAPSHOT_INITIATE, initiator)

    def now(self) -> float:
        return self.scheduler.now()

    def quiescent(self) -> bool:
        return self.scheduler.pending() == 0

    def _tick(self, pid: int):
        if self.clocks is None:
            return None
        vc = clocks.tick(self.clocks[pid], pid)
        self.clocks[pid] = vc
        return vc

    def _emit(self, line: str) -> None:
        if self.trace is not None:
            self.trace.append(line)

    def _message_line(self, verb: str, msg: Message, vc) -> None:
        if self.trace is None:
            return
        line = f"{verb} t={_fmt(self.now())} ch={msg.src}->{msg.dst} id={msg.id} kind={msg.kind}"
        if vc is not None:
            line += " vc=" + clocks.format_clock(vc)
        self.trace.append(line)

    # surface used by the algorithms

    def record(self, pid: int) -> LocalSnapshot:
        vc = self._tick(pid)
        now = self.now()
        self.log.record(now, pid, vc)
        self._emit(f"RECORD t={_fmt(now)} pid={pid} algo={self.algorithm_name}")
        return LocalSnapshot(pid, now, self.sent[pid], self.received[pid])

    def broadcast_control(self, src: int, kind: ControlKind,
                          dsts: Sequence[int] | None = None) -> None:
        targets = [d for d in range(self.n) if d != src] if dsts is None else list(dsts)
        now = self.now()
        msgs: dict[int, Message] = {}
        for dst in targets:
            vc = self._tick(src)
            msg = ControlMessage(self._next_id, src, dst, now, kind, 0, vc)
            self._next_id += 1
            self.log.send(now, msg.id, src, dst, msg.kind, vc)
            self._message_line("SEND", msg, vc)
            msgs[dst] = msg
        if msgs:
            self.network.broadcast(msgs, self.control_latency, src)

    # event handling

    def _dispatch(self, event: Event) -> None:
        kind = event.kind
        if kind is EventKind.MESSAGE_ARRIVAL:
            self.network.on_arrival(event.payload)
        elif kind is EventKind.TIMER_FIRE:
            self._app_send(event.payload)
        else:
            self.algorithm.initiate(event.target)

    def _app_send(self, ps: PlannedSend) -> None:
        src = ps.src
        msg = AppMessage(ps.id, src, ps.dst, self.now())
        msg.vc = self._tick(src)
        self.algorithm.on_send(src, msg)
        self.sent[src] += 1
        self.log.send(msg.send_time, msg.id, src, ps.dst, "app", msg.vc)
        self._message_line("SEND", msg, msg.vc)
        self.network.send(msg, ps.latency)

    def _deliver(self, msg: Message) -> None:
        pid = msg.dst
        is_app = isinstance(msg, AppMessage)
        if is_app:
            self.algorithm.on_app(pid, msg)
            self.received[pid] += 1
        vc = None
        if self.clocks is not None:
            local = self.clocks[pid]
            if msg.vc is not None:
                local = clocks.merge(local, msg.vc)
            vc = clocks.tick(local, pid)
            self.clocks[pid] = vc
        self.log.deliver(self.now(), msg.id, msg.src, pid, msg.kind, vc)
        self._message_line("DELIVER", msg, vc)
        if not is_app:
            self.algorithm.on_control(pid, msg)

    def run(self) -> SimulationResult:
        end = self.scheduler.run_until_quiescent()
        self.algorithm.finalize_at_quiescence()
        windows = self.algorithm.windows()
        snap = self.algorithm.snapshot
        if self.trace is not None:
            for pid in range(self.n):
                for ch, ids in snap.local[pid].channel_states.items():
                    if ids:
                        self._emit(f"CHANNEL pid={pid} ch={ch} ids={','.join(map(str, ids))}")
            for w in windows:
                self._emit(f"WINDOW pid={w.pid} start={_fmt(w.start)} end={_fmt(w.end)} "
                           f"finalized={str(w.finalized_at_quiescence).lower()}")
        return SimulationResult(snap, windows, self.log, end, self.trace)
