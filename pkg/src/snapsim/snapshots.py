"""Snapshot algorithms as per-process state machines.

Each algorithm object holds the state of all ``n`` processes of one
simulation and talks to the simulation through a small surface: ``now()``,
``record(pid)``, ``broadcast_control(src, kind)``, ``clocks`` and
``quiescent()``.

Recording windows start when a process records its local state. Where they
end differs per algorithm:

* Chandy-Lamport: when the marker on the last open incoming channel arrives.
* Lai-Yang / Mattern: when the last incoming channel has delivered as many
  white messages as its sender declared, or at quiescence (flagged) for
  channels whose count never became known.
* AB-AV: when the last RecordedNotice is delivered.
"""

from __future__ import annotations

from .records import GlobalSnapshot, LocalSnapshot, RecordingWindow
from .transport import (AppMessage, ChannelId, ChannelOrdering, Color,
                        ControlKind, ControlMessage, Epoch)


class AlreadyRecorded(RuntimeError):
    pass


class DuplicateMarker(RuntimeError):
    pass


class MissingVectorClock(ValueError):
    pass


class CalledBeforeQuiescence(RuntimeError):
    pass


class CausalityViolation(RuntimeError):
    """Causal delivery let through something it must not have."""


class SnapshotAlgorithm:
    name = ""
    ordering: ChannelOrdering
    needs_clocks = False

    def __init__(self, sim):
        self.sim = sim
        self.n = n = sim.n
        self.snapshot = GlobalSnapshot(0, n)
        self.start: list[float | None] = [None] * n
        self.end: list[float | None] = [None] * n
        self.finalized = [False] * n
        self.open: list[set[int]] = [set() for _ in range(n)]

    def recorded(self, pid: int) -> bool:
        return self.start[pid] is not None

    def _record(self, pid: int) -> LocalSnapshot:
        if self.recorded(pid):
            raise AlreadyRecorded(f"process {pid} already recorded")
        local = self.sim.record(pid)
        local.channel_states = {ChannelId(j, pid): [] for j in range(self.n) if j != pid}
        self.snapshot.local[pid] = local
        self.start[pid] = local.record_time
        self.open[pid] = set(range(self.n)) - {pid}
        return local

    def _close(self, pid: int, src: int) -> None:
        opened = self.open[pid]
        if src in opened:
            opened.discard(src)
            if not opened:
                self.end[pid] = self.sim.now()

    def _append(self, pid: int, msg: AppMessage) -> None:
        self.snapshot.local[pid].channel_states[ChannelId(msg.src, pid)].append(msg.id)

    def initiate(self, pid: int) -> None:
        raise NotImplementedError

    def on_send(self, pid: int, msg: AppMessage) -> None:
        pass

    def on_app(self, pid: int, msg: AppMessage) -> None:
        """Called when ``msg`` is delivered, before the process handles it."""

    def on_control(self, pid: int, msg: ControlMessage) -> None:
        raise ValueError(f"{self.name} uses no {msg.control.value} messages")

    def finalize_at_quiescence(self) -> None:
        if not self.sim.quiescent():
            raise CalledBeforeQuiescence("events are still pending")
        stuck = [p for p in range(self.n) if not self.recorded(p) or self.open[p]]
        if stuck:
            raise RuntimeError(f"{self.name}: recording unfinished at quiescence for {stuck}")

    def windows(self) -> list[RecordingWindow]:
        return [RecordingWindow(p, self.start[p], self.end[p], self.finalized[p])
                for p in range(self.n)]


class ChandyLamport(SnapshotAlgorithm):
    name = "chandy-lamport"
    ordering = ChannelOrdering.FIFO

    def __init__(self, sim):
        super().__init__(sim)
        self.closed: list[set[int]] = [set() for _ in range(self.n)]

    def _record_and_flood(self, pid: int, via: int | None) -> None:
        self._record(pid)
        if via is not None:
            self.open[pid].discard(via)
            self.closed[pid].add(via)
        if not self.open[pid]:
            self.end[pid] = self.sim.now()
        self.sim.broadcast_control(pid, ControlKind.MARKER)

    def cl_initiate(self, pid: int) -> None:
        if self.recorded(pid):
            raise AlreadyRecorded(f"process {pid} already recorded")
        self._record_and_flood(pid, None)

    initiate = cl_initiate

    def cl_on_marker(self, pid: int, src: int) -> None:
        if src in self.closed[pid]:
            raise DuplicateMarker(f"second marker on channel {src}->{pid}")
        if not self.recorded(pid):
            self._record_and_flood(pid, src)
            return
        self.closed[pid].add(src)
        self._close(pid, src)

    def on_control(self, pid: int, msg: ControlMessage) -> None:
        if msg.control is not ControlKind.MARKER:
            super().on_control(pid, msg)
        self.cl_on_marker(pid, msg.src)

    def on_app(self, pid: int, msg: AppMessage) -> None:
        if msg.src in self.open[pid] and self.recorded(pid):
            self._append(pid, msg)


class _Coloring(SnapshotAlgorithm):
    """White/red bookkeeping shared by Lai-Yang and Mattern.

    A process sends white messages until it records and red ones after. Red
    messages piggyback the sender's per-channel white-sent counts, so the
    receiver knows how many whites to wait for on that channel.
    """

    ordering = ChannelOrdering.NON_FIFO

    def __init__(self, sim):
        super().__init__(sim)
        n = self.n
        self.white_sent = [[0] * n for _ in range(n)]
        self.white_recv = [[0] * n for _ in range(n)]
        self.declared: list[list[int | None]] = [[None] * n for _ in range(n)]
        self.close_time: list[dict[int, float]] = [{} for _ in range(n)]
        self.last_white: list[dict[int, float]] = [{} for _ in range(n)]
        self._counts: list[dict | None] = [None] * n

    def _sends_red(self, pid: int, msg: AppMessage) -> bool:
        raise NotImplementedError

    def _is_red(self, msg: AppMessage) -> bool:
        raise NotImplementedError

    def _record(self, pid: int) -> LocalSnapshot:
        local = super()._record(pid)
        if not self.open[pid]:
            self.end[pid] = local.record_time
        return local

    def _decorate(self, pid: int, msg: AppMessage) -> None:
        if self._sends_red(pid, msg):
            msg.color = Color.RED
            counts = self._counts[pid]
            if counts is None:
                row = self.white_sent[pid]
                counts = {ChannelId(pid, d): row[d] for d in range(self.n) if d != pid}
                self._counts[pid] = counts
            msg.white_sent_counts = counts
        else:
            msg.color = Color.WHITE
            self.white_sent[pid][msg.dst] += 1

    def _receive(self, pid: int, msg: AppMessage) -> None:
        src = msg.src
        if self._is_red(msg):
            if not self.recorded(pid):
                self._record(pid)
            if self.declared[pid][src] is None:
                self.declared[pid][src] = msg.white_sent_counts[ChannelId(src, pid)]
                self._try_close(pid, src)
            return
        self.white_recv[pid][src] += 1
        if self.recorded(pid):
            if src not in self.open[pid]:
                raise RuntimeError(f"white message {msg.id} on terminated channel {src}->{pid}")
            self._append(pid, msg)
            self.last_white[pid][src] = self.sim.now()
            self._try_close(pid, src)

    def _try_close(self, pid: int, src: int) -> None:
        if src in self.open[pid] and self.white_recv[pid][src] == self.declared[pid][src]:
            self.close_time[pid][src] = self.sim.now()
            self._close(pid, src)

    def finalize_at_quiescence(self) -> None:
        """Force-record processes no red message reached, close dangling channels.

        A dangling channel closes at its last white receipt after the record,
        or at the record itself if there was none.
        """
        if not self.sim.quiescent():
            raise CalledBeforeQuiescence("events are still pending")
        for pid in range(self.n):
            if not self.recorded(pid):
                self._record(pid)
                self.finalized[pid] = True
        for pid in range(self.n):
            if not self.open[pid]:
                continue
            start = self.start[pid]
            for src in sorted(self.open[pid]):
                self.close_time[pid][src] = self.last_white[pid].get(src, start)
            self.open[pid].clear()
            self.end[pid] = max(self.close_time[pid].values(), default=start)
            self.finalized[pid] = True


class LaiYang(_Coloring):
    name = "lai-yang"

    def _sends_red(self, pid, msg):
        return self.recorded(pid)

    def _is_red(self, msg):
        return msg.color is Color.RED

    def initiate(self, pid: int) -> None:
        self._record(pid)

    def ly_on_send(self, pid: int, msg: AppMessage) -> AppMessage:
        self._decorate(pid, msg)
        return msg

    def ly_on_receive(self, pid: int, msg: AppMessage) -> None:
        self._receive(pid, msg)

    on_send = ly_on_send
    on_app = ly_on_receive


class Mattern(_Coloring):
    """Vector-clock triggered colouring.

    The initiator records with its clock entry ticked to ``s``; any message
    whose vector clock has ``vc[initiator] >= s`` causally follows that record
    and plays the role of a red message.
    """

    name = "mattern"
    needs_clocks = True

    def __init__(self, sim):
        super().__init__(sim)
        self.initiator: int | None = None
        self.s: int | None = None

    def _is_red(self, msg):
        if msg.vc is None:
            raise MissingVectorClock(f"message {msg.id} carries no vector clock")
        return self.s is not None and msg.vc[self.initiator] >= self.s

    def _sends_red(self, pid, msg):
        return self._is_red(msg)

    def initiate(self, pid: int) -> None:
        self._record(pid)
        self.initiator = pid
        self.s = self.sim.clocks[pid][pid]

    def mattern_on_send(self, pid: int, msg: AppMessage) -> AppMessage:
        self._decorate(pid, msg)
        return msg

    def mattern_on_receive(self, pid: int, msg: AppMessage) -> None:
        self._receive(pid, msg)

    on_send = mattern_on_send
    on_app = mattern_on_receive


class AbAv(SnapshotAlgorithm):
    """Combined Acharya-Badrinath / Alagar-Venkatesan over causal delivery.

    The initiator records and broadcasts a SnapshotRequest; every other
    process records when the request is delivered and broadcasts a
    RecordedNotice. Channel ``j -> i`` stops recording when ``j``'s notice
    (the request, for ``j`` = initiator) reaches ``i``; causal delivery
    guarantees every pre-record message from ``j`` got there first.
    """

    name = "abav"
    ordering = ChannelOrdering.CAUSAL

    def __init__(self, sim):
        super().__init__(sim)
        self.epoch = [Epoch.PRE_RECORD] * self.n

    def _record(self, pid: int) -> LocalSnapshot:
        local = super()._record(pid)
        self.epoch[pid] = Epoch.POST_RECORD
        if not self.open[pid]:
            self.end[pid] = local.record_time
        return local

    def abav_initiate(self, pid: int) -> None:
        self._record(pid)
        self.sim.broadcast_control(pid, ControlKind.SNAPSHOT_REQUEST)

    initiate = abav_initiate

    def on_send(self, pid: int, msg: AppMessage) -> None:
        msg.epoch = self.epoch[pid]

    def abav_on_control(self, pid: int, msg: ControlMessage) -> None:
        if msg.control is ControlKind.SNAPSHOT_REQUEST:
            if not self.recorded(pid):
                self._record(pid)
                self.sim.broadcast_control(pid, ControlKind.RECORDED_NOTICE)
            self._close(pid, msg.src)
        elif msg.control is ControlKind.RECORDED_NOTICE:
            if not self.recorded(pid):
                raise CausalityViolation(
                    f"notice from {msg.src} reached {pid} before the snapshot request")
            self._close(pid, msg.src)
        else:
            super().on_control(pid, msg)

    on_control = abav_on_control

    def abav_on_app(self, pid: int, msg: AppMessage) -> None:
        if msg.epoch is Epoch.POST_RECORD:
            if not self.recorded(pid):
                raise CausalityViolation(
                    f"post-record message {msg.id} reached unrecorded process {pid}")
            return
        if self.recorded(pid):
            if msg.src not in self.open[pid]:
                raise CausalityViolation(
                    f"pre-record message {msg.id} from {msg.src} arrived after its notice")
            self._append(pid, msg)

    on_app = abav_on_app


ALGORITHMS: dict[str, type[SnapshotAlgorithm]] = {
    cls.name: cls for cls in (ChandyLamport, LaiYang, Mattern, AbAv)
}

ALIASES = {
    "cl": "chandy-lamport", "chandy-lamport": "chandy-lamport",
    "ly": "lai-yang", "lai-yang": "lai-yang",
    "mattern": "mattern",
    "abav": "abav", "ab-av": "abav",
}


def resolve(name: str) -> type[SnapshotAlgorithm]:
    try:
        return ALGORITHMS[ALIASES[name.lower()]]
    except KeyError:
        raise ValueError(f"unknown snapshot algorithm {name!r}") from None
