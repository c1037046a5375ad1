"""Recording-duration statistics and the consistent-cut / happened-before oracles.

The oracles work from the :class:`EventLog` alone. Before/after questions are
answered by log position, which refines virtual time with the engine's
deterministic tie-break, so simultaneous events are never ambiguous.
"""

from __future__ import annotations

import statistics
from dataclasses import dataclass, field
from typing import Iterable, Sequence

from .records import GlobalSnapshot, RecordingWindow
from .transport import ChannelId

SEND = "send"
DELIVER = "deliver"
RECORD = "record"


class MissingWindow(ValueError):
    pass


class IncompleteLog(ValueError):
    pass


class UnknownEvent(IndexError):
    pass


@dataclass(slots=True)
class LogEntry:
    index: int
    kind: str
    time: float
    pid: int
    msg_id: int | None = None
    channel: ChannelId | None = None
    msg_kind: str | None = None
    vc: tuple[int, ...] | None = None


@dataclass
class EventLog:
    entries: list[LogEntry] = field(default_factory=list)

    def __len__(self) -> int:
        return len(self.entries)

    def __iter__(self):
        return iter(self.entries)

    def __getitem__(self, i: int) -> LogEntry:
        return self.entries[i]

    def _add(self, kind, time, pid, msg_id=None, channel=None, msg_kind=None, vc=None) -> int:
        i = len(self.entries)
        self.entries.append(LogEntry(i, kind, time, pid, msg_id, channel, msg_kind, vc))
        return i

    def send(self, time: float, msg_id: int, src: int, dst: int,
             msg_kind: str = "app", vc=None) -> int:
        return self._add(SEND, time, src, msg_id, ChannelId(src, dst), msg_kind, vc)

    def deliver(self, time: float, msg_id: int, src: int, dst: int,
                msg_kind: str = "app", vc=None) -> int:
        return self._add(DELIVER, time, dst, msg_id, ChannelId(src, dst), msg_kind, vc)

    def record(self, time: float, pid: int, vc=None) -> int:
        return self._add(RECORD, time, pid, vc=vc)

    def check(self, require_delivered: bool = True) -> None:
        """Raise :class:`IncompleteLog` unless the log is well formed."""
        sent: set[int] = set()
        delivered: set[int] = set()
        last = float("-inf")
        for e in self.entries:
            if e.time < last:
                raise IncompleteLog(f"entry {e.index} goes back in time")
            last = e.time
            if e.kind == SEND:
                sent.add(e.msg_id)
            elif e.kind == DELIVER:
                if e.msg_id not in sent:
                    raise IncompleteLog(f"message {e.msg_id} delivered before being sent")
                if e.msg_id in delivered:
                    raise IncompleteLog(f"message {e.msg_id} delivered twice")
                delivered.add(e.msg_id)
        if require_delivered and sent != delivered:
            missing = min(sent - delivered)
            raise IncompleteLog(f"message {missing} was never delivered")


@dataclass(frozen=True)
class DurationStats:
    durations: tuple[float, ...]
    mean: float
    stddev: float
    max: float
    min: float
    finalized_count: int


def durations(windows: Iterable[RecordingWindow], n: int) -> DurationStats:
    """Per-process recording durations and their population statistics."""
    by_pid = {w.pid: w for w in windows}
    missing = [p for p in range(n) if p not in by_pid]
    if missing or len(by_pid) != n:
        raise MissingWindow(f"no recording window for processes {missing}")
    xs = tuple(by_pid[p].duration for p in range(n))
    return DurationStats(
        durations=xs,
        mean=statistics.fmean(xs),
        stddev=statistics.pstdev(xs),
        max=max(xs),
        min=min(xs),
        finalized_count=sum(w.finalized_at_quiescence for w in by_pid.values()),
    )


@dataclass(frozen=True)
class Violation:
    rule: str
    msg_id: int
    detail: str


def _record_positions(snapshot: GlobalSnapshot, log: EventLog) -> dict[int, int]:
    pos: dict[int, int] = {}
    for e in log.entries:
        if e.kind == RECORD and e.pid not in pos:
            pos[e.pid] = e.index
    missing = [p for p in range(snapshot.n) if p not in pos]
    if missing or not snapshot.complete:
        raise IncompleteLog(f"no record event for processes {missing}")
    return pos


def _app_messages(log: EventLog, kinds: Sequence[str]):
    sends: dict[int, LogEntry] = {}
    delivers: dict[int, LogEntry] = {}
    for e in log.entries:
        if e.msg_kind not in kinds:
            continue
        if e.kind == SEND:
            sends[e.msg_id] = e
        elif e.kind == DELIVER:
            delivers[e.msg_id] = e
    if sends.keys() != delivers.keys():
        raise IncompleteLog("log is not quiescent: sent and delivered message sets differ")
    return sends, delivers


def in_transit(snapshot: GlobalSnapshot, log: EventLog,
               kinds: Sequence[str] = ("app",)) -> dict[ChannelId, list[int]]:
    """Messages crossing the cut, per channel, in delivery order (brute force)."""
    pos = _record_positions(snapshot, log)
    sends, delivers = _app_messages(log, kinds)
    out: dict[ChannelId, list[int]] = {}
    for mid in sorted(delivers, key=lambda m: delivers[m].index):
        s, r = sends[mid], delivers[mid]
        if s.index < pos[s.pid] and r.index > pos[r.pid]:
            out.setdefault(s.channel, []).append(mid)
    return out


def verify_consistent_cut(snapshot: GlobalSnapshot, log: EventLog,
                          kinds: Sequence[str] = ("app",)) -> Violation | None:
    """Check the recorded cut and channel states against the event log.

    Returns ``None`` when consistent, otherwise the violation with the
    lowest message id. Rules: ``a`` orphan message, ``b`` in-transit message
    missing from its channel state, ``c`` channel state holds a message that
    did not cross the cut.
    """
    pos = _record_positions(snapshot, log)
    sends, delivers = _app_messages(log, kinds)
    found: list[Violation] = []
    for mid in sorted(sends):
        s, r = sends[mid], delivers[mid]
        j, i = s.pid, r.pid
        sent_before = s.index < pos[j]
        recv_before = r.index < pos[i]
        if recv_before and not sent_before:
            found.append(Violation("a", mid, f"message {mid} on {s.channel} is an orphan"))
            break
        if sent_before and not recv_before and mid not in snapshot.channel_state(j, i):
            found.append(Violation("b", mid, f"in-transit message {mid} missing from {s.channel}"))
            break
    for pid, local in snapshot.local.items():
        for ch, ids in local.channel_states.items():
            for mid in ids:
                s, r = sends.get(mid), delivers.get(mid)
                ok = (s is not None and s.channel == ch
                      and s.index < pos[ch.src] and r.index > pos[ch.dst])
                if not ok:
                    found.append(Violation("c", mid, f"message {mid} in state of {ch} did not cross the cut"))
    if not found:
        return None
    return min(found, key=lambda v: v.msg_id)


class HappenedBefore:
    """Transitive closure of program order and send->deliver edges.

    Predecessor sets are Python int bitsets over log indices, built in one
    pass because the log is already a linear extension of the relation.
    """

    def __init__(self, log: EventLog):
        self.log = log
        n = len(log.entries)
        preds = [0] * n
        last_at: dict[int, int] = {}
        send_at: dict[int, int] = {}
        for e in log.entries:
            acc = 0
            prev = last_at.get(e.pid)
            if prev is not None:
                acc |= preds[prev] | (1 << prev)
            if e.kind == DELIVER:
                s = send_at.get(e.msg_id)
                if s is None:
                    raise IncompleteLog(f"message {e.msg_id} delivered before being sent")
                acc |= preds[s] | (1 << s)
            elif e.kind == SEND:
                send_at[e.msg_id] = e.index
            preds[e.index] = acc
            last_at[e.pid] = e.index
        self._preds = preds
        self.send_index = send_at

    def __call__(self, e1: int, e2: int) -> bool:
        n = len(self._preds)
        for e in (e1, e2):
            if not 0 <= e < n:
                raise UnknownEvent(f"event {e} not in log of {n} entries")
        return bool(self._preds[e2] >> e1 & 1)


def happened_before(log: EventLog, e1: int, e2: int) -> bool:
    """True iff log entry ``e2`` is reachable from ``e1``."""
    return HappenedBefore(log)(e1, e2)
