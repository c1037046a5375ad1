"""Reading trace logs back into an event log and snapshot.

Line formats::

    RUN algo=<a> n=<n>
    SEND t=<time> ch=<src>-><dst> id=<msgid> kind=<app|marker|request|notice> [vc=[..]]
    DELIVER t=<time> ch=<src>-><dst> id=<msgid> kind=<...> [vc=[..]]
    RECORD t=<time> pid=<p> algo=<a>
    CHANNEL pid=<p> ch=<src>-><dst> ids=<id>,<id>,...
    WINDOW pid=<p> start=<s> end=<e> finalized=<bool>
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Iterable

from .clocks import parse_clock
from .metrics import EventLog
from .records import GlobalSnapshot, LocalSnapshot, RecordingWindow
from .transport import ChannelId


class TraceFormatError(ValueError):
    pass


@dataclass
class ParsedTrace:
    algorithm: str
    n: int
    log: EventLog
    snapshot: GlobalSnapshot
    windows: list[RecordingWindow] = field(default_factory=list)


def _fields(parts: list[str], lineno: int) -> dict[str, str]:
    out = {}
    for p in parts:
        key, sep, value = p.partition("=")
        if not sep:
            raise TraceFormatError(f"line {lineno}: malformed field {p!r}")
        out[key] = value
    return out


def _channel(text: str, lineno: int) -> ChannelId:
    src, sep, dst = text.partition("->")
    if not sep:
        raise TraceFormatError(f"line {lineno}: bad channel {text!r}")
    return ChannelId(int(src), int(dst))


def parse_trace(lines: Iterable[str]) -> ParsedTrace:
    algorithm, n = "", None
    log = EventLog()
    locals_: dict[int, LocalSnapshot] = {}
    windows = []
    for lineno, raw in enumerate(lines, 1):
        line = raw.strip()
        if not line or line.startswith("#"):
            continue
        verb, *parts = line.split()
        try:
            f = _fields(parts, lineno)
            if verb == "RUN":
                algorithm, n = f["algo"], int(f["n"])
            elif verb in ("SEND", "DELIVER"):
                ch = _channel(f["ch"], lineno)
                vc = parse_clock(f["vc"]) if "vc" in f else None
                add = log.send if verb == "SEND" else log.deliver
                add(float(f["t"]), int(f["id"]), ch.src, ch.dst, f["kind"], vc)
            elif verb == "RECORD":
                t, pid = float(f["t"]), int(f["pid"])
                log.record(t, pid)
                locals_[pid] = LocalSnapshot(pid, t, 0, 0)
            elif verb == "CHANNEL":
                pid = int(f["pid"])
                ids = [int(x) for x in f["ids"].split(",") if x]
                locals_[pid].channel_states[_channel(f["ch"], lineno)] = ids
            elif verb == "WINDOW":
                windows.append(RecordingWindow(int(f["pid"]), float(f["start"]),
                                               float(f["end"]), f["finalized"] == "true"))
            else:
                raise TraceFormatError(f"line {lineno}: unknown record {verb!r}")
        except (KeyError, ValueError) as exc:
            if isinstance(exc, TraceFormatError):
                raise
            raise TraceFormatError(f"line {lineno}: {exc}") from None
    if n is None:
        raise TraceFormatError("trace has no RUN header")
    return ParsedTrace(algorithm, n, log, GlobalSnapshot(0, n, locals_), windows)
