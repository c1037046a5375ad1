"""Snapshot result types shared by the algorithms, metrics and harness."""

from __future__ import annotations

from dataclasses import dataclass, field

from .transport import ChannelId


@dataclass
class LocalSnapshot:
    pid: int
    record_time: float
    messages_sent: int
    messages_received: int
    channel_states: dict[ChannelId, list[int]] = field(default_factory=dict)

    @property
    def state_digest(self) -> tuple[int, int]:
        return (self.messages_sent, self.messages_received)


@dataclass(frozen=True)
class RecordingWindow:
    pid: int
    start: float
    end: float
    finalized_at_quiescence: bool = False

    def __post_init__(self) -> None:
        if self.end < self.start:
            raise ValueError(f"window end {self.end} precedes start {self.start}")

    @property
    def duration(self) -> float:
        return self.end - self.start


@dataclass
class GlobalSnapshot:
    snapshot_id: int
    n: int
    local: dict[int, LocalSnapshot] = field(default_factory=dict)

    @property
    def complete(self) -> bool:
        return sorted(self.local) == list(range(self.n))

    def channel_state(self, src: int, dst: int) -> list[int]:
        return self.local[dst].channel_states.get(ChannelId(src, dst), [])
