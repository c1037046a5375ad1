"""Vector clocks as immutable tuples of non-negative ints, indexed by pid."""

from __future__ import annotations

import enum

from . import kernels

VectorClock = tuple[int, ...]


class BadProcessId(IndexError):
    pass


class LengthMismatch(ValueError):
    pass


class Ordering(enum.Enum):
    EQUAL = "equal"
    BEFORE = "before"
    AFTER = "after"
    CONCURRENT = "concurrent"


_FROM_CODE = {
    kernels.EQUAL: Ordering.EQUAL,
    kernels.BEFORE: Ordering.BEFORE,
    kernels.AFTER: Ordering.AFTER,
    kernels.CONCURRENT: Ordering.CONCURRENT,
}


def zero(n: int) -> VectorClock:
    return (0,) * n


def tick(vc: VectorClock, pid: int) -> VectorClock:
    if not 0 <= pid < len(vc):
        raise BadProcessId(f"pid {pid} outside clock of length {len(vc)}")
    return vc[:pid] + (vc[pid] + 1,) + vc[pid + 1:]


def _check_lengths(a, b) -> None:
    if len(a) != len(b):
        raise LengthMismatch(f"clock lengths differ: {len(a)} vs {len(b)}")


def merge(a: VectorClock, b: VectorClock) -> VectorClock:
    """Componentwise maximum."""
    _check_lengths(a, b)
    return kernels.merge(a, b)


def compare(a: VectorClock, b: VectorClock) -> Ordering:
    _check_lengths(a, b)
    return _FROM_CODE[kernels.compare_code(a, b)]


def happened_before(a: VectorClock, b: VectorClock) -> bool:
    return compare(a, b) is Ordering.BEFORE


def format_clock(vc: VectorClock) -> str:
    """Trace-log form, e.g. ``[3,0,1]``."""
    return "[" + ",".join(str(x) for x in vc) + "]"


def parse_clock(text: str) -> VectorClock:
    text = text.strip()
    if not (text.startswith("[") and text.endswith("]")):
        raise ValueError(f"not a bracketed clock: {text!r}")
    body = text[1:-1].strip()
    if not body:
        return ()
    return tuple(int(x) for x in body.split(","))
