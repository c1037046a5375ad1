import itertools
import random

import pytest
from hypothesis import given, strategies as st

from snapsim import clocks
from snapsim.clocks import BadProcessId, LengthMismatch, Ordering
from helpers import random_execution
from snapsim.metrics import HappenedBefore


def test_tick():
    assert clocks.tick((0, 0, 0), 1) == (0, 1, 0)
    assert clocks.tick((2, 5, 1), 0) == (3, 5, 1)
    with pytest.raises(BadProcessId):
        clocks.tick((7,), 3)


def test_merge():
    assert clocks.merge((1, 4), (3, 2)) == (3, 4)
    v = (5, 0, 2)
    assert clocks.merge(v, v) == v
    with pytest.raises(LengthMismatch):
        clocks.merge((0, 0), (0, 0, 0))


def test_compare():
    assert clocks.compare((1, 2), (2, 2)) is Ordering.BEFORE
    assert clocks.compare((2, 2), (1, 2)) is Ordering.AFTER
    assert clocks.compare((1, 0), (0, 1)) is Ordering.CONCURRENT
    assert clocks.compare((3, 3), (3, 3)) is Ordering.EQUAL
    with pytest.raises(LengthMismatch):
        clocks.compare((1,), (1, 2))


def test_trace_format_roundtrip():
    assert clocks.format_clock((3, 0, 1)) == "[3,0,1]"
    assert clocks.parse_clock("[3,0,1]") == (3, 0, 1)


vectors = st.integers(1, 6).flatmap(
    lambda n: st.tuples(*[st.lists(st.integers(0, 20), min_size=n, max_size=n).map(tuple)] * 3))


@given(vectors)
def test_merge_is_a_semilattice(abc):
    a, b, c = abc
    assert clocks.merge(a, b) == clocks.merge(b, a)
    assert clocks.merge(clocks.merge(a, b), c) == clocks.merge(a, clocks.merge(b, c))
    assert clocks.merge(a, a) == a


@given(vectors, st.data())
def test_tick_raises_exactly_one_entry(abc, data):
    a = abc[0]
    pid = data.draw(st.integers(0, len(a) - 1))
    t = clocks.tick(a, pid)
    diffs = [i for i in range(len(a)) if t[i] != a[i]]
    assert diffs == [pid] and t[pid] == a[pid] + 1
    assert clocks.compare(a, t) is Ordering.BEFORE


@given(vectors)
def test_kernel_backends_agree(abc):
    from snapsim import _kernels_py
    try:
        from snapsim import _kernels
    except ImportError:
        return
    a, b, _ = abc
    assert _kernels.merge(a, b) == _kernels_py.merge(a, b)
    assert _kernels.compare_code(a, b) == _kernels_py.compare_code(a, b)


def test_vector_clocks_agree_with_happened_before_oracle():
    rng = random.Random(2024)
    for _ in range(60):
        n = rng.randint(1, 6)
        log, vcs = random_execution(rng, n, rng.randint(1, 60))
        hb = HappenedBefore(log)
        for i, j in itertools.permutations(range(len(log)), 2):
            assert (clocks.compare(vcs[i], vcs[j]) is Ordering.BEFORE) == hb(i, j)
