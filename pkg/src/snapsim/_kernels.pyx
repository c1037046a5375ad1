# cython: language_level=3, boundscheck=False, wraparound=False
"""Compiled kernels for vector-clock arithmetic and the causal delivery scan.

Accepts the same Python sequences as the fallback module (tuples or lists of
ints) and converts entries to C longs on the fly.
"""

from heapq import heappop, heappush

cdef enum:
    EQUAL = 0
    BEFORE = -1
    AFTER = 1
    CONCURRENT = 2


cdef inline long _at(object seq, Py_ssize_t i):
    return <long>seq[i]


def merge(a, b):
    cdef Py_ssize_t n = len(a), i
    cdef long x, y
    out = [0] * n
    for i in range(n):
        x = _at(a, i)
        y = _at(b, i)
        out[i] = x if x >= y else y
    return tuple(out)


def compare_code(a, b):
    cdef Py_ssize_t n = len(a), i
    cdef bint le = True, ge = True
    cdef long x, y
    for i in range(n):
        x = _at(a, i)
        y = _at(b, i)
        if x < y:
            ge = False
        elif x > y:
            le = False
    if le and ge:
        return EQUAL
    if le:
        return BEFORE
    if ge:
        return AFTER
    return CONCURRENT


cdef bint _deliverable(object vc, Py_ssize_t s, object local, Py_ssize_t n):
    cdef Py_ssize_t k
    if _at(vc, s) != _at(local, s) + 1:
        return False
    for k in range(n):
        if k != s and _at(vc, k) > _at(local, k):
            return False
    return True


def bss_deliverable(msg_vc, Py_ssize_t sender, local):
    return _deliverable(msg_vc, sender, local, len(local))


def first_deliverable(local, list vcs, list senders):
    cdef Py_ssize_t n = len(local), m = len(vcs), i
    for i in range(m):
        if _deliverable(vcs[i], <Py_ssize_t>senders[i], local, n):
            return i
    return -1


def first_blocking(vc, Py_ssize_t sender, local, Py_ssize_t start):
    cdef Py_ssize_t n = len(local), k
    for k in range(start, n):
        if k != sender and _at(vc, k) > _at(local, k):
            return k
    return -1


cdef Py_ssize_t _first_blocking(object vc, Py_ssize_t sender, list local,
                                Py_ssize_t start, Py_ssize_t n):
    cdef Py_ssize_t k
    for k in range(start, n):
        if k != sender and _at(vc, k) > <long>local[k]:
            return k
    return -1


cdef class CausalBuffer:
    """Compiled twin of ``transport.CausalBuffer``; same delivery order."""

    cdef public list local
    cdef list _future
    cdef list _waiting
    cdef list _ready
    cdef Py_ssize_t _arrivals
    cdef Py_ssize_t _size
    cdef Py_ssize_t _n

    def __init__(self, Py_ssize_t n):
        self._n = n
        self.local = [0] * n
        self._future = [{} for _ in range(n)]
        self._waiting = [[] for _ in range(n)]
        self._ready = []
        self._arrivals = 0
        self._size = 0

    def __len__(self):
        return self._size

    @property
    def has_ready(self):
        return len(self._ready) > 0

    def add(self, env):
        cdef Py_ssize_t arrival = self._arrivals
        cdef Py_ssize_t s = env.src
        self._arrivals += 1
        self._size += 1
        vc = env.bss_vc
        seq = vc[s]
        if seq == self.local[s] + 1:
            self._check(arrival, env, 0)
        else:
            (<dict>self._future[s])[seq] = (arrival, env)

    cdef void _check(self, Py_ssize_t arrival, object env, Py_ssize_t start):
        vc = env.bss_vc
        cdef Py_ssize_t k = _first_blocking(vc, env.src, self.local, start, self._n)
        if k < 0:
            heappush(self._ready, (arrival, env))
        else:
            heappush(<list>self._waiting[k], (vc[k], arrival, env))

    def drain(self):
        cdef list out = []
        cdef list local = self.local
        cdef list ready = self._ready
        cdef list waiting
        cdef Py_ssize_t s
        cdef long level
        while ready:
            env = heappop(ready)[1]
            s = env.src
            level = env.bss_vc[s]
            local[s] = level
            self._size -= 1
            out.append(env)
            nxt = (<dict>self._future[s]).pop(level + 1, None)
            if nxt is not None:
                self._check(nxt[0], nxt[1], 0)
            waiting = <list>self._waiting[s]
            while waiting and waiting[0][0] <= level:
                item = heappop(waiting)
                self._check(item[1], item[2], s + 1)
        return out
