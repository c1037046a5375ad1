"""Pure-Python kernels. Must stay semantically identical to ``_kernels.pyx``.

Callers validate lengths; these functions assume equal-length sequences.
"""

EQUAL = 0
BEFORE = -1
AFTER = 1
CONCURRENT = 2


def merge(a, b):
    return tuple([x if x >= y else y for x, y in zip(a, b)])


def compare_code(a, b):
    le = ge = True
    for x, y in zip(a, b):
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


def bss_deliverable(msg_vc, sender, local):
    if msg_vc[sender] != local[sender] + 1:
        return False
    for k in range(len(local)):
        if k != sender and msg_vc[k] > local[k]:
            return False
    return True


def first_deliverable(local, vcs, senders):
    """Index of the first ``(vcs[i], senders[i])`` that is deliverable, or -1."""
    for i in range(len(vcs)):
        vc = vcs[i]
        s = senders[i]
        if vc[s] != local[s] + 1:
            continue
        for k in range(len(local)):
            if k != s and vc[k] > local[k]:
                break
        else:
            return i
    return -1


def first_blocking(vc, sender, local, start):
    """First index ``k >= start``, ``k != sender``, with ``vc[k] > local[k]``; -1 if none."""
    for k in range(start, len(local)):
        if vc[k] > local[k] and k != sender:
            return k
    return -1
