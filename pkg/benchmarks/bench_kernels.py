"""Compiled kernels vs the pure-Python fallback.

Micro kernels are timed in-process against both modules. End-to-end runs
go through a subprocess per backend, since the backend is picked at import.

    python3 benchmarks/bench_kernels.py [--repeat N]
"""

import argparse
import json
import os
import random
import subprocess
import sys
import timeit

from snapsim import _kernels_py

try:
    from snapsim import _kernels
except ImportError:
    _kernels = None

END_TO_END = """
import json, time
from snapsim import kernels
from snapsim.harness import ExperimentConfig, run_experiment
out = {"backend": kernels.BACKEND}
for algo in ("chandy-lamport", "lai-yang", "mattern", "abav"):
    best = float("inf")
    for _ in range(%d):
        t = time.perf_counter()
        run_experiment(ExperimentConfig(algorithm=algo, seed=7))
        best = min(best, time.perf_counter() - t)
    out[algo] = best
print(json.dumps(out))
"""


def micro_cases(n=90, seed=1):
    rng = random.Random(seed)
    a = tuple(rng.randrange(20) for _ in range(n))
    b = tuple(rng.randrange(20) for _ in range(n))
    local = list(a)
    vc = list(a)
    vc[3] += 1
    vcs = [tuple(x + (i == j) for j, x in enumerate(a)) for i in range(n)]
    senders = list(range(n))
    return {
        "merge": lambda k: k.merge(a, b),
        "compare_code": lambda k: k.compare_code(a, b),
        "bss_deliverable": lambda k: k.bss_deliverable(vc, 3, local),
        "first_deliverable": lambda k: k.first_deliverable(local, vcs[::-1], senders[::-1]),
    }


def bench_micro(repeat):
    rows = []
    for name, fn in micro_cases().items():
        number = 20000
        times = {}
        for label, mod in (("python", _kernels_py), ("cython", _kernels)):
            if mod is None:
                continue
            t = min(timeit.repeat(lambda: fn(mod), number=number, repeat=repeat))
            times[label] = t / number * 1e6
        rows.append((name, times))
    return rows


def bench_end_to_end(repeat):
    results = []
    for pure in ("1", "0"):
        env = dict(os.environ, SNAPSIM_PURE=pure)
        proc = subprocess.run([sys.executable, "-c", END_TO_END % repeat], env=env,
                              capture_output=True, text=True, check=True)
        results.append(json.loads(proc.stdout))
    return results


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--repeat", type=int, default=5)
    args = ap.parse_args()
    if _kernels is None:
        print("compiled extension not built; only the fallback is timed")

    print("micro kernels, N=90 vectors (us per call)")
    print(f"{'kernel':<20}{'python':>10}{'cython':>10}{'speedup':>10}")
    for name, t in bench_micro(args.repeat):
        py, cy = t.get("python"), t.get("cython")
        speed = f"{py / cy:.1f}x" if cy else "-"
        print(f"{name:<20}{py:>10.3f}{(cy or float('nan')):>10.3f}{speed:>10}")

    print("\nfull run, N=90, 10 messages/host (best of %d, seconds)" % args.repeat)
    runs = bench_end_to_end(args.repeat)
    by_backend = {r.pop("backend"): r for r in runs}
    py, cy = by_backend.get("python", {}), by_backend.get("cython", {})
    print(f"{'algorithm':<20}{'python':>10}{'cython':>10}{'speedup':>10}")
    for algo in py:
        c = cy.get(algo)
        speed = f"{py[algo] / c:.1f}x" if c else "-"
        print(f"{algo:<20}{py[algo]:>10.3f}{(c or float('nan')):>10.3f}{speed:>10}")


if __name__ == "__main__":
    main()
