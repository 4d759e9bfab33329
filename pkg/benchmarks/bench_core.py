"""Time the compiled pair sum against the numpy fallback.

    python benchmarks/bench_core.py [--repeat 5] [--out bench.csv]
"""

import argparse
import csv
import sys
import timeit

import numpy as np

from noncutoff import _core_py, core
from noncutoff.norms import VelocityGrid

CASES = [(2, 32), (2, 64), (2, 128), (3, 16), (3, 32)]


def bench(repeat):
    rng = np.random.default_rng(0)
    rows = []
    for n, N in CASES:
        g = VelocityGrid(n, N, 8.0)
        V = g.points
        F = rng.normal(size=V.shape[:-1])
        P = rng.random(V.shape[:-1])
        args = (F, P, V, g.h, 0.5, g.h)
        t_py = min(timeit.repeat(lambda: _core_py.nsg_pair_sum(*args), number=1, repeat=repeat))
        if core.BACKEND == "cython":
            t_cy = min(timeit.repeat(lambda: core.nsg_pair_sum(*args), number=1, repeat=repeat))
            rel = abs(core.nsg_pair_sum(*args) / _core_py.nsg_pair_sum(*args) - 1)
        else:
            t_cy, rel = float("nan"), float("nan")
        rows.append({"n": n, "N": N, "python_s": t_py, "compiled_s": t_cy,
                     "speedup": t_py / t_cy, "rel_diff": rel})
    return rows


def main(argv=None):
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--repeat", type=int, default=5)
    ap.add_argument("--out", default=None)
    a = ap.parse_args(argv)
    rows = bench(a.repeat)
    out = open(a.out, "w", newline="") if a.out else sys.stdout
    w = csv.DictWriter(out, fieldnames=list(rows[0]))
    w.writeheader()
    w.writerows(rows)
    if a.out:
        out.close()
    if core.BACKEND != "cython":
        print("compiled core not built; only the numpy timings are meaningful", file=sys.stderr)


if __name__ == "__main__":
    main()
