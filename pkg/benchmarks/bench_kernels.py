"""Compare the numba and pure-Python GED kernels on random scene-graph pairs.

    python benchmarks/bench_kernels.py [--pairs 50] [--repeat 3]
"""

import argparse
import time

import numpy as np

from oar_link.ged import ged
from oar_link.graph import ObjectNode, OarGraph, RelationEdge
from oar_link.kernels import jit_kernels, python_kernels


def random_graph(rng, n, m, n_cat=6, n_pred=4):
    nodes = [ObjectNode(i, int(rng.integers(n_cat)), None if rng.random() < 0.5 else int(rng.integers(3)))
             for i in range(n)]
    pairs = [(a, b) for a in range(n) for b in range(n) if a != b]
    m = min(m, len(pairs))
    idx = rng.choice(len(pairs), size=m, replace=False) if m else []
    edges = [RelationEdge(*pairs[k], int(rng.integers(n_pred))) for k in idx]
    return OarGraph(nodes, edges)


def workload(seed, pairs, n, m):
    rng = np.random.default_rng(seed)
    return [(random_graph(rng, n, m), random_graph(rng, n, m)) for _ in range(pairs)]


def bench(pairs, method, backend, repeat):
    best = float("inf")
    for _ in range(repeat):
        t0 = time.perf_counter()
        out = [ged(a, b, method=method, backend=backend).raw for a, b in pairs]
        best = min(best, time.perf_counter() - t0)
    return best, out


def main():
    ap = argparse.ArgumentParser()
    ap.add_argument("--pairs", type=int, default=50)
    ap.add_argument("--repeat", type=int, default=3)
    ap.add_argument("--seed", type=int, default=0)
    args = ap.parse_args()

    py, jit = python_kernels(), jit_kernels()
    # warm-up compiles (or loads from cache) outside the timed region
    bench(workload(99, 2, 4, 3), "exact", jit, 1)
    bench(workload(99, 2, 8, 6), "approx", jit, 1)

    cases = [("exact 5+5", "exact", 5, 6), ("exact 6+6", "exact", 6, 8), ("approx 15+15", "approx", 15, 15)]
    print(f"{'case':<14}{'python s':>10}{'numba s':>10}{'speedup':>9}  agree")
    for name, method, n, m in cases:
        pairs = workload(args.seed, args.pairs, n, m)
        t_py, r_py = bench(pairs, method, py, args.repeat)
        t_jit, r_jit = bench(pairs, method, jit, args.repeat)
        agree = np.allclose(r_py, r_jit)
        print(f"{name:<14}{t_py:>10.3f}{t_jit:>10.3f}{t_py / t_jit:>9.1f}  {agree}")


if __name__ == "__main__":
    main()
