"""Compiled kernels against the pure-Python fallback.

Times each hot kernel on CPDAGs of random ER graphs, then one end-to-end
search per backend (the fallback is forced in a subprocess through
``LGES_PURE_PYTHON=1``).

    python3 benchmarks/bench_kernels.py [--p 10 25 50] [--repeat 5] [--search-p 25]
"""

import argparse
import json
import os
import subprocess
import sys
import timeit

import numpy as np

from lges import _kernels_py as py
from lges.graph import cpdag_from_dag
from lges.operators import edge_pairs, nonadjacent_pairs
from lges.synth import er_dag

try:
    from lges import _kernels as cy
except ImportError:
    sys.exit("compiled extension not built; run `pip install -e .` first")

SEARCH_SNIPPET = """
import json, time
from lges.cli import simulate_problem
from lges.kernels import BACKEND
from lges.score import GaussianBIC, stats_from_data
from lges.search import SearchConfig, run
_, _, x = simulate_problem({p}, 2.0, 10000, 0)
stats = stats_from_data(x)
out = {{}}
for alg, ins in (("ges", None), ("lges", "conservative")):
    t0 = time.perf_counter()
    run(SearchConfig(alg, ins), GaussianBIC(stats))
    out[alg] = time.perf_counter() - t0
print(json.dumps({{"backend": BACKEND, **out}}))
"""


def _cases(p, seed=0):
    e = cpdag_from_dag(er_dag(p, 2 * p, seed=seed))
    a = np.ascontiguousarray(e.amat)
    dag = np.ascontiguousarray(cy.pdag_to_dag(a))
    ins = nonadjacent_pairs(e)
    dels = edge_pairs(e)
    turns = sorted((u, v) for v, u in dels)
    rng = np.random.default_rng(seed)
    x = rng.standard_normal((2000, p))
    cov = np.ascontiguousarray(x.T @ x)
    parents = sorted(rng.choice(p - 1, min(4, p - 1), replace=False).tolist())
    y = p - 1
    return {
        "pdag_to_dag": lambda m: m.pdag_to_dag(a),
        "cpdag_from_dag": lambda m: m.cpdag_from_dag(dag),
        "insert_candidates": lambda m: m.insert_candidates(a, ins),
        "delete_candidates": lambda m: m.delete_candidates(a, dels),
        "turn_candidates": lambda m: m.turn_candidates(a, turns),
        "d_reachable": lambda m: m.d_reachable(dag, 0, parents),
        "descendant_matrix": lambda m: m.descendant_matrix(dag),
        "residual_variance": lambda m: m.residual_variance(cov, y, parents),
    }


def _best(fn, repeat):
    timer = timeit.Timer(fn)
    number, _ = timer.autorange()
    return min(timer.repeat(repeat, number)) / number


def bench_kernels(ps, repeat):
    print(f"{'kernel':<20}{'p':>4}{'cython us':>12}{'python us':>12}{'speedup':>9}")
    for p in ps:
        for name, fn in _cases(p).items():
            tc = _best(lambda: fn(cy), repeat)
            tp = _best(lambda: fn(py), repeat)
            print(f"{name:<20}{p:>4}{tc * 1e6:>12.1f}{tp * 1e6:>12.1f}{tp / tc:>8.1f}x")


def bench_search(p):
    print(f"\nend-to-end search, ER2, p={p}, n=10000 (seconds)")
    for forced in ("0", "1"):
        env = dict(os.environ, LGES_PURE_PYTHON=forced)
        out = subprocess.run([sys.executable, "-c", SEARCH_SNIPPET.format(p=p)], env=env,
                             capture_output=True, text=True, check=True)
        r = json.loads(out.stdout)
        print(f"  {r['backend']:<8} GES {r['ges']:.2f}   LGES(Conservative) {r['lges']:.2f}")


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--p", type=int, nargs="+", default=[10, 25, 50])
    ap.add_argument("--repeat", type=int, default=5)
    ap.add_argument("--search-p", type=int, default=25, help="0 skips the end-to-end run")
    args = ap.parse_args()
    bench_kernels(args.p, args.repeat)
    if args.search_p:
        bench_search(args.search_p)


if __name__ == "__main__":
    main()
