"""Command-line interface.

Subcommands: ``discover``, ``iorient``, ``simulate``, ``benchmark`` and
``metrics``. Exit status is 0 on success, 2 for bad input and 3 when an
internal invariant fails.
"""

from __future__ import annotations

import argparse
import csv
import gc
import json
import logging
import sys
import time
from concurrent.futures import ProcessPoolExecutor
from pathlib import Path

import numpy as np

from . import __version__
from .errors import ConfigurationError, InternalConsistencyError, LgesError
from .graph import Pdag, complete, cpdag_from_dag, pdag_to_dag, to_text
from .interventional import InterventionFamily, i_orient, load_manifest
from .io import file_digest, read_csv, read_graph, write_csv, write_graph, write_json
from .knowledge import EMPTY_KNOWLEDGE, knowledge_to_text, parse_knowledge
from .score import GaussianBIC, OracleScore, stats_from_data
from .search import ALGORITHMS, STRATEGIES, SearchAborted, SearchConfig, run
from .synth import er_dag, random_sem, sample_sem, shd

logger = logging.getLogger("lges")

EXIT_INPUT = 2
EXIT_INTERNAL = 3


def _out_dir(path) -> Path:
    out = Path(path)
    out.mkdir(parents=True, exist_ok=True)
    return out


def _truth_graphs(path, names):
    """Truth file as (DAG, CPDAG); a CPDAG input is extended first."""
    g, names = read_graph(path, names)
    dag = g if g.is_dag() else pdag_to_dag(g)
    return dag, cpdag_from_dag(dag), names


# --- discover -----------------------------------------------------------------


def cmd_discover(args) -> int:
    out = _out_dir(args.out)
    inputs = {}
    names = None
    data = None
    if args.data:
        names, data = read_csv(args.data)
        inputs["data"] = file_digest(args.data)
    truth_dag = truth = None
    if args.truth:
        truth_dag, truth, names = _truth_graphs(args.truth, names)
        inputs["truth"] = file_digest(args.truth)
    if names is None:
        raise ConfigurationError("give a data file, or --truth with --score oracle")
    knowledge = EMPTY_KNOWLEDGE
    if args.knowledge:
        knowledge = parse_knowledge(Path(args.knowledge).read_text(), names)
        inputs["knowledge"] = file_digest(args.knowledge)

    config = SearchConfig(
        algorithm=args.algorithm,
        insert_strategy=args.insert,
        knowledge=knowledge,
        knowledge_mode=args.knowledge_mode if args.knowledge else "none",
        turning=not args.no_turning,
        seed=args.seed,
    )
    if args.score == "oracle":
        if truth_dag is None:
            raise ConfigurationError("--score oracle needs --truth")
        score = OracleScore(truth_dag)
    else:
        if data is None:
            raise ConfigurationError("--score bic needs a data file")
        score = GaussianBIC(stats_from_data(data))

    t0 = time.perf_counter()
    e, trace = run(config, score)
    wall = time.perf_counter() - t0

    write_graph(out / "graph.txt", e, names)
    (out / "trace.log").write_text(trace.to_jsonl())
    record = {
        "command": "discover",
        "version": __version__,
        "seed": args.seed,
        "config": {
            "algorithm": config.algorithm,
            "insert": config.insert_strategy,
            "score": args.score,
            "knowledge_mode": config.knowledge_mode,
            "turning": config.turning,
        },
        "knowledge": knowledge_to_text(knowledge, names) if knowledge else "",
        "inputs": inputs,
        "wall_seconds": wall,
        "phase_seconds": trace.phase_seconds,
        "steps": len(trace.steps),
        "skips": trace.skips,
        "cache": trace.cache,
        "score_evaluations": score.evaluations,
    }
    if truth is not None:
        record["metrics"] = shd(e, truth).as_dict()
    write_json(out / "run.json", record)
    print(to_text(e, names), end="")
    return 0


# --- iorient ------------------------------------------------------------------


def cmd_iorient(args) -> int:
    out = _out_dir(args.out)
    e0, names = read_graph(args.graph)
    inputs = {"graph": file_digest(args.graph), "manifest": file_digest(args.manifest)}
    if args.truth:
        truth_dag, _, _ = _truth_graphs(args.truth, names)
        inputs["truth"] = file_digest(args.truth)
        targets = _manifest_targets(args.manifest, names)
        family = InterventionFamily.oracle(truth_dag, targets)
    else:
        mnames, targets, stats = load_manifest(args.manifest, read_csv)
        if mnames != names:
            raise ConfigurationError("manifest datasets and graph use different variables")
        family = InterventionFamily(targets, stats=stats)
    e0 = complete(e0)
    res = i_orient(e0, family)
    write_graph(out / "graph.txt", res.cpdag, names)
    (out / "orientation.tsv").write_text(res.report(names))
    write_json(out / "run.json", {
        "command": "iorient",
        "version": __version__,
        "inputs": inputs,
        "targets": [sorted(names[v] for v in t) for t in family.targets],
        "oriented": {k: sum(1 for v in res.oriented_by.values() if v == k)
                     for k in ("observational", "score-test", "meek")},
        "untested": len(res.untested),
    })
    print(to_text(res.cpdag, names), end="")
    return 0


def _manifest_targets(path, names):
    try:
        doc = json.loads(Path(path).read_text())
    except json.JSONDecodeError as exc:
        raise ConfigurationError(f"{path}: line {exc.lineno}: {exc.msg}") from exc
    entries = doc.get("entries") if isinstance(doc, dict) else doc
    if not isinstance(entries, list):
        raise ConfigurationError(f"{path}: expected a list of entries")
    index = {n: i for i, n in enumerate(names)}
    targets = []
    for i, entry in enumerate(entries):
        tn = entry.get("targets", []) if isinstance(entry, dict) else None
        if tn is None or any(t not in index for t in tn):
            raise ConfigurationError(f"{path}: entry {i}: unknown or malformed targets")
        targets.append(frozenset(index[t] for t in tn))
    return targets


# --- simulate -----------------------------------------------------------------


def _streams(seed, p, density, n):
    ss = np.random.SeedSequence([seed, p, int(round(density * 1000)), n])
    return [np.random.Generator(np.random.PCG64(s)) for s in ss.spawn(3)]


def simulate_problem(p, density, n, seed):
    """Truth DAG, SEM and observational sample for one benchmark cell."""
    rg, rw, rs = _streams(seed, p, density, n)
    g = er_dag(p, density * p, rng=rg)
    model = random_sem(g, rng=rw)
    return g, model, sample_sem(model, n, rng=rs)


def cmd_simulate(args) -> int:
    out = _out_dir(args.out)
    names = [f"X{i}" for i in range(args.p)]
    g, model, data = simulate_problem(args.p, args.density, args.n, args.seed)
    write_csv(out / "data.csv", names, data)
    write_graph(out / "truth.txt", g, names)
    entries = [{"targets": [], "data": "data.csv"}]
    index = {nm: i for i, nm in enumerate(names)}
    for k, spec in enumerate(args.target or []):
        tnames = [t for t in spec.split(",") if t]
        unknown = [t for t in tnames if t not in index]
        if unknown:
            raise ConfigurationError(f"--target: unknown variable(s) {unknown}")
        rng = np.random.Generator(np.random.PCG64([args.seed, 7919, k]))
        xs = sample_sem(model, args.n_int or args.n, rng=rng, target=[index[t] for t in tnames])
        fname = f"int{k}.csv"
        write_csv(out / fname, names, xs)
        entries.append({"targets": tnames, "data": fname})
    write_json(out / "manifest.json", entries)
    write_json(out / "params.json", {
        "version": __version__, "p": args.p, "density": args.density, "n": args.n,
        "seed": args.seed, "edges": g.num_edges(),
        "weights": model.weights.tolist(), "noise_means": model.noise_means.tolist(),
        "noise_vars": model.noise_vars.tolist(),
    })
    return 0


# --- benchmark ----------------------------------------------------------------

BENCH_COLUMNS = ["algorithm", "insert", "p", "density", "n", "seed", "status", "shd", "f1",
                 "precision", "recall", "excess", "missing", "wrong", "wall_ms", "score_evals"]


def parse_algorithm(spec: str) -> tuple[str, str | None]:
    alg, _, ins = spec.partition(":")
    if alg not in ALGORITHMS or (ins and ins not in STRATEGIES):
        raise ConfigurationError(f"bad algorithm spec {spec!r}; use e.g. ges, lges:conservative")
    return alg, ins or None


def run_cell(p, density, n, seed, algorithms, turning=True) -> list[dict]:
    """Simulate one problem and run every algorithm on it."""
    rows = []
    g, _, data = simulate_problem(p, density, n, seed)
    truth = cpdag_from_dag(g)
    stats = stats_from_data(data)
    for spec in algorithms:
        alg, ins = parse_algorithm(spec)
        cfg = SearchConfig(algorithm=alg, insert_strategy=ins, turning=turning, seed=seed)
        row = {"algorithm": alg, "insert": cfg.insert_strategy, "p": p, "density": density,
               "n": n, "seed": seed}
        score = GaussianBIC(stats)
        gc.collect()
        t0 = time.perf_counter()
        try:
            e, _ = run(cfg, score)
        except LgesError as exc:
            row.update(status=f"error: {exc}")
            rows.append(row)
            continue
        wall = time.perf_counter() - t0
        m = shd(e, truth)
        row.update(status="ok", shd=m.shd, f1=round(m.f1, 6), precision=round(m.precision, 6),
                   recall=round(m.recall, 6), excess=m.excess_adj, missing=m.missing_adj,
                   wrong=m.wrong_orient, wall_ms=round(wall * 1000, 3),
                   score_evals=score.evaluations)
        rows.append(row)
    return rows


def _seed_list(spec: str) -> list[int]:
    seeds = []
    for part in spec.split(","):
        a, _, b = part.partition("-")
        seeds.extend(range(int(a), int(b) + 1) if b else [int(a)])
    return seeds


def cmd_benchmark(args) -> int:
    out = _out_dir(args.out)
    algorithms = args.algorithms
    for spec in algorithms:
        parse_algorithm(spec)
    cells = [(p, d, n, s) for p in args.p for d in args.density for n in args.n
             for s in _seed_list(args.seeds)]
    results = []
    if args.jobs > 1:
        with ProcessPoolExecutor(max_workers=args.jobs) as pool:
            futs = [pool.submit(run_cell, *c, algorithms, not args.no_turning) for c in cells]
            for c, f in zip(cells, futs):
                try:
                    results.extend(f.result())
                except Exception as exc:  # keep the sweep going
                    results.append(_failed_row(c, exc))
    else:
        for c in cells:
            try:
                results.extend(run_cell(*c, algorithms, not args.no_turning))
            except Exception as exc:
                results.append(_failed_row(c, exc))
    with (out / "results.csv").open("w", newline="") as fh:
        w = csv.DictWriter(fh, fieldnames=BENCH_COLUMNS)
        w.writeheader()
        for r in results:
            w.writerow(r)
    write_json(out / "run.json", {"command": "benchmark", "version": __version__,
                                  "cells": len(cells), "algorithms": algorithms})
    return 0


def _failed_row(cell, exc):
    p, d, n, s = cell
    return {"algorithm": "", "p": p, "density": d, "n": n, "seed": s, "status": f"error: {exc}"}


# --- metrics ------------------------------------------------------------------


def _as_compared(g: Pdag) -> Pdag:
    # DAGs are compared through their CPDAG; other graphs as written
    return cpdag_from_dag(g) if g.is_dag() else g


def cmd_metrics(args) -> int:
    est, names = read_graph(args.estimate)
    truth, _ = read_graph(args.truth, names)
    m = shd(_as_compared(est), _as_compared(truth))
    print(json.dumps(m.as_dict(), sort_keys=True))
    return 0


# --- entry point --------------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="lges", description="Less greedy equivalence search.")
    ap.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    ap.add_argument("-v", "--verbose", action="store_true")
    sub = ap.add_subparsers(dest="command", required=True)

    d = sub.add_parser("discover", help="learn a CPDAG from data")
    d.add_argument("data", nargs="?", help="CSV with a header row")
    d.add_argument("--algorithm", choices=ALGORITHMS, default="lges")
    d.add_argument("--insert", choices=STRATEGIES, default=None)
    d.add_argument("--score", choices=("bic", "oracle"), default="bic")
    d.add_argument("--truth", help="true graph; enables the oracle score and metrics")
    d.add_argument("--knowledge", help="file of require/forbid directives")
    d.add_argument("--knowledge-mode", choices=("prioritize", "initialize"), default="prioritize")
    d.add_argument("--prioritize-knowledge", dest="knowledge_mode", action="store_const",
                   const="prioritize", help="alias for --knowledge-mode prioritize")
    d.add_argument("--init-from-knowledge", dest="knowledge_mode", action="store_const",
                   const="initialize", help="alias for --knowledge-mode initialize")
    d.add_argument("--no-turning", action="store_true")
    d.add_argument("--seed", type=int, default=0)
    d.add_argument("--out", default="out")
    d.set_defaults(func=cmd_discover)

    i = sub.add_parser("iorient", help="orient a CPDAG with interventional data")
    i.add_argument("graph")
    i.add_argument("manifest")
    i.add_argument("--truth", help="use oracle deltas from this DAG")
    i.add_argument("--out", default="out")
    i.set_defaults(func=cmd_iorient)

    s = sub.add_parser("simulate", help="generate an ER linear-Gaussian dataset")
    s.add_argument("--p", type=int, required=True)
    s.add_argument("--density", type=float, default=2.0, help="expected edges per node")
    s.add_argument("--n", type=int, default=10000)
    s.add_argument("--target", action="append", help="comma-separated intervention target")
    s.add_argument("--n-int", type=int, default=None, help="samples per intervention")
    s.add_argument("--seed", type=int, default=0)
    s.add_argument("--out", default="out")
    s.set_defaults(func=cmd_simulate)

    b = sub.add_parser("benchmark", help="sweep algorithms over simulated problems")
    b.add_argument("--p", type=int, nargs="+", required=True)
    b.add_argument("--density", type=float, nargs="+", default=[2.0])
    b.add_argument("--n", type=int, nargs="+", default=[10000])
    b.add_argument("--algorithms", nargs="+", default=["ges", "lges:conservative"])
    b.add_argument("--seeds", default="0")
    b.add_argument("--jobs", type=int, default=1)
    b.add_argument("--no-turning", action="store_true")
    b.add_argument("--out", default="out")
    b.set_defaults(func=cmd_benchmark)

    m = sub.add_parser("metrics", help="SHD and precision/recall between two graphs")
    m.add_argument("estimate")
    m.add_argument("truth")
    m.set_defaults(func=cmd_metrics)
    return ap


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s: %(message)s")
    try:
        return args.func(args)
    except (InternalConsistencyError, SearchAborted) as exc:
        print(f"lges: internal error: {exc}", file=sys.stderr)
        return EXIT_INTERNAL
    except (LgesError, OSError) as exc:
        print(f"lges: {exc}", file=sys.stderr)
        return EXIT_INPUT


if __name__ == "__main__":
    sys.exit(main())
