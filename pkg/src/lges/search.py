"""Greedy equivalence search and its less greedy variants.

Every algorithm here is an instance of a generic loop that repeatedly applies
a valid score-increasing operator to a CPDAG until none is returned. They
differ in phase structure and in how the insertion is picked:

* ``greedy`` - the highest-scoring valid insertion (classic GES);
* ``safe`` - fix one DAG ``G`` in the class and skip every pair ``(x, y)``
  for which adding ``x -> y`` to ``G`` would lower the score;
* ``conservative`` - like ``safe``, and additionally drop a pair entirely as
  soon as one of its insertions lowers the score.
"""

from __future__ import annotations

import hashlib
import json
import logging
import time
from dataclasses import dataclass, field
from itertools import groupby
from operator import itemgetter

import numpy as np

from . import kernels
from .errors import ConfigurationError, InternalConsistencyError, LgesError
from .graph import Pdag, pdag_to_dag
from .knowledge import EMPTY_KNOWLEDGE, PriorKnowledge, get_priority_inserts, init_from_knowledge
from .operators import (
    Delete,
    Insert,
    ScoredOp,
    Turn,
    apply,
    delete_candidates,
    insert_candidates,
    nonadjacent_pairs,
    turn_candidates,
)
from .score import DecomposableScore

logger = logging.getLogger(__name__)

ALGORITHMS = ("ges", "lges0", "lges", "lges+")
STRATEGIES = ("greedy", "safe", "conservative")
KNOWLEDGE_MODES = ("prioritize", "initialize", "none")


@dataclass
class SearchConfig:
    algorithm: str = "lges"
    insert_strategy: str | None = None
    init: Pdag | None = None
    knowledge: PriorKnowledge = EMPTY_KNOWLEDGE
    knowledge_mode: str = "prioritize"
    turning: bool = True
    hard_forbid: bool = False
    seed: int = 0
    max_steps: int | None = None

    def __post_init__(self):
        if self.algorithm not in ALGORITHMS:
            raise ConfigurationError(f"unknown algorithm {self.algorithm!r}")
        if self.insert_strategy is None:
            self.insert_strategy = "greedy" if self.algorithm == "ges" else "safe"
        if self.insert_strategy not in STRATEGIES:
            raise ConfigurationError(f"unknown insert strategy {self.insert_strategy!r}")
        if self.algorithm == "ges" and self.insert_strategy != "greedy":
            raise ConfigurationError("GES uses the greedy insert strategy")
        if self.algorithm != "ges" and self.insert_strategy == "greedy":
            raise ConfigurationError("LGES variants use the safe or conservative strategy")
        if self.knowledge_mode not in KNOWLEDGE_MODES:
            raise ConfigurationError(f"unknown knowledge mode {self.knowledge_mode!r}")

    @property
    def phases(self) -> tuple[str, ...]:
        if self.algorithm == "lges":
            return ("interleaved",)
        if self.algorithm == "lges+":
            return ("interleaved", "restart")
        if self.turning:
            return ("forward", "turning", "backward")
        return ("forward", "backward")


# --- trace --------------------------------------------------------------------


def state_id(e: Pdag) -> str:
    return hashlib.blake2b(e.amat.tobytes(), digest_size=6).hexdigest()


@dataclass
class TraceStep:
    step: int
    phase: str
    op: object
    delta: float
    state: str

    def to_record(self) -> dict:
        op = self.op
        rec = {"step": self.step, "phase": self.phase, "kind": op.kind, "x": op.x, "y": op.y}
        if isinstance(op, Turn):
            rec["h"] = list(op.h)
            rec["set"] = list(op.t)
        else:
            rec["set"] = list(op.nodes)
        rec["delta"] = self.delta
        rec["state"] = self.state
        return rec


@dataclass
class SearchTrace:
    """Ordered log of accepted operators plus counters."""

    steps: list = field(default_factory=list)
    skips: dict = field(default_factory=lambda: {"gate": 0, "discarded": 0})
    phase_seconds: dict = field(default_factory=dict)
    cache: dict = field(default_factory=dict)
    restarts: int = 0

    def record(self, phase: str, sop: ScoredOp, state: Pdag) -> None:
        self.steps.append(TraceStep(len(self.steps), phase, sop.op, sop.delta, state_id(state)))

    def add_time(self, phase: str, seconds: float) -> None:
        self.phase_seconds[phase] = self.phase_seconds.get(phase, 0.0) + seconds

    def replay(self, init: Pdag) -> Pdag:
        """Re-apply the logged operators from ``init``.

        Steps logged by restart attempts that were rejected are not in the
        log, so replay reproduces the returned graph.
        """
        e = init
        for s in self.steps:
            e = apply(e, s.op)
        return e

    def to_jsonl(self) -> str:
        return "".join(json.dumps(s.to_record()) + "\n" for s in self.steps)

    @staticmethod
    def ops_from_jsonl(text: str) -> list:
        ops = []
        for line in text.splitlines():
            if not line.strip():
                continue
            r = json.loads(line)
            if r["kind"] == "insert":
                ops.append(Insert(r["x"], r["y"], tuple(r["set"])))
            elif r["kind"] == "delete":
                ops.append(Delete(r["x"], r["y"], tuple(r["set"])))
            else:
                ops.append(Turn(r["x"], r["y"], tuple(r["h"]), tuple(r["set"])))
        return ops


class SearchAborted(LgesError, RuntimeError):
    """A search failed; ``trace`` holds the steps taken so far."""

    def __init__(self, msg, trace):
        super().__init__(msg)
        self.trace = trace


# --- operator selection -------------------------------------------------------


def _best(cands, score, sign=1):
    best = None
    best_delta = -float("inf")
    for x, y, s, cond in cands:
        d = sign * score.delta(y, cond, x)
        if d > best_delta:
            best_delta = d
            best = (x, y, s)
    return best, best_delta


def get_greedy_insert(e: Pdag, score: DecomposableScore, candidates=None) -> ScoredOp | None:
    """Highest-scoring valid insertion among ``candidates`` if it increases the score."""
    best, d = _best(insert_candidates(e, candidates), score)
    if best is None or d <= score.tolerance:
        return None
    return ScoredOp(Insert(*best), d)


def _gate(g, candidates, score, trace, memo):
    """Pairs ``(x, y)`` with ``x`` not a descendant of ``y`` in ``g`` whose
    edge ``x -> y`` would raise the score of ``g``.

    Gains depend only on ``y`` and its parents in ``g``, so ``memo`` keeps
    one gain column per ``(y, parents)``.
    """
    if not candidates:
        return []
    a = g.amat
    passing = np.empty(a.shape, dtype=bool)
    for y in range(g.p):
        key = (y, a[:, y].tobytes())
        col = memo.get(key)
        if col is None:
            with np.errstate(invalid="ignore"):
                col = memo[key] = score.gains(y, np.flatnonzero(a[:, y]).tolist()) > score.tolerance
        passing[:, y] = col
    ok = (passing & (kernels.descendant_matrix(a) == 0).T).tolist()
    kept = [c for c in candidates if ok[c[0]][c[1]]]
    if trace is not None:
        trace.skips["gate"] += len(candidates) - len(kept)
    return kept


def get_safe_insert(e: Pdag, g: Pdag, candidates, score: DecomposableScore,
                    trace: SearchTrace | None = None, memo: dict | None = None) -> ScoredOp | None:
    """Best insertion among pairs whose edge would raise the score of ``g``.

    ``g`` is a fixed DAG in the class of ``e``.
    """
    kept = _gate(g, candidates, score, trace, {} if memo is None else memo)
    best, d = _best(insert_candidates(e, kept), score)
    if best is None or d <= score.tolerance:
        return None
    return ScoredOp(Insert(*best), d)


def get_conservative_insert(e: Pdag, g: Pdag, candidates, score: DecomposableScore,
                            trace: SearchTrace | None = None, memo: dict | None = None) -> ScoredOp | None:
    """As :func:`get_safe_insert`, but a pair with any score-decreasing
    insertion is discarded outright."""
    kept = _gate(g, candidates, score, trace, {} if memo is None else memo)
    best = None
    best_delta = -float("inf")
    delta = score.delta
    for (x, y), group in groupby(insert_candidates(e, kept), key=itemgetter(0, 1)):
        pair_best = None
        pair_delta = -float("inf")
        for _, _, t, cond in group:
            d = delta(y, cond, x)
            if d < 0:
                pair_best = None
                if trace is not None:
                    trace.skips["discarded"] += 1
                break
            if d > pair_delta:
                pair_delta = d
                pair_best = (x, y, t)
        if pair_best is not None and pair_delta > best_delta:
            best_delta = pair_delta
            best = pair_best
    if best is None or best_delta <= score.tolerance:
        return None
    return ScoredOp(Insert(*best), best_delta)


def get_best_delete(e: Pdag, score: DecomposableScore, pairs=None) -> ScoredOp | None:
    best, d = _best(delete_candidates(e, pairs), score, sign=-1)
    if best is None or d <= score.tolerance:
        return None
    return ScoredOp(Delete(*best), d)


def get_best_turn(e: Pdag, score: DecomposableScore) -> ScoredOp | None:
    best = None
    best_delta = -float("inf")
    delta = score.delta
    last = None
    for x, y, h, dcond, t, icond in turn_candidates(e):
        # candidates come grouped by (x, y, H), which fixes the deletion part
        if last != (x, y, dcond):
            last = (x, y, dcond)
            removal = delta(x, dcond, y)
        d = delta(y, icond, x) - removal
        if d > best_delta:
            best_delta = d
            best = (x, y, h, t)
    if best is None or best_delta <= score.tolerance:
        return None
    return ScoredOp(Turn(*best), best_delta)


def _excluding(pairs, excluded):
    if not excluded:
        return pairs
    return [(x, y) for x, y in pairs if frozenset((x, y)) not in excluded]


class _Runner:
    """State shared by one search run: current CPDAG, trace, step budget."""

    def __init__(self, config: SearchConfig, score: DecomposableScore, init: Pdag,
                 trace: SearchTrace | None = None, excluded=frozenset()):
        self.config = config
        self.score = score
        self.e = init
        self.trace = trace if trace is not None else SearchTrace()
        self.excluded = excluded
        p = init.p
        self.budget = config.max_steps if config.max_steps is not None else max(10 * p * p, 20)
        self.applied = 0
        self.gate_memo = {}

    def accept(self, phase: str, sop: ScoredOp) -> None:
        self.applied += 1
        if self.applied > self.budget:
            raise SearchAborted(f"step budget of {self.budget} operators exceeded", self.trace)
        try:
            self.e = apply(self.e, sop.op)
        except InternalConsistencyError as exc:
            raise SearchAborted(str(exc), self.trace) from exc
        self.trace.record(phase, sop, self.e)

    def timed(self, phase, fn):
        t0 = time.perf_counter()
        try:
            return fn()
        finally:
            self.trace.add_time(phase, time.perf_counter() - t0)

    def insert_step(self) -> ScoredOp | None:
        """One prioritised insertion, or ``None`` when no bucket yields one."""
        cfg = self.config
        e = self.e
        pairs = _excluding(nonadjacent_pairs(e), self.excluded)
        knowledge = cfg.knowledge if cfg.knowledge_mode == "prioritize" else EMPTY_KNOWLEDGE
        buckets = get_priority_inserts(e, knowledge, pairs)
        if cfg.hard_forbid:
            buckets = buckets[:3]
        g = None if cfg.insert_strategy == "greedy" else pdag_to_dag(e)
        for cands in buckets:
            if not cands:
                continue
            if cfg.insert_strategy == "greedy":
                sop = get_greedy_insert(e, self.score, cands)
            elif cfg.insert_strategy == "safe":
                sop = get_safe_insert(e, g, cands, self.score, self.trace, self.gate_memo)
            else:
                sop = get_conservative_insert(e, g, cands, self.score, self.trace, self.gate_memo)
            if sop is not None:
                return sop
        return None

    def exhaust(self, phase: str, get) -> None:
        while True:
            sop = get()
            if sop is None:
                return
            self.accept(phase, sop)

    def forward(self):
        self.timed("forward", lambda: self.exhaust("forward", self.insert_step))

    def backward(self):
        self.timed("backward", lambda: self.exhaust("backward", lambda: get_best_delete(self.e, self.score)))

    def turning(self):
        self.timed("turning", lambda: self.exhaust("turning", lambda: get_best_turn(self.e, self.score)))

    def interleaved(self):
        while True:
            self.backward()
            if self.config.turning:
                self.turning()
            sop = self.timed("forward", self.insert_step)
            if sop is None:
                return
            self.accept("forward", sop)


def _initial_state(config: SearchConfig, p: int) -> Pdag:
    if config.init is not None:
        if config.init.p != p:
            raise ConfigurationError(f"initial graph has {config.init.p} nodes, score has {p}")
        return config.init
    if config.knowledge_mode == "initialize" and config.knowledge:
        return init_from_knowledge(p, config.knowledge)
    return Pdag.empty(p)


def _finish(runner: _Runner) -> tuple[Pdag, SearchTrace]:
    runner.trace.cache = runner.score.cache_info()
    return runner.e, runner.trace


# --- algorithms ---------------------------------------------------------------


def gges(score: DecomposableScore, init: Pdag, phases, get_operator,
         trace: SearchTrace | None = None, max_steps: int | None = None) -> Pdag:
    """Generic loop: for each phase, apply ``get_operator(e, phase)`` until it
    returns ``None``.

    ``phases`` is a sequence drawn from ``forward``, ``backward``, ``turning``
    and ``any``; ``get_operator`` may return any valid score-increasing
    operator of the requested kind.
    """
    cfg = SearchConfig(algorithm="lges", max_steps=max_steps)
    runner = _Runner(cfg, score, init, trace)
    for phase in phases:
        runner.exhaust(phase, lambda: get_operator(runner.e, phase))
    return runner.e


def ges(config: SearchConfig, score: DecomposableScore, trace: SearchTrace | None = None) -> Pdag:
    """Forward (greedy inserts), optional turning, then backward (greedy deletes)."""
    return _run_phased(config, score, trace)


def lges0(config: SearchConfig, score: DecomposableScore, trace: SearchTrace | None = None) -> Pdag:
    """Prioritised less greedy forward phase, then turning, then backward."""
    return _run_phased(config, score, trace)


def _run_phased(config, score, trace):
    runner = _Runner(config, score, _initial_state(config, score.p), trace)
    runner.forward()
    if config.turning:
        runner.turning()
    runner.backward()
    return _finish(runner)[0]


def lges(config: SearchConfig, score: DecomposableScore, trace: SearchTrace | None = None,
         init: Pdag | None = None, excluded=frozenset()) -> Pdag:
    """Exhaust deletions, then turns, then apply one prioritised insertion;
    repeat until no operator improves the score."""
    start = init if init is not None else _initial_state(config, score.p)
    runner = _Runner(config, score, start, trace, excluded)
    runner.interleaved()
    return _finish(runner)[0]


def lges_plus(config: SearchConfig, score: DecomposableScore, trace: SearchTrace | None = None) -> Pdag:
    """LGES with forced-deletion restarts.

    After LGES converges, the best remaining deletion is forced and LGES is
    rerun from there with insertions between the deleted pair excluded. The
    restarted result replaces the current one only if its total score is
    strictly higher; otherwise the next deletion is tried.
    """
    trace = trace if trace is not None else SearchTrace()
    e = lges(config, score, trace)
    current = score.total(pdag_to_dag(e))
    pending = _deletions(e, score)
    t0 = time.perf_counter()
    while pending:
        sop = pending.pop(0)
        forced = apply(e, sop.op)
        sub = SearchTrace()
        cand = lges(config, score, sub, init=forced, excluded=frozenset([frozenset((sop.op.x, sop.op.y))]))
        value = score.total(pdag_to_dag(cand))
        if value > current + score.tolerance:
            trace.record("restart", sop, forced)
            trace.steps.extend(
                TraceStep(len(trace.steps) + i, s.phase, s.op, s.delta, s.state)
                for i, s in enumerate(sub.steps)
            )
            trace.restarts += 1
            e, current = cand, value
            pending = _deletions(e, score)
    trace.add_time("restart", time.perf_counter() - t0)
    trace.cache = score.cache_info()
    return e


def _deletions(e, score):
    ops = [ScoredOp(Delete(x, y, h), -score.delta(y, cond, x)) for x, y, h, cond in delete_candidates(e)]
    # highest delta first; stable on canonical order for ties
    return sorted(ops, key=lambda s: -s.delta)


def run(config: SearchConfig, score: DecomposableScore) -> tuple[Pdag, SearchTrace]:
    """Dispatch on ``config.algorithm``; returns the CPDAG and its trace."""
    trace = SearchTrace()
    fn = {"ges": ges, "lges0": lges0, "lges": lges, "lges+": lges_plus}[config.algorithm]
    e = fn(config, score, trace)
    trace.cache = score.cache_info()
    return e, trace
