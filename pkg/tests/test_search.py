import numpy as np
import pytest

import oracles
from lges.errors import ConfigurationError
from lges.graph import Pdag, cpdag_from_dag, mec_equal, pdag_to_dag
from lges.knowledge import PriorKnowledge
from lges.operators import apply, delete_operators, insert_operators, turn_operators
from lges.score import GaussianBIC, OracleScore, stats_from_data
from lges.search import (
    SearchAborted,
    SearchConfig,
    SearchTrace,
    _Runner,
    get_conservative_insert,
    get_greedy_insert,
    get_safe_insert,
    gges,
    run,
)
from lges.synth import er_dag, random_sem, sample_sem

DAGS4 = [Pdag(a) for a in oracles.all_dags(4)]

# X1, X2, Y, Z with X1 -> Z <- X2 and Z -> Y
X1, X2, Y, Z = range(4)
TRUTH = Pdag.from_edges(4, directed=[(X1, Z), (X2, Z), (Z, Y)])
E1 = Pdag.from_edges(4, undirected=[(Z, Y)])
G1 = Pdag.from_edges(4, directed=[(Z, Y)])
G2 = Pdag.from_edges(4, directed=[(Y, Z)])


def _recovers(cfg, truth):
    e, _ = run(cfg, OracleScore(truth))
    return e == cpdag_from_dag(truth)


# --- configuration ----------------------------------------------------------------


def test_config_defaults_and_validation():
    assert SearchConfig("ges").insert_strategy == "greedy"
    assert SearchConfig("lges").insert_strategy == "safe"
    for bad in [dict(algorithm="pc"), dict(algorithm="ges", insert_strategy="safe"),
                dict(algorithm="lges", insert_strategy="greedy"), dict(knowledge_mode="maybe")]:
        with pytest.raises(ConfigurationError):
            SearchConfig(**bad)


# --- insertion strategies on the worked example ----------------------------------


def test_greedy_never_picks_the_score_decreasing_insert():
    sop = get_greedy_insert(E1, OracleScore(TRUTH))
    assert sop.delta > 0
    assert not (sop.op.x == X1 and sop.op.y == Y and sop.op.t == (Z,))


def test_conservative_discards_pair_with_decreasing_insert():
    score = OracleScore(TRUTH)
    # G2 passes the marginal check, yet Insert(X1, Y, {Z}) lowers the score
    trace = SearchTrace()
    assert get_conservative_insert(E1, G2, [(X1, Y)], score, trace) is None
    assert trace.skips["discarded"] == 1
    assert get_conservative_insert(E1, G1, [(X1, Y)], score) is None


def test_safe_insert_depends_on_chosen_dag():
    score = OracleScore(TRUTH)
    assert get_safe_insert(E1, G1, [(X1, Y)], score) is None
    sop = get_safe_insert(E1, G2, [(X1, Y)], score)
    assert sop is not None and (sop.op.x, sop.op.y) == (X1, Y) and sop.delta > 0


def test_two_node_insert():
    truth = Pdag.from_edges(2, directed=[(0, 1)])
    sop = get_greedy_insert(Pdag.empty(2), OracleScore(truth))
    assert (sop.op.x, sop.op.y, sop.op.t, sop.delta) in [(0, 1, (), 1.0), (1, 0, (), 1.0)]


def test_no_insert_at_truth_or_under_independence():
    score = OracleScore(TRUTH)
    e = cpdag_from_dag(TRUTH)
    g = pdag_to_dag(e)
    pairs = [(x, y) for x in range(4) for y in range(4) if x != y and not e.is_adjacent(x, y)]
    assert get_greedy_insert(e, score) is None
    assert get_safe_insert(e, g, pairs, score) is None
    empty = OracleScore(Pdag.empty(3))
    all_pairs = [(x, y) for x in range(3) for y in range(3) if x != y]
    assert get_conservative_insert(Pdag.empty(3), Pdag.empty(3), all_pairs, empty) is None


def test_conservative_single_dependent_pair_takes_best_t():
    rng = np.random.default_rng(0)
    x = rng.standard_normal((2000, 3))
    x[:, 1] += 0.8 * x[:, 0]
    bic = GaussianBIC(stats_from_data(x))
    sop = get_conservative_insert(Pdag.empty(3), Pdag.empty(3), [(0, 1), (1, 0)], bic)
    best = max(so.delta for so in insert_operators(Pdag.empty(3), bic, [(0, 1), (1, 0)]))
    assert sop is not None and sop.delta == pytest.approx(best)


# --- exact recovery under the oracle ----------------------------------------------


@pytest.mark.parametrize("alg,ins", [("ges", None), ("lges0", "safe"), ("lges", "safe"), ("lges+", "safe")])
def test_oracle_recovery_exhaustive(alg, ins):
    cfg = SearchConfig(alg, ins)
    assert all(_recovers(cfg, t) for t in DAGS4)


def test_empty_truth_and_truth_init():
    assert run(SearchConfig("ges"), OracleScore(Pdag.empty(4)))[0] == Pdag.empty(4)
    for t in DAGS4[::17]:
        e = cpdag_from_dag(t)
        for alg in ("ges", "lges"):
            out, trace = run(SearchConfig(alg, init=e), OracleScore(t))
            assert out == e and not trace.steps


def test_lges_plus_matches_lges_under_oracle():
    for t in DAGS4[::9]:
        a, _ = run(SearchConfig("lges"), OracleScore(t))
        b, _ = run(SearchConfig("lges+"), OracleScore(t))
        assert mec_equal(a, b)


def test_conservative_keeps_skeleton_within_truth():
    # exact recovery is not required of the conservative variant; no excess adjacency is
    for t in DAGS4:
        e, _ = run(SearchConfig("lges", "conservative"), OracleScore(t))
        assert oracles.skeleton(e.amat) <= oracles.skeleton(t.amat)


def _random_operator(rng):
    def pick(e, phase):
        score = pick.score
        cands = insert_operators(e, score) + delete_operators(e, score) + turn_operators(e, score)
        cands = [c for c in cands if c.delta > score.tolerance]
        return cands[rng.integers(len(cands))] if cands else None
    return pick


def test_random_operator_policy_recovers_truth():
    for seed in range(10):
        rng = np.random.default_rng(seed)
        for t in DAGS4[seed::10]:
            pick = _random_operator(rng)
            pick.score = OracleScore(t)
            out = gges(pick.score, Pdag.empty(4), ["any"], pick)
            assert out == cpdag_from_dag(t)


def test_safe_and_greedy_agree_on_existence():
    for t in DAGS4[::2]:
        score = OracleScore(t)
        _, trace = run(SearchConfig("lges"), score)
        e = Pdag.empty(4)
        states = [e]
        for s in trace.steps:
            e = apply(e, s.op)
            states.append(e)
        for e in states:
            pairs = [(x, y) for x in range(4) for y in range(4) if x != y and not e.is_adjacent(x, y)]
            safe = get_safe_insert(e, pdag_to_dag(e), pairs, score)
            assert (safe is None) == (get_greedy_insert(e, score) is None)


def test_forward_phase_leaves_an_imap():
    for t in DAGS4:
        score = OracleScore(t)
        runner = _Runner(SearchConfig("lges0", "conservative"), score, Pdag.empty(4))
        runner.forward()
        g = pdag_to_dag(runner.e)
        assert score.is_imap(g)
        assert oracles.skeleton(t.amat) <= oracles.skeleton(runner.e.amat)


# --- knowledge --------------------------------------------------------------------


def test_wrong_knowledge_does_not_change_oracle_output():
    rng = np.random.default_rng(1)
    for t in DAGS4[::5]:
        plain, _ = run(SearchConfig("lges"), OracleScore(t))
        # every true edge required backwards and forbidden as it is, plus random noise
        forb = {(a, b, True) for a, b in t.directed_edges()}
        req = {(b, a, True) for a, b in t.directed_edges()}
        req |= {(int(a), int(b), bool(rng.integers(2))) for a, b in rng.integers(0, 4, (3, 2)) if a != b}
        req = {r for r in req if (r[0], r[1], True) not in forb}
        k = PriorKnowledge(frozenset(req), frozenset(forb))
        out, _ = run(SearchConfig("lges", knowledge=k), OracleScore(t))
        assert mec_equal(out, plain)


def test_initialize_mode_starts_from_required_edges():
    from lges.search import _initial_state

    k = PriorKnowledge.from_edges(required_directed=[(0, 1), (2, 1)])
    e = _initial_state(SearchConfig("ges", knowledge=k, knowledge_mode="initialize"), 3)
    assert e == Pdag.from_edges(3, directed=[(0, 1), (2, 1)])
    e = _initial_state(SearchConfig("ges", knowledge=k, knowledge_mode="prioritize"), 3)
    assert e == Pdag.empty(3)


# --- finite-sample behaviour ------------------------------------------------------


@pytest.fixture(scope="module")
def sample():
    g = er_dag(8, 12, seed=4)
    x = sample_sem(random_sem(g, seed=5), 2000, seed=6)
    return g, stats_from_data(x), x


@pytest.mark.parametrize("alg,ins", [("ges", None), ("lges0", "safe"), ("lges", "conservative"), ("lges+", "safe")])
def test_trace_replay_and_monotone_score(sample, alg, ins):
    _, stats, x = sample
    score = GaussianBIC(stats)
    e, trace = run(SearchConfig(alg, ins), score)
    assert trace.replay(Pdag.empty(8)) == e
    cur = Pdag.empty(8)
    for s in trace.steps:
        nxt = apply(cur, s.op)
        if s.phase != "restart":
            assert s.delta > score.tolerance
            gain = oracles.bic_total_lstsq(x, pdag_to_dag(nxt).amat) - oracles.bic_total_lstsq(x, pdag_to_dag(cur).amat)
            assert gain == pytest.approx(s.delta, abs=1e-6)
        cur = nxt
    ops = SearchTrace.ops_from_jsonl(trace.to_jsonl())
    assert ops == [s.op for s in trace.steps]


def test_runs_are_deterministic(sample):
    _, stats, _ = sample
    a, ta = run(SearchConfig("lges", "conservative"), GaussianBIC(stats))
    b, tb = run(SearchConfig("lges", "conservative"), GaussianBIC(stats))
    assert a == b and ta.to_jsonl() == tb.to_jsonl()


def test_step_budget_aborts(sample):
    _, stats, _ = sample
    with pytest.raises(SearchAborted) as info:
        run(SearchConfig("ges", max_steps=3), GaussianBIC(stats))
    assert len(info.value.trace.steps) == 3


def test_init_size_mismatch(sample):
    _, stats, _ = sample
    with pytest.raises(ConfigurationError):
        run(SearchConfig("lges", init=Pdag.empty(3)), GaussianBIC(stats))
