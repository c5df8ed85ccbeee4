import numpy as np
import pytest

import oracles
from lges import operators as ops
from lges.errors import InvalidOperatorError
from lges.graph import Pdag, cpdag_from_dag, is_cpdag, pdag_to_dag
from lges.operators import Delete, Insert, Turn
from lges.score import GaussianBIC, stats_from_data


def _cpdags4():
    seen = {}
    for a in oracles.all_dags(4):
        e = cpdag_from_dag(Pdag(a))
        seen.setdefault(e.amat.tobytes(), e)
    return list(seen.values())


CPDAGS4 = _cpdags4()


def _data(p, seed, n=400):
    rng = np.random.default_rng(seed)
    w = np.triu(rng.uniform(-1, 1, (p, p)) * (rng.random((p, p)) < 0.5), 1)
    x = rng.standard_normal((n, p)) @ np.linalg.inv(np.eye(p) - w)
    return x


def _brute_total(data, e):
    g = oracles.any_extension(e.amat) if e.p <= 6 else pdag_to_dag(e).amat
    assert g is not None and oracles.markov_equivalent(g, pdag_to_dag(e).amat)
    return oracles.bic_total_lstsq(data, g)


def test_class_count():
    assert len(CPDAGS4) == 185


def test_insert_and_delete_sets_match_definition_exhaustive():
    for e in CPDAGS4:
        got_i = {(x, y, tuple(t)) for x, y, t, _ in ops.insert_candidates(e)}
        got_d = {(x, y, tuple(h)) for x, y, h, _ in ops.delete_candidates(e)}
        assert got_i == oracles.valid_inserts(e.amat)
        assert got_d == oracles.valid_deletes(e.amat)
        for x, y, t in got_i:
            assert ops.insert_valid(e, Insert(x, y, t))


def test_deltas_match_brute_force_exhaustive():
    data = _data(4, 0)
    bic = GaussianBIC(stats_from_data(data))
    for e in CPDAGS4:
        base = _brute_total(data, e)
        for so in ops.insert_operators(e, bic) + ops.delete_operators(e, bic) + ops.turn_operators(e, bic):
            res = ops.apply(e, so.op)
            assert is_cpdag(res)
            assert so.delta == pytest.approx(_brute_total(data, res) - base, abs=1e-7)


def test_insert_result_skeleton_exhaustive():
    for e in CPDAGS4:
        for x, y, t, _ in ops.insert_candidates(e):
            res = ops.apply(e, Insert(x, y, t))
            assert oracles.skeleton(res.amat) == oracles.skeleton(e.amat) | {(min(x, y), max(x, y))}
        for x, y, h, _ in ops.delete_candidates(e):
            res = ops.apply(e, Delete(x, y, h))
            assert oracles.skeleton(res.amat) == oracles.skeleton(e.amat) - {(min(x, y), max(x, y))}


@pytest.mark.parametrize("p", [8, 12])
def test_deltas_and_completedness_random(p):
    rng = np.random.default_rng(p)
    data = _data(p, p, n=300)
    bic = GaussianBIC(stats_from_data(data))
    for _ in range(8):
        e = cpdag_from_dag(Pdag(oracles.random_dag(p, 2.5 / p, rng)))
        base = _brute_total(data, e)
        cands = ops.insert_operators(e, bic) + ops.delete_operators(e, bic) + ops.turn_operators(e, bic)
        picks = rng.choice(len(cands), min(25, len(cands)), replace=False)
        for k in picks:
            so = cands[k]
            res = ops.apply(e, so.op)
            assert is_cpdag(res)
            assert so.delta == pytest.approx(_brute_total(data, res) - base, abs=1e-7)


def test_turn_is_composite():
    data = _data(5, 4)
    bic = GaussianBIC(stats_from_data(data))
    e = cpdag_from_dag(Pdag.from_edges(5, directed=[(0, 2), (1, 2), (2, 3), (3, 4)]))
    turns = ops.turn_operators(e, bic)
    assert turns
    for so in turns:
        assert ops.turn_valid(e, so.op)
        assert so.delta == pytest.approx(ops.turn_delta(e, bic, so.op))


def test_bad_delete_raises():
    e = Pdag.empty(3)
    with pytest.raises(InvalidOperatorError):
        ops.delete_valid(e, Delete(0, 1))


def test_check_invariants_flag(monkeypatch):
    monkeypatch.setattr(ops, "CHECK_INVARIANTS", True)
    e = cpdag_from_dag(Pdag.from_edges(3, directed=[(0, 1), (2, 1)]))
    with pytest.raises(InvalidOperatorError):
        ops.apply(e, Insert(0, 2, (1,)))
    assert is_cpdag(ops.apply(e, Delete(0, 1)))


def test_turn_requires_reversible_edge():
    e = cpdag_from_dag(Pdag.from_edges(3, directed=[(0, 1), (2, 1)]))
    assert not ops.turn_valid(e, Turn(0, 1))
