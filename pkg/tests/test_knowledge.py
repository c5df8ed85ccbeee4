import logging

import pytest

from lges.errors import ConfigurationError
from lges.graph import Pdag, cpdag_from_dag
from lges.knowledge import (
    EMPTY_KNOWLEDGE,
    PriorKnowledge,
    get_priority_inserts,
    init_from_knowledge,
    knowledge_to_text,
    parse_knowledge,
)
from lges.operators import nonadjacent_pairs

NAMES = ["A", "B", "C", "D"]
A, B, C, D = range(4)


def test_parse_and_round_trip():
    text = "# prior\nrequire A -> B\nforbid C -> D  # trailing\n\nrequire B -- C\n"
    k = parse_knowledge(text, NAMES)
    assert k.required == {(A, B, True), (B, C, False)}
    assert k.forbidden == {(C, D, True)}
    assert parse_knowledge(knowledge_to_text(k, NAMES), NAMES) == k


@pytest.mark.parametrize("text,msg", [
    ("require A => B", "line 1"),
    ("\nrequire A -> E", "line 2: unknown variable"),
    ("forbid A -- A", "self-loop"),
    ("insist A -> B", "line 1"),
])
def test_parse_errors(text, msg):
    with pytest.raises(ConfigurationError, match=msg):
        parse_knowledge(text, NAMES)


def test_clash_rejected():
    with pytest.raises(ConfigurationError):
        PriorKnowledge.from_edges(required_undirected=[(B, A)], forbidden_undirected=[(A, B)])


def test_bucket_example():
    k = PriorKnowledge.from_edges(required_directed=[(A, B)], forbidden_directed=[(C, D)])
    buckets = get_priority_inserts(Pdag.empty(4), k)
    where = {pair: i for i, b in enumerate(buckets) for pair in b}
    assert where[(A, B)] == 0
    assert where[(B, A)] == 1
    assert where[(C, D)] == 3
    assert where[(D, C)] == 2


def test_empty_knowledge_is_one_bucket():
    buckets = get_priority_inserts(Pdag.empty(4), EMPTY_KNOWLEDGE)
    assert buckets[0] == buckets[1] == buckets[3] == []
    assert len(buckets[2]) == 12


def test_undirected_requirement_covers_both_orders():
    k = PriorKnowledge.from_edges(required_undirected=[(B, A)])
    buckets = get_priority_inserts(Pdag.empty(4), k)
    assert (A, B) in buckets[0] and (B, A) in buckets[0]


def test_buckets_partition_nonadjacent_pairs():
    e = cpdag_from_dag(Pdag.from_edges(4, directed=[(A, B), (C, B)]))
    k = PriorKnowledge.from_edges(required_directed=[(A, C), (D, A)], forbidden_undirected=[(B, D)])
    buckets = get_priority_inserts(e, k)
    flat = [p for b in buckets for p in b]
    assert sorted(flat) == sorted(nonadjacent_pairs(e))
    assert len(flat) == len(set(flat))


def test_init_from_knowledge_drops_cycles(caplog):
    k = PriorKnowledge.from_edges(required_directed=[(A, B), (B, C), (C, A)], required_undirected=[(C, D)])
    with caplog.at_level(logging.WARNING):
        e = init_from_knowledge(4, k)
    assert "cycle" in caplog.text
    assert e.is_adjacent(A, B) and e.is_adjacent(B, C) and e.is_adjacent(C, D)
    assert not e.is_adjacent(C, A)
