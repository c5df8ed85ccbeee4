"""Prior knowledge as required and forbidden edge assertions."""

from __future__ import annotations

import logging
from dataclasses import dataclass, field
from collections.abc import Sequence

from .errors import ConfigurationError
from .graph import Pdag, cpdag_from_dag

logger = logging.getLogger(__name__)


def _norm(a: int, b: int, directed: bool) -> tuple[int, int, bool]:
    if directed:
        return (a, b, True)
    return (min(a, b), max(a, b), False)


@dataclass(frozen=True)
class PriorKnowledge:
    """Required (``R``) and forbidden (``F``) edges.

    Each assertion is a triple ``(a, b, directed)``; undirected assertions are
    stored with ``a < b``.
    """

    required: frozenset = field(default_factory=frozenset)
    forbidden: frozenset = field(default_factory=frozenset)

    def __post_init__(self):
        req = frozenset(_norm(*r) for r in self.required)
        forb = frozenset(_norm(*f) for f in self.forbidden)
        clash = req & forb
        if clash:
            raise ConfigurationError(f"assertions both required and forbidden: {sorted(clash)}")
        object.__setattr__(self, "required", req)
        object.__setattr__(self, "forbidden", forb)

    @classmethod
    def from_edges(cls, required_directed=(), required_undirected=(),
                   forbidden_directed=(), forbidden_undirected=()) -> PriorKnowledge:
        req = [(a, b, True) for a, b in required_directed]
        req += [(a, b, False) for a, b in required_undirected]
        forb = [(a, b, True) for a, b in forbidden_directed]
        forb += [(a, b, False) for a, b in forbidden_undirected]
        return cls(frozenset(req), frozenset(forb))

    def __bool__(self):
        return bool(self.required or self.forbidden)

    def bucket(self, x: int, y: int) -> int:
        """Priority bucket (0-3) of the ordered pair ``(x, y)``."""
        und = (min(x, y), max(x, y), False)
        req = self.required
        if (x, y, True) in req or und in req:
            return 0
        if (y, x, True) in req:
            return 1
        forb = self.forbidden
        if (x, y, True) in forb or und in forb:
            return 3
        return 2


EMPTY_KNOWLEDGE = PriorKnowledge()


def parse_knowledge(text: str, names: Sequence[str]) -> PriorKnowledge:
    """Parse ``require A -> B`` / ``forbid A -- B`` directives.

    Blank lines and ``#`` comments are ignored. Unknown variables and
    malformed lines raise :class:`ConfigurationError` naming the line.
    """
    index = {n: i for i, n in enumerate(names)}
    req, forb = [], []
    for lineno, raw in enumerate(text.splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        toks = line.split()
        if len(toks) != 4 or toks[0] not in ("require", "forbid") or toks[2] not in ("->", "--"):
            raise ConfigurationError(f"line {lineno}: expected 'require|forbid A ->|-- B', got {raw!r}")
        verb, a, mark, b = toks
        for n in (a, b):
            if n not in index:
                raise ConfigurationError(f"line {lineno}: unknown variable {n!r}")
        if a == b:
            raise ConfigurationError(f"line {lineno}: self-loop {a} {mark} {b}")
        entry = (index[a], index[b], mark == "->")
        (req if verb == "require" else forb).append(entry)
    return PriorKnowledge(frozenset(req), frozenset(forb))


def knowledge_to_text(k: PriorKnowledge, names: Sequence[str]) -> str:
    lines = []
    for verb, group in (("require", k.required), ("forbid", k.forbidden)):
        for a, b, directed in sorted(group):
            lines.append(f"{verb} {names[a]} {'->' if directed else '--'} {names[b]}")
    return "\n".join(lines) + ("\n" if lines else "")


def get_priority_inserts(e: Pdag, knowledge: PriorKnowledge, pairs=None) -> list[list[tuple[int, int]]]:
    """Split non-adjacent ordered pairs into required, weakly required,
    ambivalent and forbidden buckets, each in row-major order."""
    from .operators import nonadjacent_pairs

    if pairs is None:
        pairs = nonadjacent_pairs(e)
    buckets = [[], [], [], []]
    if not knowledge:
        buckets[2] = list(pairs)
        return buckets
    for x, y in pairs:
        buckets[knowledge.bucket(x, y)].append((x, y))
    return buckets


def init_from_knowledge(p: int, knowledge: PriorKnowledge) -> Pdag:
    """CPDAG of a DAG containing every required edge that keeps it acyclic.

    Directed assertions are added first, then undirected ones are oriented in
    whichever direction avoids a cycle. Assertions that would close a cycle
    are dropped with a warning.
    """
    g = Pdag.empty(p)
    directed = sorted(r for r in knowledge.required if r[2])
    undirected = sorted(r for r in knowledge.required if not r[2])
    for a, b, _ in directed:
        if g.is_adjacent(a, b):
            logger.warning("required edge %d -> %d conflicts with an earlier assertion; dropped", a, b)
            continue
        cand = g.with_edits(add_directed=[(a, b)])
        if cand.is_dag():
            g = cand
        else:
            logger.warning("required edge %d -> %d would create a cycle; dropped", a, b)
    for a, b, _ in undirected:
        if g.is_adjacent(a, b):
            continue
        for u, v in ((a, b), (b, a)):
            cand = g.with_edits(add_directed=[(u, v)])
            if cand.is_dag():
                g = cand
                break
        else:
            logger.warning("required edge %d -- %d would create a cycle; dropped", a, b)
    return cpdag_from_dag(g)
