"""Partially directed acyclic graphs over indexed nodes.

A :class:`Pdag` wraps a read-only ``uint8`` mark matrix ``amat`` where
``amat[i, j] == 1`` denotes a mark ``i -> j``. Directed edges set one entry,
undirected edges set both. DAGs and CPDAGs are Pdags satisfying extra
invariants; see :meth:`Pdag.is_dag` and :func:`is_cpdag`.
"""

from __future__ import annotations

from collections.abc import Iterable, Sequence

import numpy as np

from . import kernels
from .errors import InvalidGraphError, NoExtensionError


class Pdag:
    """Immutable partially directed graph on nodes ``0..p-1``."""

    __slots__ = ("amat", "_views")

    def __init__(self, amat):
        a = np.array(amat, dtype=np.uint8, copy=True)
        if a.ndim != 2 or a.shape[0] != a.shape[1]:
            raise InvalidGraphError(f"adjacency matrix must be square, got shape {a.shape}")
        if np.any(a > 1):
            raise InvalidGraphError("adjacency matrix entries must be 0 or 1")
        if np.any(np.diag(a)):
            raise InvalidGraphError("self-loops are not allowed")
        a = np.ascontiguousarray(a)
        a.setflags(write=False)
        self.amat = a
        self._views = {}

    @classmethod
    def _trusted(cls, a) -> Pdag:
        # skips validation; ``a`` must be a fresh 0/1 uint8 matrix
        obj = cls.__new__(cls)
        a = np.ascontiguousarray(a, dtype=np.uint8)
        a.setflags(write=False)
        obj.amat = a
        obj._views = {}
        return obj

    @classmethod
    def empty(cls, p: int) -> Pdag:
        return cls(np.zeros((p, p), dtype=np.uint8))

    @classmethod
    def from_edges(cls, p: int, directed: Iterable = (), undirected: Iterable = ()) -> Pdag:
        a = np.zeros((p, p), dtype=np.uint8)
        for u, v in directed:
            if a[u, v] or a[v, u]:
                raise InvalidGraphError(f"duplicate edge between {u} and {v}")
            a[u, v] = 1
        for u, v in undirected:
            if a[u, v] or a[v, u]:
                raise InvalidGraphError(f"duplicate edge between {u} and {v}")
            a[u, v] = a[v, u] = 1
        return cls(a)

    @property
    def p(self) -> int:
        return self.amat.shape[0]

    def __eq__(self, other):
        if not isinstance(other, Pdag):
            return NotImplemented
        return self.amat.shape == other.amat.shape and bool(np.array_equal(self.amat, other.amat))

    def __hash__(self):
        return hash((self.p, self.amat.tobytes()))

    def __repr__(self):
        parts = [f"{u}->{v}" for u, v in self.directed_edges()]
        parts += [f"{u}--{v}" for u, v in self.undirected_edges()]
        return f"Pdag(p={self.p}, [{', '.join(parts)}])"

    def _view(self, key):
        views = self._views
        if key not in views:
            a = self.amat
            at = a.T
            if key == "pa":
                m = (at == 1) & (a == 0)
            elif key == "ch":
                m = (a == 1) & (at == 0)
            elif key == "ne":
                m = (a == 1) & (at == 1)
            else:
                m = (a == 1) | (at == 1)
            views[key] = tuple(frozenset(np.flatnonzero(row).tolist()) for row in m)
        return views[key]

    def parents(self, v: int) -> frozenset:
        return self._view("pa")[v]

    def children(self, v: int) -> frozenset:
        return self._view("ch")[v]

    def neighbors(self, v: int) -> frozenset:
        """Undirected neighbours."""
        return self._view("ne")[v]

    def adjacent(self, v: int) -> frozenset:
        return self._view("adj")[v]

    def is_adjacent(self, u: int, v: int) -> bool:
        return bool(self.amat[u, v] or self.amat[v, u])

    def has_directed(self, u: int, v: int) -> bool:
        return bool(self.amat[u, v] and not self.amat[v, u])

    def has_undirected(self, u: int, v: int) -> bool:
        return bool(self.amat[u, v] and self.amat[v, u])

    def directed_edges(self) -> list[tuple[int, int]]:
        rows, cols = np.nonzero((self.amat == 1) & (self.amat.T == 0))
        return list(zip(rows.tolist(), cols.tolist()))

    def undirected_edges(self) -> list[tuple[int, int]]:
        rows, cols = np.nonzero(np.triu((self.amat == 1) & (self.amat.T == 1)))
        return list(zip(rows.tolist(), cols.tolist()))

    def num_edges(self) -> int:
        return int(np.count_nonzero(self.amat | self.amat.T)) // 2

    def skeleton(self) -> frozenset:
        rows, cols = np.nonzero(np.triu(self.amat | self.amat.T))
        return frozenset(zip(rows.tolist(), cols.tolist()))

    def v_structures(self) -> frozenset:
        """Triples ``(a, c, b)`` with ``a -> c <- b``, ``a < b`` non-adjacent."""
        res = set()
        for c in range(self.p):
            pa = sorted(self.parents(c))
            for i, a in enumerate(pa):
                for b in pa[i + 1:]:
                    if not self.is_adjacent(a, b):
                        res.add((a, c, b))
        return frozenset(res)

    def is_dag(self) -> bool:
        if np.any(self.amat & self.amat.T):
            return False
        return self.topological_order() is not None

    def topological_order(self) -> list[int] | None:
        """Topological order of the directed part, or ``None`` when cyclic."""
        d = (self.amat == 1) & (self.amat.T == 0)
        indeg = d.sum(axis=0).tolist()
        ready = sorted(i for i in range(self.p) if indeg[i] == 0)
        order = []
        while ready:
            v = ready.pop(0)
            order.append(v)
            for w in np.flatnonzero(d[v]).tolist():
                indeg[w] -= 1
                if indeg[w] == 0:
                    ready.append(w)
            ready.sort()
        return order if len(order) == self.p else None

    def descendants(self, v: int) -> frozenset:
        """Nodes reachable from ``v`` by directed paths, excluding ``v``."""
        views = self._views
        key = ("de", v)
        if key not in views:
            seen = set()
            stack = [v]
            while stack:
                u = stack.pop()
                for w in self.children(u):
                    if w not in seen:
                        seen.add(w)
                        stack.append(w)
            seen.discard(v)
            views[key] = frozenset(seen)
        return views[key]

    def non_descendants(self, v: int) -> frozenset:
        return frozenset(range(self.p)) - self.descendants(v) - {v}

    def with_edits(self, add_directed=(), add_undirected=(), remove=()) -> Pdag:
        """Return a copy with pairs in ``remove`` cleared, then edges added."""
        a = np.array(self.amat, copy=True)
        for u, v in remove:
            a[u, v] = a[v, u] = 0
        for u, v in add_directed:
            a[u, v] = 1
            a[v, u] = 0
        for u, v in add_undirected:
            a[u, v] = a[v, u] = 1
        return Pdag(a)


def _require_dag(g: Pdag) -> None:
    if not g.is_dag():
        raise InvalidGraphError("expected a DAG (no undirected edges, no directed cycle)")


def cpdag_from_dag(g: Pdag) -> Pdag:
    """CPDAG of the Markov equivalence class of ``g``."""
    _require_dag(g)
    return Pdag(kernels.cpdag_from_dag(g.amat))


def pdag_to_dag(e: Pdag) -> Pdag:
    """A consistent extension of ``e``.

    Raises
    ------
    NoExtensionError
        If ``e`` admits no consistent extension.
    """
    res = kernels.pdag_to_dag(e.amat)
    if res is None:
        raise NoExtensionError("PDAG admits no consistent extension")
    return Pdag._trusted(res)


def meek_close(e: Pdag) -> Pdag:
    return Pdag(kernels.meek_close(e.amat))


def complete(e: Pdag) -> Pdag:
    """CPDAG represented by a (possibly non-completed) PDAG: extend, then complete."""
    res = kernels.pdag_to_dag(e.amat)
    if res is None:
        raise NoExtensionError("PDAG admits no consistent extension")
    return Pdag._trusted(kernels.cpdag_from_dag(res))


def is_cpdag(e: Pdag) -> bool:
    res = kernels.pdag_to_dag(e.amat)
    if res is None:
        return False
    return bool(np.array_equal(kernels.cpdag_from_dag(res), e.amat))


def d_separated(g: Pdag, x: int, y: int, z: Iterable[int] = ()) -> bool:
    """Whether ``x`` and ``y`` are d-separated given ``z`` in the DAG ``g``."""
    z = list(z)
    if x == y or x in z or y in z:
        raise ValueError("x and y must be distinct and outside the conditioning set")
    return y not in kernels.d_reachable(g.amat, x, z)


def semi_directed_paths_blocked(e: Pdag, y: int, x: int, blocker: Iterable[int] = ()) -> bool:
    """True iff every semi-directed path from ``y`` to ``x`` meets ``blocker``."""
    return bool(kernels.semi_directed_blocked(e.amat, y, x, list(blocker)))


def is_clique(e: Pdag, nodes: Iterable[int]) -> bool:
    return bool(kernels.is_clique(e.amat, sorted(set(nodes))))


def mec_equal(e1: Pdag, e2: Pdag) -> bool:
    """Exact equality of two CPDAGs."""
    if not (is_cpdag(e1) and is_cpdag(e2)):
        raise InvalidGraphError("mec_equal expects CPDAG inputs")
    return e1 == e2


def consistent_extensions(e: Pdag) -> list[Pdag]:
    """All DAGs in the equivalence class of the CPDAG ``e`` (brute force).

    Enumerates orientations of the undirected edges and keeps the acyclic ones
    whose CPDAG is ``e``. Exponential; intended for small tests.
    """
    und = e.undirected_edges()
    if len(und) > 20:
        raise ValueError("too many undirected edges to enumerate")
    base = e.with_edits(remove=und)
    out = []
    for bits in range(1 << len(und)):
        dirs = [(u, v) if (bits >> i) & 1 else (v, u) for i, (u, v) in enumerate(und)]
        g = base.with_edits(add_directed=dirs)
        if g.is_dag() and cpdag_from_dag(g) == e:
            out.append(g)
    return out


# --- text formats -----------------------------------------------------------


def to_text(e: Pdag, names: Sequence[str] | None = None) -> str:
    """Edge-list text: ``A -> B`` and ``A -- B`` lines, sorted by index."""
    names = list(names) if names is not None else [f"X{i}" for i in range(e.p)]
    lines = [f"# nodes: {' '.join(names)}"]
    edges = [(u, v, "->") for u, v in e.directed_edges()]
    edges += [(u, v, "--") for u, v in e.undirected_edges()]
    for u, v, mark in sorted(edges):
        lines.append(f"{names[u]} {mark} {names[v]}")
    return "\n".join(lines) + "\n"


def from_text(text: str, names: Sequence[str] | None = None) -> tuple[Pdag, list[str]]:
    """Parse the edge-list format.

    When ``names`` is omitted the node table is taken from a ``# nodes:``
    header, falling back to order of first appearance.
    """
    header = None
    parsed = []
    for lineno, raw in enumerate(text.splitlines(), 1):
        line = raw.strip()
        if not line:
            continue
        if line.startswith("#"):
            body = line[1:].strip()
            if body.startswith("nodes:"):
                header = body[len("nodes:"):].split()
            continue
        toks = line.split()
        if len(toks) != 3 or toks[1] not in ("->", "--"):
            raise InvalidGraphError(f"line {lineno}: expected 'A -> B' or 'A -- B', got {raw!r}")
        parsed.append((lineno, toks[0], toks[1], toks[2]))
    if names is None:
        names = header
    if names is None:
        names = []
        for _, a, _, b in parsed:
            for n in (a, b):
                if n not in names:
                    names.append(n)
    names = list(names)
    index = {n: i for i, n in enumerate(names)}
    directed, undirected = [], []
    for lineno, a, mark, b in parsed:
        if a not in index or b not in index:
            raise InvalidGraphError(f"line {lineno}: unknown variable in {a} {mark} {b}")
        (directed if mark == "->" else undirected).append((index[a], index[b]))
    try:
        return Pdag.from_edges(len(names), directed, undirected), names
    except InvalidGraphError as exc:
        raise InvalidGraphError(f"invalid graph: {exc}") from None


def to_dot(e: Pdag, names: Sequence[str] | None = None) -> str:
    names = list(names) if names is not None else [f"X{i}" for i in range(e.p)]
    lines = ["digraph G {"]
    for n in names:
        lines.append(f'  "{n}";')
    for u, v in e.directed_edges():
        lines.append(f'  "{names[u]}" -> "{names[v]}";')
    for u, v in e.undirected_edges():
        lines.append(f'  "{names[u]}" -> "{names[v]}" [dir=none];')
    lines.append("}")
    return "\n".join(lines) + "\n"
