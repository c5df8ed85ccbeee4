"""Insert, Delete and Turn operators on CPDAGs.

Validity conditions follow Chickering (2002): ``Insert(x, y, T)`` needs
``NA_yx | T`` to be a clique and every semi-directed path from ``y`` to ``x``
to pass through it; ``Delete(x, y, H)`` needs ``NA_yx \\ H`` to be a clique.
Here ``NA_yx`` is the set of undirected neighbours of ``y`` adjacent to ``x``.

``Turn(x, y, H, T)`` reverses the edge between ``x`` and ``y`` into
``x -> y`` as the composite ``Delete(y, x, H)`` followed by ``Insert(x, y, T)``
on the intermediate state.

Applying an operator edits the PDAG as the definitions state, then
recompletes it: consistent extension, v-structures, Meek closure.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Union

import numpy as np

from . import kernels
from .errors import InternalConsistencyError, InvalidOperatorError, NoExtensionError
from .graph import Pdag, complete, is_cpdag
from .score import DecomposableScore

#: when set, :func:`apply` re-validates operators and checks completedness
CHECK_INVARIANTS = False


@dataclass(frozen=True)
class Insert:
    x: int
    y: int
    t: tuple = ()

    kind = "insert"

    @property
    def nodes(self):
        return self.t


@dataclass(frozen=True)
class Delete:
    x: int
    y: int
    h: tuple = ()

    kind = "delete"

    @property
    def nodes(self):
        return self.h


@dataclass(frozen=True)
class Turn:
    x: int
    y: int
    h: tuple = ()
    t: tuple = ()

    kind = "turn"

    @property
    def nodes(self):
        return self.t


Operator = Union[Insert, Delete, Turn]


@dataclass(frozen=True)
class ScoredOp:
    op: Operator
    delta: float


def _na(e: Pdag, x: int, y: int) -> frozenset:
    return e.neighbors(y) & e.adjacent(x)


def nonadjacent_pairs(e: Pdag) -> list[tuple[int, int]]:
    """Ordered non-adjacent pairs ``(x, y)``, ``x != y``, in row-major order."""
    a = e.amat
    free = ((a | a.T) == 0)
    np.fill_diagonal(free, False)
    rows, cols = np.nonzero(free)
    return list(zip(rows.tolist(), cols.tolist()))


def edge_pairs(e: Pdag) -> list[tuple[int, int]]:
    """Ordered pairs ``(x, y)`` with ``x -> y`` or ``x - y``, row-major."""
    rows, cols = np.nonzero(e.amat)
    return list(zip(rows.tolist(), cols.tolist()))


# --- Insert -------------------------------------------------------------------


def insert_valid(e: Pdag, op: Insert) -> bool:
    x, y, t = op.x, op.y, set(op.t)
    if x == y or e.is_adjacent(x, y):
        return False
    if not t <= (e.neighbors(y) - e.adjacent(x)):
        return False
    base = _na(e, x, y) | t
    if not kernels.is_clique(e.amat, sorted(base)):
        return False
    return bool(kernels.semi_directed_blocked(e.amat, y, x, sorted(base)))


def insert_conditioning_set(e: Pdag, op: Insert) -> tuple:
    return tuple(sorted(_na(e, op.x, op.y) | set(op.t) | e.parents(op.y)))


def insert_delta(e: Pdag, score: DecomposableScore, op: Insert) -> float:
    """``s(y, NA | T | Pa_y | {x}) - s(y, NA | T | Pa_y)``."""
    return score.delta(op.y, insert_conditioning_set(e, op), op.x)


# --- Delete -------------------------------------------------------------------


def _require_edge(e: Pdag, x: int, y: int) -> None:
    if not (e.has_directed(x, y) or e.has_undirected(x, y)):
        raise InvalidOperatorError(f"no edge {x} -> {y} or {x} - {y} to delete")


def delete_valid(e: Pdag, op: Delete) -> bool:
    _require_edge(e, op.x, op.y)
    na = _na(e, op.x, op.y)
    h = set(op.h)
    if not h <= na:
        return False
    return bool(kernels.is_clique(e.amat, sorted(na - h)))


def delete_conditioning_set(e: Pdag, op: Delete) -> tuple:
    rest = _na(e, op.x, op.y) - set(op.h)
    return tuple(sorted((rest | e.parents(op.y)) - {op.x}))


def delete_delta(e: Pdag, score: DecomposableScore, op: Delete) -> float:
    """``s(y, (NA \\ H) | Pa_y \\ {x}) - s(y, (NA \\ H) | Pa_y | {x})``."""
    _require_edge(e, op.x, op.y)
    return -score.delta(op.y, delete_conditioning_set(e, op), op.x)


# --- Turn ---------------------------------------------------------------------


def _turn_parts(op: Turn) -> tuple[Delete, Insert]:
    return Delete(op.y, op.x, op.h), Insert(op.x, op.y, op.t)


def turn_valid(e: Pdag, op: Turn) -> bool:
    if not (e.has_directed(op.y, op.x) or e.has_undirected(op.x, op.y)):
        return False
    d, i = _turn_parts(op)
    if not delete_valid(e, d):
        return False
    mid = apply(e, d)
    return insert_valid(mid, i)


def turn_delta(e: Pdag, score: DecomposableScore, op: Turn) -> float:
    d, i = _turn_parts(op)
    mid = apply(e, d)
    if not insert_valid(mid, i):
        raise InvalidOperatorError(f"turn {op} leaves no valid insertion")
    return delete_delta(e, score, d) + insert_delta(mid, score, i)


# --- application --------------------------------------------------------------


def _edit(e: Pdag, op) -> Pdag:
    a = np.array(e.amat, copy=True)
    if isinstance(op, Insert):
        a[op.x, op.y] = 1
        for t in op.t:
            a[t, op.y] = 1
            a[op.y, t] = 0
    else:
        a[op.x, op.y] = a[op.y, op.x] = 0
        for h in op.h:
            if a[op.x, h] and a[h, op.x]:
                a[h, op.x] = 0
            if a[op.y, h] and a[h, op.y]:
                a[h, op.y] = 0
    return Pdag._trusted(a)


def apply(e: Pdag, op: Operator) -> Pdag:
    """Apply ``op`` to the CPDAG ``e`` and return the resulting CPDAG."""
    if isinstance(op, Turn):
        d, i = _turn_parts(op)
        return apply(apply(e, d), i)
    if CHECK_INVARIANTS:
        ok = insert_valid(e, op) if isinstance(op, Insert) else delete_valid(e, op)
        if not ok:
            raise InvalidOperatorError(f"{op} is not valid for {e}")
    try:
        res = complete(_edit(e, op))
    except NoExtensionError as exc:
        raise InternalConsistencyError(f"applying {op} produced a non-extendable PDAG") from exc
    if CHECK_INVARIANTS and not is_cpdag(res):
        raise InternalConsistencyError(f"applying {op} produced a non-completed graph")
    return res


# --- enumeration --------------------------------------------------------------


def insert_candidates(e: Pdag, pairs=None) -> list[tuple]:
    """Raw valid inserts ``(x, y, T, cond)`` in canonical order."""
    if pairs is None:
        pairs = nonadjacent_pairs(e)
    return kernels.insert_candidates(e.amat, pairs)


def delete_candidates(e: Pdag, pairs=None) -> list[tuple]:
    """Raw valid deletes ``(x, y, H, cond)``; ``cond`` excludes ``x``."""
    if pairs is None:
        pairs = edge_pairs(e)
    return kernels.delete_candidates(e.amat, pairs)


def insert_operators(e: Pdag, score: DecomposableScore, pairs=None) -> list[ScoredOp]:
    return [ScoredOp(Insert(x, y, t), score.delta(y, cond, x))
            for x, y, t, cond in insert_candidates(e, pairs)]


def delete_operators(e: Pdag, score: DecomposableScore, pairs=None) -> list[ScoredOp]:
    return [ScoredOp(Delete(x, y, h), -score.delta(y, cond, x))
            for x, y, h, cond in delete_candidates(e, pairs)]


def turn_candidates(e: Pdag) -> list[tuple]:
    """Raw valid turns ``(x, y, H, dcond, T, icond)`` ordered by ``(x, y)``, then ``H``, then ``T``.

    ``dcond`` conditions the removal of ``y -> x`` and ``icond`` the insertion of ``x -> y``.
    """
    pairs = sorted((x, y) for y, x in edge_pairs(e))
    return kernels.turn_candidates(e.amat, pairs)


def turn_operators(e: Pdag, score: DecomposableScore) -> list[ScoredOp]:
    """All valid turns with their deltas, in :func:`turn_candidates` order."""
    return [ScoredOp(Turn(x, y, h, t), score.delta(y, icond, x) - score.delta(x, dcond, y))
            for x, y, h, dcond, t, icond in turn_candidates(e)]
