"""Decomposable local scores.

Search code only ever asks a score for the *difference*
``s(y, parents | {x}) - s(y, parents)`` through :meth:`DecomposableScore.delta`.
The Gaussian BIC also exposes absolute local values; the d-separation oracle
does not, since no decomposable function reproduces exact local consistency
for every graph.
"""

from __future__ import annotations

import math
from bisect import bisect_left
from abc import ABC, abstractmethod
from dataclasses import dataclass

import numpy as np

from . import kernels
from .errors import InsufficientDataError, InvalidDataError
from .graph import Pdag

_CHUNK = 4096


@dataclass(frozen=True)
class SufficientStats:
    """Sample count, centred scatter matrix and means of a dataset."""

    n: int
    scatter: np.ndarray
    means: np.ndarray

    @property
    def p(self) -> int:
        return self.scatter.shape[0]


def stats_from_data(rows) -> SufficientStats:
    """Means and centred scatter in a single pass over ``rows``.

    Rows are consumed in chunks; per-chunk moments are merged with the
    pairwise update of Chan, Golub and LeVeque, which stays accurate when the
    data carry a large offset.
    """
    x = np.asarray(rows, dtype=float)
    if x.ndim != 2:
        raise InvalidDataError(f"expected an n x p matrix, got shape {x.shape}")
    n, p = x.shape
    if n < 2:
        raise InsufficientDataError(f"need at least 2 samples, got {n}")
    if not np.all(np.isfinite(x)):
        raise InvalidDataError("data contain non-finite values")
    count = 0
    mean = np.zeros(p)
    scatter = np.zeros((p, p))
    for start in range(0, n, _CHUNK):
        block = x[start:start + _CHUNK]
        m = block.shape[0]
        bmean = block.mean(axis=0)
        centred = block - bmean
        bscatter = centred.T @ centred
        delta = bmean - mean
        total = count + m
        scatter += bscatter + np.outer(delta, delta) * (count * m / total)
        mean += delta * (m / total)
        count = total
    scatter = (scatter + scatter.T) / 2.0
    return SufficientStats(n=n, scatter=scatter, means=mean)


class LocalScoreCache:
    """Memoises ``fn(y, parents)`` keyed by ``(y, sorted parents)``.

    No eviction. Reads and writes go through a plain dict; concurrent
    workers should each hold their own cache.
    """

    def __init__(self, fn):
        self._fn = fn
        self._store = {}
        self.hits = 0
        self.misses = 0

    def __call__(self, y, parents):
        key = (y, tuple(sorted(parents)))
        try:
            val = self._store[key]
        except KeyError:
            self.misses += 1
            val = self._store[key] = self._fn(y, key[1])
            return val
        self.hits += 1
        return val

    def get_sorted(self, y, key):
        """As calling the cache, with ``key`` already a sorted tuple."""
        try:
            val = self._store[(y, key)]
        except KeyError:
            self.misses += 1
            val = self._store[(y, key)] = self._fn(y, key)
            return val
        self.hits += 1
        return val

    def __len__(self):
        return len(self._store)

    def clear(self):
        self._store.clear()
        self.hits = self.misses = 0


class DecomposableScore(ABC):
    """Interface consumed by the operators and search strategies."""

    #: deltas must exceed this value to count as a score increase
    tolerance: float = 0.0
    p: int

    @abstractmethod
    def delta(self, y: int, parents, x: int) -> float:
        """``s(y, parents | {x}) - s(y, parents)``; ``x`` must not be in ``parents``."""

    @abstractmethod
    def total(self, dag: Pdag) -> float:
        """Score of a whole DAG, comparable across DAGs for the same data."""

    def gains(self, y: int, parents) -> np.ndarray:
        """``delta(y, parents, x)`` for every node ``x``; ``nan`` for ``y`` and ``parents``."""
        out = np.full(self.p, np.nan)
        for x in range(self.p):
            if x != y and x not in parents:
                out[x] = self.delta(y, parents, x)
        return out

    @property
    def evaluations(self) -> int:
        """Number of underlying (uncached) evaluations performed so far."""
        return 0

    def cache_info(self) -> dict:
        return {}


class GaussianBIC(DecomposableScore):
    """Linear-Gaussian BIC computed from sufficient statistics.

    ``local(y, Pa) = -n/2 * (1 + ln(rss / n)) - penalty * (|Pa| + 2)`` with
    ``penalty = 0.5 * ln(n)`` per free parameter (coefficients, intercept,
    variance). Summed over nodes this is the maximised Gaussian
    log-likelihood, up to a constant, minus the BIC penalty.
    """

    def __init__(self, stats: SufficientStats, penalty: float | None = None):
        self.stats = stats
        self.p = stats.p
        self.n = stats.n
        self.penalty = 0.5 * math.log(stats.n) if penalty is None else float(penalty)
        self.tolerance = 1e-9 * stats.n
        self._cov = np.ascontiguousarray(stats.scatter, dtype=float)
        self._cache = LocalScoreCache(self._compute)

    @classmethod
    def from_data(cls, rows, **kwargs) -> GaussianBIC:
        return cls(stats_from_data(rows), **kwargs)

    def _compute(self, y, parents):
        if y in parents:
            raise ValueError(f"node {y} cannot be its own parent")
        rss = kernels.residual_variance(self._cov, y, parents)
        # guard against exact collinearity and zero-variance columns
        rss = max(rss, 1e-12 * self._cov[y, y], 1e-300)
        n = self.n
        return -0.5 * n * (1.0 + math.log(rss / n)) - self.penalty * (len(parents) + 2)

    def local(self, y: int, parents=()) -> float:
        return self._cache(y, parents)

    def delta(self, y, parents, x):
        base = tuple(sorted(parents))
        i = bisect_left(base, x)
        get = self._cache.get_sorted
        return get(y, base[:i] + (x,) + base[i:]) - get(y, base)

    def gains(self, y, parents):
        # one solve gives the residual scatter of every node on ``parents``;
        # adding x then lowers rss by r_xy^2 / r_xx
        pa = sorted(parents)
        s = self._cov
        if pa:
            try:
                r = s - s[:, pa] @ np.linalg.solve(s[np.ix_(pa, pa)], s[pa, :])
            except np.linalg.LinAlgError:
                return super().gains(y, parents)
        else:
            r = s
        diag = np.diag(r)
        out = np.full(self.p, np.nan)
        ok = diag > 1e-8 * np.diag(s)
        ok[y] = False
        ok[pa] = False
        floor = max(1e-12 * s[y, y], 1e-300)
        rss0 = max(r[y, y], floor)
        rss = np.maximum(r[y, y] - r[ok, y] ** 2 / diag[ok], floor)
        out[ok] = -0.5 * self.n * np.log(rss / rss0) - self.penalty
        for x in np.flatnonzero(~ok):
            if x != y and x not in pa:
                out[x] = self.delta(y, pa, int(x))
        return out

    def total(self, dag: Pdag) -> float:
        return sum(self.local(v, dag.parents(v)) for v in range(dag.p))

    @property
    def evaluations(self):
        return self._cache.misses

    def cache_info(self):
        return {"hits": self._cache.hits, "misses": self._cache.misses, "size": len(self._cache)}


class OracleScore(DecomposableScore):
    """Exact infinite-sample score derived from d-separation in a true DAG.

    ``delta(y, Pa, x)`` is ``+1`` when ``x`` and ``y`` are d-connected given
    ``Pa`` in the truth and ``-1`` otherwise.
    """

    tolerance = 0.0

    def __init__(self, truth: Pdag):
        if not truth.is_dag():
            raise ValueError("oracle truth must be a DAG")
        self.truth = truth
        self.p = truth.p
        self._reach = {}
        self.hits = 0
        self.misses = 0

    def _reachable(self, x, cond):
        key = (x, cond)
        try:
            val = self._reach[key]
        except KeyError:
            self.misses += 1
            val = self._reach[key] = frozenset(kernels.d_reachable(self.truth.amat, x, list(cond)))
            return val
        self.hits += 1
        return val

    def d_connected(self, x, y, cond=()) -> bool:
        return y in self._reachable(x, tuple(sorted(cond)))

    def delta(self, y, parents, x):
        cond = tuple(sorted(parents))
        if x in cond or y in cond:
            raise ValueError("x and y must lie outside the parent set")
        return 1.0 if y in self._reachable(x, cond) else -1.0

    def is_imap(self, dag: Pdag) -> bool:
        """Whether every local Markov statement of ``dag`` holds in the truth."""
        for v in range(dag.p):
            pa = tuple(sorted(dag.parents(v)))
            reach = self._reachable(v, pa)
            if reach & (dag.non_descendants(v) - dag.parents(v)):
                return False
        return True

    def total(self, dag: Pdag) -> float:
        """Ranks I-maps of the truth above non-I-maps, then fewer edges first.

        Constant across a Markov equivalence class and uniquely maximised by
        the true class under faithfulness.
        """
        penalty = 0.0 if self.is_imap(dag) else float(self.p * self.p + 1)
        return -float(dag.num_edges()) - penalty

    @property
    def evaluations(self):
        return self.misses

    def cache_info(self):
        return {"hits": self.hits, "misses": self.misses, "size": len(self._reach)}
