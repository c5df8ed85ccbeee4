"""Synthetic linear-Gaussian problems and CPDAG comparison metrics."""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass

import numpy as np

from .errors import InvalidGraphError
from .graph import Pdag

logger = logging.getLogger(__name__)

#: condition number of ``I - W`` above which incoming weights are l1-normalised
COND_LIMIT = 1e8


def rng_from_seed(seed) -> np.random.Generator:
    """PCG64 generator; the same seed gives the same stream on every platform."""
    return np.random.Generator(np.random.PCG64(seed))


def er_dag(p: int, expected_edges: float, seed=None, rng=None) -> Pdag:
    """Erdős–Rényi DAG over a random topological order.

    Each of the ``p(p-1)/2`` forward pairs is kept independently with
    probability ``expected_edges / C(p, 2)``.
    """
    if p < 1:
        raise ValueError("p must be at least 1")
    rng = rng if rng is not None else rng_from_seed(seed)
    pairs = p * (p - 1) // 2
    prob = expected_edges / pairs if pairs else 0.0
    if prob > 1.0:
        logger.warning("%s expected edges exceeds the %d possible; using probability 1", expected_edges, pairs)
        prob = 1.0
    order = rng.permutation(p)
    keep = rng.random((p, p)) < prob
    a = np.zeros((p, p), dtype=np.uint8)
    for i in range(p):
        for j in range(i + 1, p):
            if keep[i, j]:
                a[order[i], order[j]] = 1
    return Pdag(a)


@dataclass(frozen=True)
class SemModel:
    """Linear SEM ``X_j = sum_i W[i, j] X_i + N_j``, ``N_j ~ N(mu_j, s2_j)``."""

    dag: Pdag
    weights: np.ndarray
    noise_means: np.ndarray
    noise_vars: np.ndarray

    def __post_init__(self):
        w = np.asarray(self.weights, dtype=float)
        p = self.dag.p
        if w.shape != (p, p):
            raise ValueError(f"weights must be {p} x {p}")
        if not self.dag.is_dag():
            raise InvalidGraphError("SEM graph must be a DAG")
        if np.any((w != 0) & (self.dag.amat == 0)):
            raise ValueError("nonzero weight outside the DAG's edges")
        if np.any(np.asarray(self.noise_vars) <= 0):
            raise ValueError("noise variances must be positive")

    @property
    def p(self) -> int:
        return self.dag.p

    def covariance(self) -> np.ndarray:
        """Population covariance ``(I - W)^-T D (I - W)^-1``."""
        inv = np.linalg.inv(np.eye(self.p) - self.weights)
        return inv.T @ np.diag(self.noise_vars) @ inv


def _stabilise(w: np.ndarray) -> np.ndarray:
    if np.linalg.cond(np.eye(w.shape[0]) - w) <= COND_LIMIT:
        return w
    norms = np.abs(w).sum(axis=0)
    norms[norms == 0] = 1.0
    return w / norms


def random_sem(dag: Pdag, seed=None, rng=None, weight_range=(0.5, 2.0), var_range=(0.1, 0.5)) -> SemModel:
    """Weights from ``U([-hi, -lo] U [lo, hi])``, noise means from ``N(0, 1)``,
    noise variances from ``U(var_range)``."""
    rng = rng if rng is not None else rng_from_seed(seed)
    p = dag.p
    lo, hi = weight_range
    mag = rng.uniform(lo, hi, size=(p, p))
    sign = np.where(rng.random((p, p)) < 0.5, -1.0, 1.0)
    w = np.where(dag.amat == 1, mag * sign, 0.0)
    return SemModel(
        dag=dag,
        weights=_stabilise(w),
        noise_means=rng.normal(0.0, 1.0, size=p),
        noise_vars=rng.uniform(*var_range, size=p),
    )


def sample_sem(model: SemModel, n: int, seed=None, target=(), rng=None) -> np.ndarray:
    """Ancestral sampling; nodes in ``target`` ignore their parents and are
    drawn from ``N(0, 1)``."""
    if n < 1:
        raise ValueError("n must be at least 1")
    rng = rng if rng is not None else rng_from_seed(seed)
    target = set(target)
    p = model.p
    x = np.zeros((n, p))
    noise = rng.standard_normal((n, p))
    w = model.weights
    sd = np.sqrt(model.noise_vars)
    for j in model.dag.topological_order():
        if j in target:
            x[:, j] = noise[:, j]
            continue
        pa = np.flatnonzero(w[:, j])
        col = model.noise_means[j] + sd[j] * noise[:, j]
        if pa.size:
            col = col + x[:, pa] @ w[pa, j]
        x[:, j] = col
    return x


# --- metrics ------------------------------------------------------------------


@dataclass(frozen=True)
class Metrics:
    shd: int
    precision: float
    recall: float
    f1: float
    excess_adj: int
    missing_adj: int
    wrong_orient: int

    def as_dict(self) -> dict:
        return {
            "shd": self.shd, "precision": self.precision, "recall": self.recall, "f1": self.f1,
            "excess": self.excess_adj, "missing": self.missing_adj, "wrong": self.wrong_orient,
        }


def _marks(e: Pdag):
    return set(zip(*map(np.ndarray.tolist, np.nonzero(e.amat))))


def shd(estimate: Pdag, truth: Pdag) -> Metrics:
    """Structural Hamming distance between two CPDAGs.

    Each unordered pair costs at most one unit: an adjacency in only one
    graph (excess or missing) or a shared adjacency with different marks.
    Precision and recall treat ``x -> y`` as the ordered pair ``(x, y)`` and
    ``x - y`` as both orders.
    """
    if estimate.p != truth.p:
        raise ValueError(f"graphs have {estimate.p} and {truth.p} nodes")
    a, b = estimate.amat, truth.amat
    adj_a = (a | a.T).astype(bool)
    adj_b = (b | b.T).astype(bool)
    upper = np.triu(np.ones_like(adj_a, dtype=bool), 1)
    excess = int(np.sum(adj_a & ~adj_b & upper))
    missing = int(np.sum(~adj_a & adj_b & upper))
    differ = (a != b) | (a.T != b.T)
    wrong = int(np.sum(adj_a & adj_b & differ & upper))
    ea, eb = _marks(estimate), _marks(truth)
    common = len(ea & eb)
    precision = common / len(ea) if ea else 1.0
    recall = common / len(eb) if eb else 1.0
    f1 = 2 * precision * recall / (precision + recall) if precision + recall > 0 else 0.0
    return Metrics(excess + missing + wrong, precision, recall, f1, excess, missing, wrong)


def expected_edge_count(p: int, density: float) -> float:
    """``density * p`` capped at ``C(p, 2)``."""
    return min(density * p, math.comb(p, 2))
