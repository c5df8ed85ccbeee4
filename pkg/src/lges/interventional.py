"""Refining an observational CPDAG with interventional data.

Each undirected edge ``x - y`` is tested against every target ``I`` that
contains one endpoint but not the other. Intervening on ``x`` cuts its
incoming edges, so ``x`` and ``y`` stay dependent under ``I`` exactly when
``x -> y``. The signed sum of those marginal score differences decides the
orientation, and Meek rules propagate it.
"""

from __future__ import annotations

import json
import logging
from collections.abc import Sequence
from dataclasses import dataclass, field
from pathlib import Path

from . import kernels
from .errors import ConfigurationError, InvalidGraphError
from .graph import Pdag, is_cpdag, meek_close
from .score import GaussianBIC, SufficientStats

logger = logging.getLogger(__name__)

OBSERVATIONAL = "observational"
SCORE_TEST = "score-test"
MEEK = "meek"


def mutilate(truth: Pdag, target) -> Pdag:
    """``truth`` with every edge into a node of ``target`` removed."""
    a = truth.amat.copy()
    for v in target:
        a[:, v] = 0
    return Pdag._trusted(a)


def interventional_oracle_delta(truth: Pdag, target, x: int, y: int) -> float:
    """``+1`` if ``x`` and ``y`` are marginally d-connected after intervening
    on ``target`` in ``truth``, else ``-1``."""
    target = frozenset(target)
    if x not in target or y in target:
        raise ValueError("x must be in the target and y outside it")
    g = mutilate(truth, target)
    return 1.0 if y in kernels.d_reachable(g.amat, x, []) else -1.0


def interventional_bic_delta(stats: SufficientStats, x: int, y: int) -> float:
    """``bic(y, {x}) - bic(y, {})`` on data sampled under one target."""
    return GaussianBIC(stats).delta(y, (), x)


@dataclass
class InterventionFamily:
    """Intervention targets with one score source per target.

    Either ``stats`` (one :class:`SufficientStats` per target) or ``truth``
    (a DAG used for oracle deltas) must be given. The empty target denotes
    observational data.
    """

    targets: tuple
    stats: tuple | None = None
    truth: Pdag | None = None
    _scores: dict = field(default_factory=dict, repr=False)

    def __post_init__(self):
        self.targets = tuple(frozenset(t) for t in self.targets)
        if len(set(self.targets)) != len(self.targets):
            raise ConfigurationError("intervention targets must be distinct")
        if (self.stats is None) == (self.truth is None):
            raise ConfigurationError("give exactly one of per-target stats or an oracle truth")
        if self.stats is not None:
            self.stats = tuple(self.stats)
            if len(self.stats) != len(self.targets):
                raise ConfigurationError("one dataset is needed per target")

    @classmethod
    def oracle(cls, truth: Pdag, targets) -> InterventionFamily:
        return cls(tuple(targets), truth=truth)

    def delta(self, k: int, x: int, y: int) -> float:
        """Marginal score difference for ``x -> y`` under target ``k``."""
        if self.truth is not None:
            return interventional_oracle_delta(self.truth, self.targets[k], x, y)
        bic = self._scores.get(k)
        if bic is None:
            bic = self._scores[k] = GaussianBIC(self.stats[k])
        return bic.delta(y, (), x)

    def summed_delta(self, x: int, y: int) -> tuple[float, int]:
        """Sum over targets holding ``x`` but not ``y``, and how many there were."""
        total = 0.0
        used = 0
        for k, t in enumerate(self.targets):
            if x in t and y not in t:
                total += self.delta(k, x, y)
                used += 1
        return total, used


@dataclass(frozen=True)
class IMecResult:
    cpdag: Pdag
    oriented_by: dict
    untested: tuple = ()

    def report(self, names: Sequence[str] | None = None) -> str:
        names = names or [str(i) for i in range(self.cpdag.p)]
        lines = [f"{names[a]} -> {names[b]}\t{how}" for (a, b), how in sorted(self.oriented_by.items())]
        lines += [f"{names[a]} -- {names[b]}\tuntested" for a, b in self.untested]
        return "\n".join(lines) + ("\n" if lines else "")


def i_orient(e0: Pdag, family: InterventionFamily) -> IMecResult:
    """Orient the undirected edges of ``e0`` that the family's targets resolve.

    Edges are visited in the order of the undirected edge list taken before
    any orientation; an edge already directed by Meek propagation is skipped.
    An edge whose summed difference is exactly zero stays undirected.
    """
    if not is_cpdag(e0):
        raise InvalidGraphError("i_orient expects a CPDAG")
    e = e0
    oriented_by = {edge: OBSERVATIONAL for edge in e0.directed_edges()}
    untested = []
    for a, b in e0.undirected_edges():
        if not e.has_undirected(a, b):
            continue
        decided = None
        for x, y in ((a, b), (b, a)):
            total, used = family.summed_delta(x, y)
            if used and total != 0:
                decided = (x, y) if total > 0 else (y, x)
                break
        if decided is None:
            untested.append((a, b))
            continue
        before = e
        e = meek_close(e.with_edits(add_directed=[decided]))
        oriented_by[decided] = SCORE_TEST
        for edge in e.directed_edges():
            if edge not in oriented_by and not before.has_directed(*edge):
                oriented_by[edge] = MEEK
    untested = tuple(edge for edge in untested if e.has_undirected(*edge))
    return IMecResult(e, oriented_by, untested)


def load_manifest(path, read_csv) -> tuple[list[str], list[frozenset], list[SufficientStats]]:
    """Read an intervention manifest.

    The manifest is JSON: a list of ``{"targets": [names], "data": csv}``
    entries (or an object with that list under ``"entries"``). Data paths are
    resolved relative to the manifest. ``read_csv`` maps a path to
    ``(names, rows)``. All datasets must share a header.
    """
    path = Path(path)
    try:
        doc = json.loads(path.read_text())
    except json.JSONDecodeError as exc:
        raise ConfigurationError(f"{path}: line {exc.lineno}: {exc.msg}") from exc
    entries = doc.get("entries") if isinstance(doc, dict) else doc
    if not isinstance(entries, list) or not entries:
        raise ConfigurationError(f"{path}: expected a non-empty list of entries")
    names = None
    targets, stats = [], []
    from .score import stats_from_data

    for i, entry in enumerate(entries):
        if not isinstance(entry, dict) or "data" not in entry:
            raise ConfigurationError(f"{path}: entry {i} needs a 'data' field")
        cols, rows = read_csv(path.parent / entry["data"])
        if names is None:
            names = cols
        elif cols != names:
            raise ConfigurationError(f"{path}: entry {i} has a different header")
        index = {n: k for k, n in enumerate(names)}
        tnames = entry.get("targets", [])
        unknown = [t for t in tnames if t not in index]
        if unknown:
            raise ConfigurationError(f"{path}: entry {i}: unknown target(s) {unknown}")
        targets.append(frozenset(index[t] for t in tnames))
        stats.append(stats_from_data(rows))
    if frozenset() not in targets:
        logger.warning("%s: no observational entry", path)
    return names, targets, stats
