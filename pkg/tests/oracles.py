"""Brute-force reference implementations used as test oracles.

Nothing here imports the package: every routine works from plain numpy
adjacency matrices where ``a[i, j] == 1`` marks ``i -> j``.
"""

from __future__ import annotations

import itertools

import numpy as np


def is_acyclic(a) -> bool:
    a = np.asarray(a)
    p = a.shape[0]
    indeg = [int(a[:, j].sum()) for j in range(p)]
    stack = [v for v in range(p) if indeg[v] == 0]
    seen = 0
    while stack:
        v = stack.pop()
        seen += 1
        for w in np.flatnonzero(a[v]):
            indeg[w] -= 1
            if indeg[w] == 0:
                stack.append(w)
    return seen == p


def all_dags(p: int):
    """Every labelled DAG on ``p`` nodes (543 for p = 4)."""
    pairs = list(itertools.combinations(range(p), 2))
    for states in itertools.product(range(3), repeat=len(pairs)):
        a = np.zeros((p, p), dtype=np.uint8)
        for (i, j), s in zip(pairs, states):
            if s == 1:
                a[i, j] = 1
            elif s == 2:
                a[j, i] = 1
        if is_acyclic(a):
            yield a


def random_dag(p: int, prob: float, rng) -> np.ndarray:
    order = rng.permutation(p)
    a = np.zeros((p, p), dtype=np.uint8)
    for i in range(p):
        for j in range(i + 1, p):
            if rng.random() < prob:
                a[order[i], order[j]] = 1
    return a


def skeleton(a):
    a = np.asarray(a)
    return {(i, j) for i, j in zip(*np.nonzero(a | a.T)) if i < j}


def v_structures(a):
    a = np.asarray(a)
    adj = a | a.T
    out = set()
    for z in range(a.shape[0]):
        pa = [int(v) for v in np.flatnonzero(a[:, z] & (1 - a[z, :]))]
        for x, y in itertools.combinations(pa, 2):
            if not adj[x, y]:
                out.add((x, z, y))
    return out


def markov_equivalent(a, b) -> bool:
    return skeleton(a) == skeleton(b) and v_structures(a) == v_structures(b)


def orientations(a):
    """All DAGs on the skeleton of ``a``."""
    edges = sorted(skeleton(a))
    p = np.asarray(a).shape[0]
    for bits in range(1 << len(edges)):
        g = np.zeros((p, p), dtype=np.uint8)
        for k, (i, j) in enumerate(edges):
            if (bits >> k) & 1:
                g[i, j] = 1
            else:
                g[j, i] = 1
        if is_acyclic(g):
            yield g


def essential_graph(members) -> np.ndarray:
    """Union of a set of DAGs: directed where all agree, undirected otherwise."""
    members = list(members)
    out = np.zeros_like(members[0])
    for g in members:
        out |= g
    return out


def mec_members(dag):
    return [g for g in orientations(dag) if markov_equivalent(g, dag)]


def cpdag_brute(dag) -> np.ndarray:
    """CPDAG by enumerating the whole equivalence class."""
    return essential_graph(mec_members(dag))


def mutilate(a, target):
    a = np.array(a, copy=True)
    for v in target:
        a[:, v] = 0
    return a


def i_essential_graph(dag, targets) -> np.ndarray:
    """Interventional essential graph: DAGs whose mutilations are Markov
    equivalent to the truth's under every target."""
    members = [g for g in orientations(dag)
               if all(markov_equivalent(mutilate(g, t), mutilate(dag, t)) for t in targets)]
    return essential_graph(members)


# --- d-separation by path enumeration -------------------------------------------


def _simple_paths(adj, x, y):
    stack = [(x, [x])]
    while stack:
        v, path = stack.pop()
        for w in np.flatnonzero(adj[v]):
            w = int(w)
            if w == y:
                yield path + [w]
            elif w not in path:
                stack.append((w, path + [w]))


def descendants(a, v):
    a = np.asarray(a)
    seen = {v}
    stack = [v]
    while stack:
        u = stack.pop()
        for w in np.flatnonzero(a[u]):
            if int(w) not in seen:
                seen.add(int(w))
                stack.append(int(w))
    return seen


def d_separated_paths(a, x, y, z) -> bool:
    """No simple path between ``x`` and ``y`` is active given ``z``."""
    a = np.asarray(a)
    z = set(z)
    adj = a | a.T
    for path in _simple_paths(adj, x, y):
        active = True
        for k in range(1, len(path) - 1):
            u, v, w = path[k - 1], path[k], path[k + 1]
            collider = a[u, v] and a[w, v]
            if collider:
                if not (descendants(a, v) & z):
                    active = False
                    break
            elif v in z:
                active = False
                break
        if active:
            return False
    return True


# --- scores ---------------------------------------------------------------------


def bic_local_lstsq(data, y, parents) -> float:
    """Gaussian BIC of one node with an intercept, by least squares."""
    n = data.shape[0]
    cols = [np.ones(n)] + [data[:, j] for j in sorted(parents)]
    x = np.column_stack(cols)
    beta, *_ = np.linalg.lstsq(x, data[:, y], rcond=None)
    rss = float(np.sum((data[:, y] - x @ beta) ** 2))
    k = len(parents) + 2
    return -0.5 * n * (1 + np.log(rss / n)) - 0.5 * np.log(n) * k


def bic_total_lstsq(data, dag) -> float:
    dag = np.asarray(dag)
    return sum(bic_local_lstsq(data, j, np.flatnonzero(dag[:, j])) for j in range(dag.shape[0]))


def oracle_total(truth, dag) -> float:
    """Oracle score: minus the edge count, heavily penalised when ``dag`` is
    not an I-map of ``truth`` (some d-separation of ``dag`` fails in the truth)."""
    dag = np.asarray(dag)
    p = dag.shape[0]
    imap = True
    order = topological_order(dag)
    pos = {v: i for i, v in enumerate(order)}
    for v in range(p):
        pa = set(np.flatnonzero(dag[:, v]).tolist())
        nd = {u for u in range(p) if u not in descendants(dag, v) and u not in pa}
        for u in nd:
            if pos[u] < pos[v] and not d_separated_paths(truth, v, u, pa):
                imap = False
    return -int(dag.sum()) - (p * p + 1) * (not imap)


def topological_order(a):
    a = np.asarray(a)
    p = a.shape[0]
    indeg = [int(a[:, j].sum()) for j in range(p)]
    ready = sorted(v for v in range(p) if indeg[v] == 0)
    out = []
    while ready:
        v = ready.pop(0)
        out.append(v)
        for w in np.flatnonzero(a[v]):
            indeg[w] -= 1
            if indeg[w] == 0:
                ready.append(int(w))
        ready.sort()
    return out


# --- operator validity by definition ---------------------------------------------


def is_clique_brute(a, nodes) -> bool:
    a = np.asarray(a)
    return all(a[u, v] or a[v, u] for u, v in itertools.combinations(nodes, 2))


def semi_directed_paths(a, src, dst):
    """Simple paths ``src .. dst`` whose every edge is undirected or points forward."""
    a = np.asarray(a)
    stack = [(src, [src])]
    while stack:
        v, path = stack.pop()
        for w in np.flatnonzero(a[v]):
            w = int(w)
            if w == dst:
                yield path + [w]
            elif w not in path:
                stack.append((w, path + [w]))


def _neighbors(a, v):
    return {int(w) for w in np.flatnonzero(a[v] & a[:, v])}


def _adjacent(a, v):
    return {int(w) for w in np.flatnonzero(a[v] | a[:, v])}


def valid_inserts(a):
    """Every valid ``(x, y, T)`` on the CPDAG ``a``, straight from the definition."""
    a = np.asarray(a)
    p = a.shape[0]
    out = set()
    for x in range(p):
        for y in range(p):
            if x == y or a[x, y] or a[y, x]:
                continue
            na = _neighbors(a, y) & _adjacent(a, x)
            free = sorted(_neighbors(a, y) - _adjacent(a, x))
            for k in range(len(free) + 1):
                for t in itertools.combinations(free, k):
                    block = na | set(t)
                    if not is_clique_brute(a, block):
                        continue
                    if all(set(path[1:-1]) & block for path in semi_directed_paths(a, y, x)):
                        out.add((x, y, t))
    return out


def valid_deletes(a):
    a = np.asarray(a)
    out = set()
    for x, y in zip(*np.nonzero(a)):
        x, y = int(x), int(y)
        na = sorted(_neighbors(a, y) & _adjacent(a, x))
        for k in range(len(na) + 1):
            for h in itertools.combinations(na, k):
                if is_clique_brute(a, set(na) - set(h)):
                    out.add((x, y, h))
    return out


def any_extension(a):
    """A consistent extension found by trying orientations of undirected edges."""
    a = np.asarray(a)
    und = [(i, j) for i, j in zip(*np.nonzero(np.triu(a & a.T)))]
    directed = a & (1 - a.T)
    for bits in range(1 << len(und)):
        g = directed.copy()
        for k, (i, j) in enumerate(und):
            if (bits >> k) & 1:
                g[i, j] = 1
            else:
                g[j, i] = 1
        if is_acyclic(g) and np.array_equal(essential_graph(mec_members(g)), a):
            return g
    return None
