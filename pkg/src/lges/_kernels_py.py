"""Pure-Python graph and regression kernels.

Reference implementation of the hot routines. The compiled module
``lges._kernels`` exposes the same functions with the same signatures and
must return identical results; ``lges.kernels`` picks one at import time.

Graphs are passed as square ``uint8`` mark matrices: ``amat[i, j] == 1``
means there is a mark ``i -> j``.  A directed edge ``i -> j`` has
``amat[i, j] == 1`` and ``amat[j, i] == 0``; an undirected edge has both.
Internally node sets are Python ints used as bitsets.
"""

from itertools import combinations
import math

import numpy as np

BACKEND = "python"


def _masks(amat):
    p = amat.shape[0]
    out = [0] * p
    inc = [0] * p
    rows, cols = np.nonzero(amat)
    for i, j in zip(rows.tolist(), cols.tolist()):
        out[i] |= 1 << j
        inc[j] |= 1 << i
    return out, inc


def _bits(mask):
    res = []
    while mask:
        low = mask & -mask
        res.append(low.bit_length() - 1)
        mask ^= low
    return res


def _to_mask(nodes):
    m = 0
    for v in nodes:
        m |= 1 << v
    return m


def _is_clique(adj, mask):
    m = mask
    while m:
        low = m & -m
        v = low.bit_length() - 1
        if (adj[v] | low) & mask != mask:
            return False
        m ^= low
    return True


def _reaches(out, src, dst, blocked):
    # forward search along directed-out and undirected edges, never entering blocked
    seen = (1 << src) | blocked
    frontier = 1 << src
    target = 1 << dst
    while frontier:
        nxt = 0
        m = frontier
        while m:
            low = m & -m
            nxt |= out[low.bit_length() - 1]
            m ^= low
        if nxt & target:
            return True
        nxt &= ~seen
        seen |= nxt
        frontier = nxt
    return False


def is_clique(amat, nodes):
    out, inc = _masks(amat)
    adj = [o | i for o, i in zip(out, inc)]
    return _is_clique(adj, _to_mask(nodes))


def semi_directed_blocked(amat, src, dst, blocker):
    """True iff every semi-directed path ``src => dst`` meets ``blocker``."""
    out, _ = _masks(amat)
    if src == dst:
        return False
    return not _reaches(out, src, dst, _to_mask(blocker) & ~(1 << src) & ~(1 << dst))


def insert_candidates(amat, pairs):
    """Enumerate valid ``Insert(x, y, T)`` operators.

    Returns a list of ``(x, y, T, cond)`` where ``T`` and ``cond`` are sorted
    tuples and ``cond = NA_yx | T | Pa_y`` is the conditioning set of the
    score difference. Pairs are visited in the given order, ``T`` by size then
    lexicographically.
    """
    out, inc = _masks(amat)
    adj = [o | i for o, i in zip(out, inc)]
    res = []
    for x, y in pairs:
        ne_y = out[y] & inc[y]
        pa_y = inc[y] & ~out[y]
        na = ne_y & adj[x]
        if not _is_clique(adj, na):
            continue
        free = _bits(ne_y & ~adj[x])
        for k in range(len(free) + 1):
            for t in combinations(free, k):
                tm = na | _to_mask(t)
                if not _is_clique(adj, tm):
                    continue
                if _reaches(out, y, x, tm):
                    continue
                res.append((x, y, t, tuple(_bits(tm | pa_y))))
    return res


def delete_candidates(amat, pairs):
    """Enumerate valid ``Delete(x, y, H)`` operators.

    Each pair must be an edge ``x -> y`` or ``x - y``. Returns
    ``(x, y, H, cond)`` with ``cond = (NA_yx \\ H) | Pa_y`` minus ``x``.
    """
    out, inc = _masks(amat)
    adj = [o | i for o, i in zip(out, inc)]
    res = []
    for x, y in pairs:
        ne_y = out[y] & inc[y]
        pa_y = inc[y] & ~out[y]
        na_nodes = _bits(ne_y & adj[x])
        na = _to_mask(na_nodes)
        for k in range(len(na_nodes) + 1):
            for h in combinations(na_nodes, k):
                rest = na & ~_to_mask(h)
                if not _is_clique(adj, rest):
                    continue
                res.append((x, y, h, tuple(_bits((rest | pa_y) & ~(1 << x)))))
    return res


def d_reachable(amat, x, cond):
    """Nodes d-connected to ``x`` given ``cond`` in the DAG ``amat``.

    Reachable-set (Bayes ball) traversal; the result excludes ``x`` and every
    node of ``cond``.
    """
    out, inc = _masks(amat)
    z = _to_mask(cond)
    # ancestors of z, including z
    anc = z
    frontier = z
    while frontier:
        nxt = 0
        for v in _bits(frontier):
            nxt |= inc[v]
        nxt &= ~anc
        anc |= nxt
        frontier = nxt
    up_seen = 0
    down_seen = 0
    reach = 0
    stack = [(x, True)]
    while stack:
        v, up = stack.pop()
        bit = 1 << v
        if up:
            if up_seen & bit:
                continue
            up_seen |= bit
        else:
            if down_seen & bit:
                continue
            down_seen |= bit
        in_z = z & bit
        if not in_z:
            reach |= bit
        if up and not in_z:
            for w in _bits(inc[v]):
                stack.append((w, True))
            for w in _bits(out[v]):
                stack.append((w, False))
        elif not up:
            if not in_z:
                for w in _bits(out[v]):
                    stack.append((w, False))
            if anc & bit:
                for w in _bits(inc[v]):
                    stack.append((w, True))
    reach &= ~(1 << x)
    return _bits(reach)


def pdag_to_dag(amat):
    """Consistent extension of a PDAG (Dor-Tarsi), or ``None`` if none exists.

    At each step the lowest-index eligible vertex is removed: a sink among the
    remaining nodes whose undirected neighbours are adjacent to every other
    remaining node adjacent to it. For a CPDAG this reduces to requiring the
    undirected neighbours to form a clique.
    """
    p = amat.shape[0]
    out, inc = _masks(amat)
    adj = [o | i for o, i in zip(out, inc)]
    dag = np.array(amat, dtype=np.uint8, copy=True)
    remaining = (1 << p) - 1
    undirected_left = any(out[i] & inc[i] for i in range(p))
    while remaining:
        if not undirected_left:
            break
        chosen = -1
        for v in _bits(remaining):
            ch = out[v] & ~inc[v] & remaining
            if ch:
                continue
            ne = out[v] & inc[v] & remaining
            av = adj[v] & remaining
            ok = True
            for u in _bits(ne):
                if (adj[u] | (1 << u)) & av != av:
                    ok = False
                    break
            if ok:
                chosen = v
                break
        if chosen < 0:
            return None
        v = chosen
        for u in _bits(out[v] & inc[v] & remaining):
            dag[v, u] = 0
        remaining &= ~(1 << v)
        undirected_left = False
        for i in _bits(remaining):
            if out[i] & inc[i] & remaining:
                undirected_left = True
                break
    if not _acyclic(dag):
        return None
    return dag


def _acyclic(amat):
    p = amat.shape[0]
    out, inc = _masks(amat)
    if any(out[i] & inc[i] for i in range(p)):
        return False
    indeg = [bin(inc[i]).count("1") for i in range(p)]
    stack = [i for i in range(p) if indeg[i] == 0]
    seen = 0
    while stack:
        v = stack.pop()
        seen += 1
        for w in _bits(out[v]):
            indeg[w] -= 1
            if indeg[w] == 0:
                stack.append(w)
    return seen == p


def _meek(amat, out, inc):
    p = amat.shape[0]
    changed = True
    while changed:
        changed = False
        for a in range(p):
            for b in _bits(out[a] & inc[a]):
                if not (out[a] & inc[a] & (1 << b)):
                    continue
                pa_a = inc[a] & ~out[a]
                adj_b = out[b] | inc[b]
                ch_a = out[a] & ~inc[a]
                pa_b = inc[b] & ~out[b]
                ne_a = out[a] & inc[a]
                adj_a = out[a] | inc[a]
                orient = False
                # R1: c -> a - b, c and b non-adjacent
                if pa_a & ~adj_b & ~(1 << b):
                    orient = True
                # R2: a -> c -> b
                elif ch_a & pa_b:
                    orient = True
                else:
                    # R3: a - c -> b, a - d -> b, c and d non-adjacent
                    cs = _bits(ne_a & pa_b)
                    for i in range(len(cs)):
                        ci = cs[i]
                        adj_ci = out[ci] | inc[ci]
                        for j in range(i + 1, len(cs)):
                            if not adj_ci & (1 << cs[j]):
                                orient = True
                                break
                        if orient:
                            break
                    if not orient:
                        # R4: a - d -> c -> b, a adjacent c, d and b non-adjacent
                        for c in _bits(pa_b & adj_a):
                            pa_c = inc[c] & ~out[c]
                            if pa_c & ne_a & ~adj_b & ~(1 << b):
                                orient = True
                                break
                if orient:
                    amat[b, a] = 0
                    out[b] &= ~(1 << a)
                    inc[a] &= ~(1 << b)
                    changed = True
    return amat


def meek_close(amat):
    """Apply Meek rules R1-R4 to a fixed point; returns a new matrix."""
    res = np.array(amat, dtype=np.uint8, copy=True)
    out, inc = _masks(res)
    return _meek(res, out, inc)


def cpdag_from_dag(amat):
    """CPDAG of a DAG: skeleton, v-structures directed, Meek closure."""
    p = amat.shape[0]
    out, inc = _masks(amat)
    adj = [o | i for o, i in zip(out, inc)]
    res = np.array(amat, dtype=np.uint8, copy=True)
    res |= res.T
    compelled = set()
    for z in range(p):
        pa = _bits(inc[z])
        for i in range(len(pa)):
            for j in range(i + 1, len(pa)):
                a, b = pa[i], pa[j]
                if not adj[a] & (1 << b):
                    compelled.add((a, z))
                    compelled.add((b, z))
    for a, z in compelled:
        res[z, a] = 0
    out2, inc2 = _masks(res)
    return _meek(res, out2, inc2)


def residual_variance(cov, y, parents):
    """Residual sum of squares of ``y`` regressed on ``parents``.

    ``cov`` is a centred scatter (or covariance) matrix. Solved with a
    Cholesky factorisation; on failure a ridge of ``1e-10 * trace`` is added
    until the factorisation succeeds.
    """
    syy = float(cov[y, y])
    k = len(parents)
    if k == 0:
        return syy
    idx = list(parents)
    a = [[float(cov[i, j]) for j in idx] for i in idx]
    b = [float(cov[i, y]) for i in idx]
    trace = sum(a[i][i] for i in range(k))
    jitter = 0.0
    base = 1e-10 * trace if trace > 0 else 1e-10
    while True:
        low = _cholesky(a, jitter)
        if low is not None:
            break
        jitter = base if jitter == 0.0 else jitter * 10.0
    # forward substitution: L w = b, rss = syy - |w|^2
    w = [0.0] * k
    acc = 0.0
    for i in range(k):
        s = b[i]
        row = low[i]
        for j in range(i):
            s -= row[j] * w[j]
        w[i] = s / row[i]
        acc += w[i] * w[i]
    return syy - acc


def _cholesky(a, jitter):
    k = len(a)
    low = [[0.0] * k for _ in range(k)]
    for i in range(k):
        for j in range(i + 1):
            s = a[i][j]
            if i == j:
                s += jitter
            for m in range(j):
                s -= low[i][m] * low[j][m]
            if i == j:
                if not s > 0.0 or not math.isfinite(s):
                    return None
                low[i][i] = math.sqrt(s)
            else:
                low[i][j] = s / low[j][j]
    # reject factors that lost almost all precision
    d = [low[i][i] * low[i][i] for i in range(k)]
    if min(d) <= 1e-14 * max(a[i][i] + jitter for i in range(k)):
        return None
    return low


def turn_candidates(amat, pairs):
    """Valid turns ``(x, y, H, dcond, T, icond)`` making ``x -> y``.

    For each pair, every valid ``Delete(y, x, H)`` is applied and the result
    recompleted; the valid ``Insert(x, y, T)`` of that state follow.
    ``dcond`` is the deletion's conditioning set for ``x`` (without ``y``),
    ``icond`` the insertion's conditioning set for ``y``.
    """
    res = []
    for x, y in pairs:
        for _, _, hs, dcond in delete_candidates(amat, [(y, x)]):
            mid = np.array(amat, dtype=np.uint8, copy=True)
            mid[x, y] = mid[y, x] = 0
            for h in hs:
                if mid[y, h] and mid[h, y]:
                    mid[h, y] = 0
                if mid[x, h] and mid[h, x]:
                    mid[h, x] = 0
            dag = pdag_to_dag(mid)
            if dag is None:
                raise ValueError("deletion left a PDAG without a consistent extension")
            for _, _, t, icond in insert_candidates(cpdag_from_dag(dag), [(x, y)]):
                res.append((x, y, hs, dcond, t, icond))
    return res


def descendant_matrix(amat):
    """``d[v, w] = 1`` when ``w`` is a proper descendant of ``v`` along
    directed edges; the directed part must be acyclic."""
    p = amat.shape[0]
    out, inc = _masks(amat)
    child = [out[v] & ~inc[v] for v in range(p)]
    desc = [None] * p
    indeg = [bin(inc[v] & ~out[v]).count("1") for v in range(p)]
    order = [v for v in range(p) if indeg[v] == 0]
    for v in order:
        for w in _bits(child[v]):
            indeg[w] -= 1
            if indeg[w] == 0:
                order.append(w)
    if len(order) != p:
        raise ValueError("directed part has a cycle")
    for v in reversed(order):
        m = child[v]
        for w in _bits(child[v]):
            m |= desc[w]
        desc[v] = m
    res = np.zeros((p, p), dtype=np.uint8)
    for v in range(p):
        for w in _bits(desc[v]):
            res[v, w] = 1
    return res
