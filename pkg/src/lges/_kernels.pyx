# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True
"""Compiled graph and regression kernels.

Same functions, signatures and results as ``lges._kernels_py``.
"""

from libc.math cimport sqrt, isfinite
from libc.stdlib cimport malloc, free

import numpy as np
cimport numpy as cnp

cnp.import_array()

BACKEND = "cython"

ctypedef unsigned char u8


cdef inline bint _adj(const u8[:, ::1] a, int i, int j) nogil:
    return a[i, j] != 0 or a[j, i] != 0


cdef inline bint _und(const u8[:, ::1] a, int i, int j) nogil:
    return a[i, j] != 0 and a[j, i] != 0


cdef inline bint _dir(const u8[:, ::1] a, int i, int j) nogil:
    return a[i, j] != 0 and a[j, i] == 0


cdef bint _clique(const u8[:, ::1] a, int* nodes, int k) nogil:
    cdef int i, j
    for i in range(k):
        for j in range(i + 1, k):
            if not _adj(a, nodes[i], nodes[j]):
                return False
    return True


cdef bint _reaches(const u8[:, ::1] a, int src, int dst, u8* blocked,
                   int* queue, u8* seen) nogil:
    # forward search along directed-out and undirected edges, never entering blocked
    cdef int p = a.shape[0]
    cdef int head = 0, tail = 0, v, w
    for v in range(p):
        seen[v] = blocked[v]
    seen[src] = 1
    queue[tail] = src
    tail += 1
    while head < tail:
        v = queue[head]
        head += 1
        for w in range(p):
            if a[v, w] != 0:
                if w == dst:
                    return True
                if not seen[w]:
                    seen[w] = 1
                    queue[tail] = w
                    tail += 1
    return False


def is_clique(const u8[:, ::1] amat, nodes):
    cdef list lst = list(nodes)
    cdef int k = len(lst), i
    cdef int* buf = <int*>malloc((k + 1) * sizeof(int))
    try:
        for i in range(k):
            buf[i] = lst[i]
        return _clique(amat, buf, k)
    finally:
        free(buf)


def semi_directed_blocked(const u8[:, ::1] amat, int src, int dst, blocker):
    cdef int p = amat.shape[0], v
    if src == dst:
        return False
    cdef u8* blocked = <u8*>malloc(p * sizeof(u8))
    cdef u8* seen = <u8*>malloc(p * sizeof(u8))
    cdef int* queue = <int*>malloc(p * sizeof(int))
    try:
        for v in range(p):
            blocked[v] = 0
        for v in blocker:
            blocked[<int>v] = 1
        blocked[src] = 0
        blocked[dst] = 0
        return not _reaches(amat, src, dst, blocked, queue, seen)
    finally:
        free(blocked)
        free(seen)
        free(queue)


cdef tuple _sorted_tuple(u8* member, int p):
    cdef list out = []
    cdef int v
    for v in range(p):
        if member[v]:
            out.append(v)
    return tuple(out)


def insert_candidates(const u8[:, ::1] amat, pairs):
    if amat.shape[0] <= 64:
        return _insert_candidates_bits(amat, pairs)
    cdef int p = amat.shape[0]
    cdef int x, y, v, k, i, j, nfree, nna, nset
    cdef int* na = <int*>malloc(p * sizeof(int))
    cdef int* freev = <int*>malloc(p * sizeof(int))
    cdef int* setv = <int*>malloc(p * sizeof(int))
    cdef int* comb = <int*>malloc((p + 1) * sizeof(int))
    cdef int* queue = <int*>malloc(p * sizeof(int))
    cdef u8* blocked = <u8*>malloc(p * sizeof(u8))
    cdef u8* seen = <u8*>malloc(p * sizeof(u8))
    cdef u8* cond = <u8*>malloc(p * sizeof(u8))
    cdef list res = []
    cdef bint ok
    try:
        for pair in pairs:
            x = pair[0]
            y = pair[1]
            nna = 0
            nfree = 0
            for v in range(p):
                if _und(amat, y, v):
                    if _adj(amat, x, v):
                        na[nna] = v
                        nna += 1
                    else:
                        freev[nfree] = v
                        nfree += 1
            if not _clique(amat, na, nna):
                continue
            for k in range(nfree + 1):
                for i in range(k):
                    comb[i] = i
                while True:
                    nset = 0
                    for i in range(nna):
                        setv[nset] = na[i]
                        nset += 1
                    for i in range(k):
                        setv[nset] = freev[comb[i]]
                        nset += 1
                    ok = True
                    # na is a clique already; check pairs touching T
                    for i in range(nna, nset):
                        for j in range(i):
                            if not _adj(amat, setv[i], setv[j]):
                                ok = False
                                break
                        if not ok:
                            break
                    if ok:
                        for v in range(p):
                            blocked[v] = 0
                        for i in range(nset):
                            blocked[setv[i]] = 1
                        if not _reaches(amat, y, x, blocked, queue, seen):
                            for v in range(p):
                                cond[v] = blocked[v] or _dir(amat, v, y)
                            t = tuple([freev[comb[i]] for i in range(k)])
                            res.append((x, y, t, _sorted_tuple(cond, p)))
                    # next combination in lexicographic order
                    i = k - 1
                    while i >= 0 and comb[i] == nfree - k + i:
                        i -= 1
                    if i < 0:
                        break
                    comb[i] += 1
                    for j in range(i + 1, k):
                        comb[j] = comb[j - 1] + 1
        return res
    finally:
        free(na)
        free(freev)
        free(setv)
        free(comb)
        free(queue)
        free(blocked)
        free(seen)
        free(cond)


def delete_candidates(const u8[:, ::1] amat, pairs):
    if amat.shape[0] <= 64:
        return _delete_candidates_bits(amat, pairs)
    cdef int p = amat.shape[0]
    cdef int x, y, v, k, i, j, nna, nrest
    cdef int* na = <int*>malloc(p * sizeof(int))
    cdef int* rest = <int*>malloc(p * sizeof(int))
    cdef int* comb = <int*>malloc((p + 1) * sizeof(int))
    cdef u8* inh = <u8*>malloc(p * sizeof(u8))
    cdef u8* cond = <u8*>malloc(p * sizeof(u8))
    cdef list res = []
    try:
        for pair in pairs:
            x = pair[0]
            y = pair[1]
            nna = 0
            for v in range(p):
                if _und(amat, y, v) and _adj(amat, x, v):
                    na[nna] = v
                    nna += 1
            for k in range(nna + 1):
                for i in range(k):
                    comb[i] = i
                while True:
                    for v in range(p):
                        inh[v] = 0
                    for i in range(k):
                        inh[na[comb[i]]] = 1
                    nrest = 0
                    for i in range(nna):
                        if not inh[na[i]]:
                            rest[nrest] = na[i]
                            nrest += 1
                    if _clique(amat, rest, nrest):
                        for v in range(p):
                            cond[v] = _dir(amat, v, y)
                        for i in range(nrest):
                            cond[rest[i]] = 1
                        cond[x] = 0
                        h = tuple([na[comb[i]] for i in range(k)])
                        res.append((x, y, h, _sorted_tuple(cond, p)))
                    i = k - 1
                    while i >= 0 and comb[i] == nna - k + i:
                        i -= 1
                    if i < 0:
                        break
                    comb[i] += 1
                    for j in range(i + 1, k):
                        comb[j] = comb[j - 1] + 1
        return res
    finally:
        free(na)
        free(rest)
        free(comb)
        free(inh)
        free(cond)


def d_reachable(const u8[:, ::1] amat, int x, cond):
    cdef int p = amat.shape[0]
    cdef int v, w, head, tail, top
    cdef bint up
    cdef u8* z = <u8*>malloc(p * sizeof(u8))
    cdef u8* anc = <u8*>malloc(p * sizeof(u8))
    cdef u8* up_seen = <u8*>malloc(p * sizeof(u8))
    cdef u8* down_seen = <u8*>malloc(p * sizeof(u8))
    cdef u8* reach = <u8*>malloc(p * sizeof(u8))
    cdef int* queue = <int*>malloc(p * sizeof(int))
    cdef int* stack_v = <int*>malloc(4 * p * p * sizeof(int) + 8)
    cdef u8* stack_up = <u8*>malloc(4 * p * p * sizeof(u8) + 8)
    try:
        for v in range(p):
            z[v] = 0
            anc[v] = 0
            up_seen[v] = 0
            down_seen[v] = 0
            reach[v] = 0
        head = 0
        tail = 0
        for v in cond:
            z[<int>v] = 1
            if not anc[<int>v]:
                anc[<int>v] = 1
                queue[tail] = v
                tail += 1
        while head < tail:
            v = queue[head]
            head += 1
            for w in range(p):
                if amat[w, v] != 0 and not anc[w]:
                    anc[w] = 1
                    queue[tail] = w
                    tail += 1
        top = 0
        stack_v[top] = x
        stack_up[top] = 1
        top += 1
        while top > 0:
            top -= 1
            v = stack_v[top]
            up = stack_up[top]
            if up:
                if up_seen[v]:
                    continue
                up_seen[v] = 1
            else:
                if down_seen[v]:
                    continue
                down_seen[v] = 1
            if not z[v]:
                reach[v] = 1
            if up and not z[v]:
                for w in range(p - 1, -1, -1):
                    if amat[v, w] != 0:
                        stack_v[top] = w
                        stack_up[top] = 0
                        top += 1
                for w in range(p - 1, -1, -1):
                    if amat[w, v] != 0:
                        stack_v[top] = w
                        stack_up[top] = 1
                        top += 1
            elif not up:
                if anc[v]:
                    for w in range(p - 1, -1, -1):
                        if amat[w, v] != 0:
                            stack_v[top] = w
                            stack_up[top] = 1
                            top += 1
                if not z[v]:
                    for w in range(p - 1, -1, -1):
                        if amat[v, w] != 0:
                            stack_v[top] = w
                            stack_up[top] = 0
                            top += 1
        reach[x] = 0
        return [v for v in range(p) if reach[v]]
    finally:
        free(z)
        free(anc)
        free(up_seen)
        free(down_seen)
        free(reach)
        free(queue)
        free(stack_v)
        free(stack_up)


cdef bint _acyclic(u8[:, ::1] a) nogil:
    cdef int p = a.shape[0]
    cdef int v, w, seen = 0, top = 0
    cdef int* indeg = <int*>malloc(p * sizeof(int))
    cdef int* stack = <int*>malloc(p * sizeof(int))
    for v in range(p):
        indeg[v] = 0
    for v in range(p):
        for w in range(p):
            if a[v, w] != 0:
                if a[w, v] != 0:
                    free(indeg)
                    free(stack)
                    return False
                indeg[w] += 1
    for v in range(p):
        if indeg[v] == 0:
            stack[top] = v
            top += 1
    while top > 0:
        top -= 1
        v = stack[top]
        seen += 1
        for w in range(p):
            if a[v, w] != 0:
                indeg[w] -= 1
                if indeg[w] == 0:
                    stack[top] = w
                    top += 1
    free(indeg)
    free(stack)
    return seen == p


def pdag_to_dag(const u8[:, ::1] amat):
    if amat.shape[0] <= 64:
        return _pdag_to_dag_bits(amat)
    cdef int p = amat.shape[0]
    cdef int v, u, w, i, j, chosen, und_left = 0
    cdef bint ok
    dag_arr = np.array(amat, dtype=np.uint8, copy=True)
    cdef u8[:, ::1] dag = dag_arr
    cdef u8* rem = <u8*>malloc(p * sizeof(u8))
    # directed out-degree into the remaining nodes
    cdef int* outdir = <int*>malloc(p * sizeof(int))
    # adjacency lists: adj[v * p + k], k < nadj[v]
    cdef int* adjl = <int*>malloc(p * p * sizeof(int))
    cdef int* nadj = <int*>malloc(p * sizeof(int))
    try:
        for v in range(p):
            rem[v] = 1
            outdir[v] = 0
            nadj[v] = 0
            for w in range(p):
                if _adj(amat, v, w):
                    adjl[v * p + nadj[v]] = w
                    nadj[v] += 1
                    if _dir(amat, v, w):
                        outdir[v] += 1
                    elif w > v and amat[v, w] != 0:
                        und_left += 1
        while und_left > 0:
            chosen = -1
            for v in range(p):
                if not rem[v] or outdir[v] != 0:
                    continue
                ok = True
                for i in range(nadj[v]):
                    u = adjl[v * p + i]
                    if not rem[u] or not _und(amat, v, u):
                        continue
                    for j in range(nadj[v]):
                        w = adjl[v * p + j]
                        if w != u and rem[w] and not _adj(amat, u, w):
                            ok = False
                            break
                    if not ok:
                        break
                if ok:
                    chosen = v
                    break
            if chosen < 0:
                return None
            rem[chosen] = 0
            for i in range(nadj[chosen]):
                u = adjl[chosen * p + i]
                if not rem[u]:
                    continue
                if _und(amat, chosen, u):
                    dag[chosen, u] = 0
                    und_left -= 1
                elif _dir(amat, u, chosen):
                    outdir[u] -= 1
        if not _acyclic(dag):
            return None
        return dag_arr
    finally:
        free(rem)
        free(outdir)
        free(adjl)
        free(nadj)


cdef void _meek(u8[:, ::1] a) nogil:
    cdef int p = a.shape[0]
    cdef int av, b, c, d
    cdef bint changed = True, orient
    while changed:
        changed = False
        for av in range(p):
            for b in range(p):
                if not _und(a, av, b):
                    continue
                orient = False
                # R1: c -> a - b, c and b non-adjacent
                for c in range(p):
                    if c != b and _dir(a, c, av) and not _adj(a, c, b):
                        orient = True
                        break
                # R2: a -> c -> b
                if not orient:
                    for c in range(p):
                        if _dir(a, av, c) and _dir(a, c, b):
                            orient = True
                            break
                # R3: a - c -> b, a - d -> b, c and d non-adjacent
                if not orient:
                    for c in range(p):
                        if not (_und(a, av, c) and _dir(a, c, b)):
                            continue
                        for d in range(c + 1, p):
                            if _und(a, av, d) and _dir(a, d, b) and not _adj(a, c, d):
                                orient = True
                                break
                        if orient:
                            break
                # R4: a - d -> c -> b, a adjacent c, d and b non-adjacent
                if not orient:
                    for c in range(p):
                        if not (_dir(a, c, b) and _adj(a, av, c)):
                            continue
                        for d in range(p):
                            if d != b and _dir(a, d, c) and _und(a, av, d) and not _adj(a, d, b):
                                orient = True
                                break
                        if orient:
                            break
                if orient:
                    a[b, av] = 0
                    changed = True


def meek_close(const u8[:, ::1] amat):
    res = np.array(amat, dtype=np.uint8, copy=True)
    cdef u8[:, ::1] view = res
    _meek(view)
    return res


cdef int _topo(const u8[:, ::1] a, int* order) nogil:
    # Kahn's algorithm on a DAG; returns the number of nodes ordered
    cdef int p = a.shape[0]
    cdef int v, w, head = 0, tail = 0
    cdef int* indeg = <int*>malloc(p * sizeof(int))
    for v in range(p):
        indeg[v] = 0
    for v in range(p):
        for w in range(p):
            if a[v, w] != 0:
                indeg[w] += 1
    for v in range(p):
        if indeg[v] == 0:
            order[tail] = v
            tail += 1
    while head < tail:
        v = order[head]
        head += 1
        for w in range(p):
            if a[v, w] != 0:
                indeg[w] -= 1
                if indeg[w] == 0:
                    order[tail] = w
                    tail += 1
    free(indeg)
    return tail


def cpdag_from_dag(const u8[:, ::1] amat):
    """Chickering's compelled-edge labelling; the same CPDAG as v-structures
    followed by Meek closure."""
    if amat.shape[0] <= 64:
        return _cpdag_from_dag_bits(amat)
    cdef int p = amat.shape[0]
    cdef int i, k, x, y, w, z
    cdef bint done, found
    res = np.array(amat, dtype=np.uint8, copy=True)
    cdef u8[:, ::1] r = res
    # 0 unknown, 1 compelled, 2 reversible
    cdef u8* lab = <u8*>malloc(p * p * sizeof(u8))
    cdef int* order = <int*>malloc(p * sizeof(int))
    cdef int* pos = <int*>malloc(p * sizeof(int))
    try:
        if _topo(amat, order) != p:
            raise ValueError("graph has a directed cycle")
        for i in range(p):
            pos[order[i]] = i
        for i in range(p * p):
            lab[i] = 0
        for k in range(p):
            y = order[k]
            x = -1
            for i in range(p):
                if amat[i, y] != 0 and (x < 0 or pos[i] > pos[x]):
                    x = i
            if x < 0:
                continue
            done = False
            for w in range(p):
                if amat[w, x] == 0 or lab[w * p + x] != 1:
                    continue
                if amat[w, y] == 0:
                    for i in range(p):
                        if amat[i, y] != 0:
                            lab[i * p + y] = 1
                    done = True
                    break
                lab[w * p + y] = 1
            if done:
                continue
            found = False
            for z in range(p):
                if z != x and amat[z, y] != 0 and amat[z, x] == 0:
                    found = True
                    break
            for i in range(p):
                if amat[i, y] != 0 and lab[i * p + y] == 0:
                    lab[i * p + y] = 1 if found else 2
        for i in range(p):
            for k in range(p):
                if amat[i, k] != 0 and lab[i * p + k] == 2:
                    r[k, i] = 1
        return res
    finally:
        free(lab)
        free(order)
        free(pos)


cdef bint _cholesky(double* a, double* low, int k, double jitter) nogil:
    cdef int i, j, m
    cdef double s, dmin, amax
    for i in range(k):
        for j in range(i + 1):
            s = a[i * k + j]
            if i == j:
                s += jitter
            for m in range(j):
                s -= low[i * k + m] * low[j * k + m]
            if i == j:
                if not s > 0.0 or not isfinite(s):
                    return False
                low[i * k + i] = sqrt(s)
            else:
                low[i * k + j] = s / low[j * k + j]
    dmin = low[0] * low[0]
    amax = a[0] + jitter
    for i in range(k):
        s = low[i * k + i] * low[i * k + i]
        if s < dmin:
            dmin = s
        if a[i * k + i] + jitter > amax:
            amax = a[i * k + i] + jitter
    if dmin <= 1e-14 * amax:
        return False
    return True


def residual_variance(const double[:, ::1] cov, int y, parents):
    cdef list idx = list(parents)
    cdef int k = len(idx), i, j
    cdef double syy = cov[y, y]
    if k == 0:
        return syy
    cdef double* a = <double*>malloc(k * k * sizeof(double))
    cdef double* low = <double*>malloc(k * k * sizeof(double))
    cdef double* b = <double*>malloc(k * sizeof(double))
    cdef double* w = <double*>malloc(k * sizeof(double))
    cdef int* ix = <int*>malloc(k * sizeof(int))
    cdef double trace = 0.0, jitter = 0.0, base, s, acc = 0.0
    try:
        for i in range(k):
            ix[i] = idx[i]
        for i in range(k):
            b[i] = cov[ix[i], y]
            for j in range(k):
                a[i * k + j] = cov[ix[i], ix[j]]
            trace += a[i * k + i]
        base = 1e-10 * trace if trace > 0 else 1e-10
        while not _cholesky(a, low, k, jitter):
            jitter = base if jitter == 0.0 else jitter * 10.0
        for i in range(k):
            s = b[i]
            for j in range(i):
                s -= low[i * k + j] * w[j]
            w[i] = s / low[i * k + i]
            acc += w[i] * w[i]
        return syy - acc
    finally:
        free(a)
        free(low)
        free(b)
        free(w)
        free(ix)


def turn_candidates(const u8[:, ::1] amat, pairs):
    """Valid turns ``(x, y, H, dcond, T, icond)`` making ``x -> y``.

    For each pair, every valid ``Delete(y, x, H)`` is applied and the result
    recompleted; the valid ``Insert(x, y, T)`` of that state follow.
    ``dcond`` is the deletion's conditioning set for ``x`` (without ``y``),
    ``icond`` the insertion's conditioning set for ``y``.
    """
    cdef int p = amat.shape[0]
    cdef int x, y, h
    cdef list res = []
    cdef u8[:, ::1] m
    if p <= 64:
        return _turn_candidates_bits(amat, pairs)
    for pair in pairs:
        x = pair[0]
        y = pair[1]
        for _, _, hs, dcond in delete_candidates(amat, [(y, x)]):
            mid = np.array(amat, dtype=np.uint8, copy=True)
            m = mid
            m[x, y] = 0
            m[y, x] = 0
            for h in hs:
                if m[y, h] != 0 and m[h, y] != 0:
                    m[h, y] = 0
                if m[x, h] != 0 and m[h, x] != 0:
                    m[h, x] = 0
            dag = pdag_to_dag(mid)
            if dag is None:
                raise ValueError("deletion left a PDAG without a consistent extension")
            for _, _, t, icond in insert_candidates(cpdag_from_dag(dag), [(x, y)]):
                res.append((x, y, hs, dcond, t, icond))
    return res


# --- bitset cores (p <= 64) ---------------------------------------------------
# out[v] has bit w set when amat[v, w] != 0; inc[v] has bit w when amat[w, v] != 0.

ctypedef unsigned long long u64

cdef inline u64 _bit(int v) nogil:
    return (<u64>1) << v


cdef inline int _lowest(u64 m) nogil:
    return __builtin_ctzll(m)


cdef extern from *:
    int __builtin_ctzll(unsigned long long) nogil
    int __builtin_popcountll(unsigned long long) nogil


cdef void _to_bits(const u8[:, ::1] a, u64* out, u64* inc) nogil:
    cdef int p = a.shape[0], v, w
    for v in range(p):
        out[v] = 0
        inc[v] = 0
    for v in range(p):
        for w in range(p):
            if a[v, w] != 0:
                out[v] |= _bit(w)
                inc[w] |= _bit(v)


cdef object _bits_to_array(int p, u64* out):
    arr = np.zeros((p, p), dtype=np.uint8)
    cdef u8[:, ::1] r = arr
    cdef int v, w
    cdef u64 m
    for v in range(p):
        m = out[v]
        while m:
            w = _lowest(m)
            m &= m - 1
            r[v, w] = 1
    return arr


cdef tuple _mask_tuple(u64 m):
    cdef list out = []
    while m:
        out.append(_lowest(m))
        m &= m - 1
    return tuple(out)


cdef bint _acyclic_bits(int p, u64* out, u64* inc) nogil:
    cdef u64 rem = (_bit(p) - 1) if p < 64 else <u64>(-1)
    cdef u64 srcs, m
    cdef int v
    cdef bint progress
    for v in range(p):
        if out[v] & inc[v]:
            return False
    while rem:
        srcs = 0
        m = rem
        while m:
            v = _lowest(m)
            m &= m - 1
            if not (inc[v] & rem):
                srcs |= _bit(v)
        if not srcs:
            return False
        rem &= ~srcs
    return True


cdef bint _p2d_bits(int p, u64* out, u64* inc, u64* dout, u64* dinc) nogil:
    """Dor-Tarsi extension into dout/dinc; lowest-index eligible vertex first."""
    cdef u64 rem = (_bit(p) - 1) if p < 64 else <u64>(-1)
    cdef u64 m, ne, av, nb
    cdef int v, u, chosen
    cdef bint ok, und_left
    for v in range(p):
        dout[v] = out[v]
        dinc[v] = inc[v]
    while True:
        und_left = False
        m = rem
        while m:
            v = _lowest(m)
            m &= m - 1
            if out[v] & inc[v] & rem:
                und_left = True
                break
        if not und_left:
            break
        chosen = -1
        m = rem
        while m:
            v = _lowest(m)
            m &= m - 1
            if out[v] & ~inc[v] & rem:
                continue
            ne = out[v] & inc[v] & rem
            av = (out[v] | inc[v]) & rem
            ok = True
            nb = ne
            while nb:
                u = _lowest(nb)
                nb &= nb - 1
                if ((out[u] | inc[u] | _bit(u)) & av) != av:
                    ok = False
                    break
            if ok:
                chosen = v
                break
        if chosen < 0:
            return False
        nb = out[chosen] & inc[chosen] & rem
        while nb:
            u = _lowest(nb)
            nb &= nb - 1
            dout[chosen] &= ~_bit(u)
            dinc[u] &= ~_bit(chosen)
        rem &= ~_bit(chosen)
    return _acyclic_bits(p, dout, dinc)


cdef void _c2d_bits(int p, u64* dout, u64* dinc, u64* cout, u64* cinc, int* order, u64* comp, u64* rev) nogil:
    """Compelled-edge labelling of a DAG into CPDAG masks.

    comp[y] / rev[y] collect parents of y whose edge is compelled / reversible.
    """
    cdef u64 rem = (_bit(p) - 1) if p < 64 else <u64>(-1)
    cdef u64 srcs, m, known, pa_y
    cdef int v, k = 0, y, x, w, i, best
    cdef bint done
    cdef int pos[64]
    while rem:
        srcs = 0
        m = rem
        while m:
            v = _lowest(m)
            m &= m - 1
            if not (dinc[v] & rem):
                srcs |= _bit(v)
        # ascending index within a layer
        m = srcs
        while m:
            v = _lowest(m)
            m &= m - 1
            order[k] = v
            pos[v] = k
            k += 1
        rem &= ~srcs
    for v in range(p):
        comp[v] = 0
        rev[v] = 0
    for i in range(p):
        y = order[i]
        pa_y = dinc[y]
        if not pa_y:
            continue
        x = -1
        best = -1
        m = pa_y
        while m:
            v = _lowest(m)
            m &= m - 1
            if pos[v] > best:
                best = pos[v]
                x = v
        done = False
        m = comp[x]
        while m:
            w = _lowest(m)
            m &= m - 1
            if not (pa_y & _bit(w)):
                comp[y] = pa_y
                done = True
                break
            comp[y] |= _bit(w)
        if done:
            continue
        known = comp[y]
        if pa_y & ~_bit(x) & ~dinc[x]:
            comp[y] |= pa_y & ~known
        else:
            rev[y] |= pa_y & ~known
    for v in range(p):
        cout[v] = dout[v]
        cinc[v] = dinc[v]
    for y in range(p):
        m = rev[y]
        while m:
            v = _lowest(m)
            m &= m - 1
            cout[y] |= _bit(v)
            cinc[v] |= _bit(y)


cdef bint _reaches_bits(u64* out, int src, int dst, u64 blocked) nogil:
    cdef u64 seen = _bit(src) | blocked
    cdef u64 front = _bit(src), nxt
    cdef int v
    while front:
        nxt = 0
        while front:
            v = _lowest(front)
            front &= front - 1
            nxt |= out[v]
        if nxt & _bit(dst):
            return True
        front = nxt & ~seen
        seen |= front
    return False


cdef inline bint _clique_bits(u64* out, u64* inc, u64 s) nogil:
    cdef u64 m = s
    cdef int v
    while m:
        v = _lowest(m)
        m &= m - 1
        if (s & ~_bit(v)) & ~(out[v] | inc[v]):
            return False
    return True


cdef void _insert_pair_bits(u64* out, u64* inc, int x, int y, list res, object prefix):
    """Append ``prefix + (T, cond)`` for every valid Insert(x, y, T)."""
    cdef u64 ne_y = out[y] & inc[y]
    cdef u64 adj_x = out[x] | inc[x]
    cdef u64 na = ne_y & adj_x
    cdef u64 free_m = ne_y & ~adj_x
    cdef u64 pa_y = inc[y] & ~out[y]
    cdef u64 t, s
    cdef int fv[64]
    cdef int comb[65]
    cdef int nfree = 0, k, i, j
    if not _clique_bits(out, inc, na):
        return
    while free_m:
        fv[nfree] = _lowest(free_m)
        free_m &= free_m - 1
        nfree += 1
    for k in range(nfree + 1):
        for i in range(k):
            comb[i] = i
        while True:
            t = 0
            for i in range(k):
                t |= _bit(fv[comb[i]])
            s = na | t
            if _clique_bits(out, inc, s) and not _reaches_bits(out, y, x, s):
                res.append(prefix + (_mask_tuple(t), _mask_tuple(s | pa_y)))
            i = k - 1
            while i >= 0 and comb[i] == nfree - k + i:
                i -= 1
            if i < 0:
                break
            comb[i] += 1
            for j in range(i + 1, k):
                comb[j] = comb[j - 1] + 1


def _turn_candidates_bits(const u8[:, ::1] amat, pairs):
    cdef int p = amat.shape[0]
    cdef int x, y, h, i, j, k, nna
    cdef u64 out[64]
    cdef u64 inc[64]
    cdef u64 mout[64]
    cdef u64 minc[64]
    cdef u64 dout[64]
    cdef u64 dinc[64]
    cdef u64 cout[64]
    cdef u64 cinc[64]
    cdef u64 comp[64]
    cdef u64 rev[64]
    cdef int order[64]
    cdef int nav[64]
    cdef int comb[65]
    cdef u64 na, hm, hmm, rest, dcond
    cdef list res = []
    _to_bits(amat, out, inc)
    for pair in pairs:
        x = pair[0]
        y = pair[1]
        # Delete(y, x, H): NA = Ne_x & Adj_y, H a subset with NA \ H a clique
        na = out[x] & inc[x] & (out[y] | inc[y])
        nna = 0
        hm = na
        while hm:
            nav[nna] = _lowest(hm)
            hm &= hm - 1
            nna += 1
        for k in range(nna + 1):
            for i in range(k):
                comb[i] = i
            while True:
                hm = 0
                for i in range(k):
                    hm |= _bit(nav[comb[i]])
                rest = na & ~hm
                if _clique_bits(out, inc, rest):
                    dcond = (rest | (inc[x] & ~out[x])) & ~_bit(y)
                    for i in range(p):
                        mout[i] = out[i]
                        minc[i] = inc[i]
                    mout[x] &= ~_bit(y)
                    mout[y] &= ~_bit(x)
                    minc[x] &= ~_bit(y)
                    minc[y] &= ~_bit(x)
                    hmm = hm
                    while hmm:
                        h = _lowest(hmm)
                        hmm &= hmm - 1
                        # y - h becomes y -> h, x - h becomes x -> h
                        if (mout[y] & _bit(h)) and (minc[y] & _bit(h)):
                            mout[h] &= ~_bit(y)
                            minc[y] &= ~_bit(h)
                        if (mout[x] & _bit(h)) and (minc[x] & _bit(h)):
                            mout[h] &= ~_bit(x)
                            minc[x] &= ~_bit(h)
                    if not _p2d_bits(p, mout, minc, dout, dinc):
                        raise ValueError("deletion left a PDAG without a consistent extension")
                    _c2d_bits(p, dout, dinc, cout, cinc, order, comp, rev)
                    _insert_pair_bits(cout, cinc, x, y, res,
                                      (x, y, _mask_tuple(hm), _mask_tuple(dcond)))
                i = k - 1
                while i >= 0 and comb[i] == nna - k + i:
                    i -= 1
                if i < 0:
                    break
                comb[i] += 1
                for j in range(i + 1, k):
                    comb[j] = comb[j - 1] + 1
    return res


def _pdag_to_dag_bits(const u8[:, ::1] amat):
    cdef int p = amat.shape[0]
    cdef u64 out[64]
    cdef u64 inc[64]
    cdef u64 dout[64]
    cdef u64 dinc[64]
    _to_bits(amat, out, inc)
    if not _p2d_bits(p, out, inc, dout, dinc):
        return None
    return _bits_to_array(p, dout)


def _cpdag_from_dag_bits(const u8[:, ::1] amat):
    cdef int p = amat.shape[0]
    cdef u64 out[64]
    cdef u64 inc[64]
    cdef u64 cout[64]
    cdef u64 cinc[64]
    cdef u64 comp[64]
    cdef u64 rev[64]
    cdef int order[64]
    _to_bits(amat, out, inc)
    if not _acyclic_bits(p, out, inc):
        raise ValueError("graph has a directed cycle")
    _c2d_bits(p, out, inc, cout, cinc, order, comp, rev)
    return _bits_to_array(p, cout)


def _insert_candidates_bits(const u8[:, ::1] amat, pairs):
    cdef u64 out[64]
    cdef u64 inc[64]
    cdef list res = []
    cdef int x, y
    _to_bits(amat, out, inc)
    for pair in pairs:
        x = pair[0]
        y = pair[1]
        _insert_pair_bits(out, inc, x, y, res, (x, y))
    return res


def _delete_candidates_bits(const u8[:, ::1] amat, pairs):
    cdef u64 out[64]
    cdef u64 inc[64]
    cdef int nav[64]
    cdef int comb[65]
    cdef list res = []
    cdef int x, y, k, i, j, nna
    cdef u64 na, hm, rest, pa_y
    _to_bits(amat, out, inc)
    for pair in pairs:
        x = pair[0]
        y = pair[1]
        na = out[y] & inc[y] & (out[x] | inc[x])
        pa_y = inc[y] & ~out[y]
        nna = 0
        hm = na
        while hm:
            nav[nna] = _lowest(hm)
            hm &= hm - 1
            nna += 1
        for k in range(nna + 1):
            for i in range(k):
                comb[i] = i
            while True:
                hm = 0
                for i in range(k):
                    hm |= _bit(nav[comb[i]])
                rest = na & ~hm
                if _clique_bits(out, inc, rest):
                    res.append((x, y, _mask_tuple(hm), _mask_tuple((rest | pa_y) & ~_bit(x))))
                i = k - 1
                while i >= 0 and comb[i] == nna - k + i:
                    i -= 1
                if i < 0:
                    break
                comb[i] += 1
                for j in range(i + 1, k):
                    comb[j] = comb[j - 1] + 1
    return res


def descendant_matrix(const u8[:, ::1] amat):
    """``d[v, w] = 1`` when ``w`` is a proper descendant of ``v`` along
    directed edges; the directed part must be acyclic."""
    cdef int p = amat.shape[0]
    cdef int v, w, i, k
    res = np.zeros((p, p), dtype=np.uint8)
    cdef u8[:, ::1] r = res
    cdef int* order = <int*>malloc(p * sizeof(int))
    cdef u8* dirm = <u8*>malloc(p * p * sizeof(u8))
    try:
        for v in range(p):
            for w in range(p):
                dirm[v * p + w] = _dir(amat, v, w)
        # Kahn over directed edges only
        k = _topo_dir(dirm, p, order)
        if k != p:
            raise ValueError("directed part has a cycle")
        for i in range(p - 1, -1, -1):
            v = order[i]
            for w in range(p):
                if dirm[v * p + w]:
                    r[v, w] = 1
                    for k in range(p):
                        if r[w, k]:
                            r[v, k] = 1
        return res
    finally:
        free(order)
        free(dirm)


cdef int _topo_dir(u8* dirm, int p, int* order) nogil:
    cdef int v, w, head = 0, tail = 0
    cdef int* indeg = <int*>malloc(p * sizeof(int))
    for v in range(p):
        indeg[v] = 0
    for v in range(p):
        for w in range(p):
            if dirm[v * p + w]:
                indeg[w] += 1
    for v in range(p):
        if indeg[v] == 0:
            order[tail] = v
            tail += 1
    while head < tail:
        v = order[head]
        head += 1
        for w in range(p):
            if dirm[v * p + w]:
                indeg[w] -= 1
                if indeg[w] == 0:
                    order[tail] = w
                    tail += 1
    free(indeg)
    return tail
