"""Transportation simplex (MODI / u-v method) on dense cost matrices.

Solves  min <C, P>  over  P >= 0, P 1 = a, P^T 1 = b  exactly, returning a
vertex of the transport polytope. The basis is a spanning tree over the
bipartite node set (rows 0..n-1, cols n..n+m-1) with exactly n+m-1 basic
arcs, degenerate (zero-flow) arcs included. Entering arc by Dantzig rule
(most negative reduced cost) with a Bland-style fallback (first negative,
lexicographic) after a streak of degenerate pivots, which prevents cycling.

Pricing uses cyclic block search: each entering-arc search scans a block of
cells onward from a moving cursor and takes the most negative reduced cost
found, falling back to further blocks until a full sweep proves optimality.
Flows are produced by additions and subtractions of the input weights only,
so a clean instance solves to the weight data's own precision.
"""

import numpy as np
from numba import njit

STATUS_OK = 0
STATUS_MAX_PIVOTS = 1

# consecutive zero-theta pivots before switching to Bland's rule
_DEGEN_STREAK = 64


@njit(cache=True, nogil=True)
def _tree_arrays(n, m, basis_i, basis_j, nb, head, nxt, arc_of):
    """Rebuild adjacency lists (head/next chains) for the basis tree."""
    nn = n + m
    for v in range(nn):
        head[v] = -1
    for e in range(nb):
        i = basis_i[e]
        j = n + basis_j[e]
        # push arc e onto both endpoint lists; slots 2e and 2e+1
        nxt[2 * e] = head[i]
        head[i] = 2 * e
        arc_of[2 * e] = e
        nxt[2 * e + 1] = head[j]
        head[j] = 2 * e + 1
        arc_of[2 * e + 1] = e


@njit(cache=True, nogil=True)
def _solve(C, a, b, max_pivots):
    n, m = C.shape
    nn = n + m
    nb = n + m - 1

    basis_i = np.empty(nb, np.int64)
    basis_j = np.empty(nb, np.int64)
    flow = np.empty(nb, np.float64)

    # ---- northwest-corner initial basis ----
    ra = a[0]
    rb = b[0]
    i = 0
    j = 0
    e = 0
    while e < nb:
        basis_i[e] = i
        basis_j[e] = j
        if ra <= rb or j == m - 1:
            flow[e] = ra
            rb -= ra
            i += 1
            if i < n:
                ra = a[i]
        else:
            flow[e] = rb
            ra -= rb
            j += 1
            if j < m:
                rb = b[j]
        e += 1

    head = np.empty(nn, np.int64)
    nxt = np.empty(2 * nb, np.int64)
    arc_of = np.empty(2 * nb, np.int64)
    u = np.empty(n, np.float64)
    v = np.empty(m, np.float64)
    parent = np.empty(nn, np.int64)
    parent_arc = np.empty(nn, np.int64)
    order = np.empty(nn, np.int64)
    cycle = np.empty(nn, np.int64)
    cyc_sign = np.empty(nn, np.int64)

    cmax = 0.0
    for ii in range(n):
        for jj in range(m):
            cc = abs(C[ii, jj])
            if cc > cmax:
                cmax = cc
    tol = 1e-12 * max(1.0, cmax)

    ncells = n * m
    block = int(np.sqrt(ncells)) + 1
    cursor = 0

    degen_streak = 0
    pivots = 0
    while pivots < max_pivots:
        _tree_arrays(n, m, basis_i, basis_j, nb, head, nxt, arc_of)

        # ---- duals from the tree, rooted at row node 0 ----
        for t in range(nn):
            parent[t] = -2
        parent[0] = -1
        order[0] = 0
        cnt = 1
        u[0] = 0.0
        k = 0
        while k < cnt:
            node = order[k]
            k += 1
            slot = head[node]
            while slot != -1:
                eid = arc_of[slot]
                ii = basis_i[eid]
                jj = n + basis_j[eid]
                other = jj if node == ii else ii
                if parent[other] == -2:
                    parent[other] = node
                    parent_arc[other] = eid
                    order[cnt] = other
                    cnt += 1
                    if other >= n:
                        v[other - n] = C[ii, jj - n] - u[ii]
                    else:
                        u[other] = C[basis_i[eid], basis_j[eid]] - v[basis_j[eid]]
                slot = nxt[slot]

        # ---- entering arc ----
        ei = -1
        ej = -1
        if degen_streak >= _DEGEN_STREAK:
            # Bland: first arc (row-major) with negative reduced cost
            for ii in range(n):
                ui = u[ii]
                for jj in range(m):
                    r = C[ii, jj] - ui - v[jj]
                    if r < -tol:
                        ei = ii
                        ej = jj
                        break
                if ei >= 0:
                    break
        else:
            # block search from the cursor, wrapping around once
            best = -tol
            scanned = 0
            pos = cursor
            while scanned < ncells:
                hi = scanned + block
                if hi > ncells:
                    hi = ncells
                while scanned < hi:
                    ii = pos // m
                    jj = pos - ii * m
                    r = C[ii, jj] - u[ii] - v[jj]
                    if r < best:
                        best = r
                        ei = ii
                        ej = jj
                    pos += 1
                    if pos == ncells:
                        pos = 0
                    scanned += 1
                if ei >= 0:
                    break
            cursor = pos
        if ei < 0:
            break  # optimal

        # ---- cycle: tree path from col node (n+ej) back to row node ei ----
        # parent pointers are rooted at node 0, not at ei, so walk both
        # endpoints up to their common ancestor.
        snode = ei
        tnode = n + ej
        # collect ancestors of snode
        pa = snode
        cnt = 0
        while pa != -1:
            order[cnt] = pa
            cnt += 1
            pa = parent[pa]
        # walk tnode upward until hitting an ancestor of snode
        onpath = np.zeros(nn, np.uint8)
        for t in range(cnt):
            onpath[order[t]] = 1
        lca = tnode
        while onpath[lca] == 0:
            lca = parent[lca]

        # cycle arcs: entering (ei, ej) plus the two tree segments down to
        # the common ancestor. sign +1 means flow increases by theta, -1
        # decreases. Signs alternate around the closed walk; since the walk
        # has even length (bipartite graph), signing each segment from its
        # endpoint arc (-1 next to the entering arc, alternating inward) is
        # globally consistent.
        clen = 0
        node = ei
        sign = -1
        while node != lca:
            cycle[clen] = parent_arc[node]
            cyc_sign[clen] = sign
            sign = -sign
            clen += 1
            node = parent[node]
        node = tnode
        sign = -1
        while node != lca:
            cycle[clen] = parent_arc[node]
            cyc_sign[clen] = sign
            sign = -sign
            clen += 1
            node = parent[node]

        # ---- theta and leaving arc (Bland tie-break: smallest arc id) ----
        theta = np.inf
        leave = -1
        for t in range(clen):
            if cyc_sign[t] < 0:
                fl = flow[cycle[t]]
                if fl < theta or (fl == theta and cycle[t] < cycle[leave]):
                    theta = fl
                    leave = t
        if leave < 0:
            # no decreasing arc: unbounded, cannot happen on a bounded polytope
            return flow, basis_i, basis_j, pivots, STATUS_MAX_PIVOTS

        for t in range(clen):
            if cyc_sign[t] > 0:
                flow[cycle[t]] += theta
            else:
                flow[cycle[t]] -= theta
        lv = cycle[leave]
        flow[lv] = 0.0
        basis_i[lv] = ei
        basis_j[lv] = ej
        flow[lv] = theta

        if theta <= 1e-15:
            degen_streak += 1
        else:
            degen_streak = 0
        pivots += 1

    status = STATUS_OK if pivots < max_pivots else STATUS_MAX_PIVOTS
    return flow, basis_i, basis_j, pivots, status


@njit(cache=True, nogil=True)
def _duals(C, basis_i, basis_j, n, m):
    """Recompute duals for a basis tree (for the optimality recheck)."""
    nn = n + m
    nb = n + m - 1
    head = np.empty(nn, np.int64)
    nxt = np.empty(2 * nb, np.int64)
    arc_of = np.empty(2 * nb, np.int64)
    _tree_arrays(n, m, basis_i, basis_j, nb, head, nxt, arc_of)
    u = np.zeros(n, np.float64)
    v = np.zeros(m, np.float64)
    seen = np.zeros(nn, np.uint8)
    order = np.empty(nn, np.int64)
    seen[0] = 1
    order[0] = 0
    cnt = 1
    k = 0
    while k < cnt:
        node = order[k]
        k += 1
        slot = head[node]
        while slot != -1:
            eid = arc_of[slot]
            ii = basis_i[eid]
            jj = n + basis_j[eid]
            other = jj if node == ii else ii
            if seen[other] == 0:
                seen[other] = 1
                if other >= n:
                    v[other - n] = C[ii, other - n] - u[ii]
                else:
                    u[other] = C[other, basis_j[eid]] - v[basis_j[eid]]
                order[cnt] = other
                cnt += 1
            slot = nxt[slot]
    return u, v


def solve_dense(C, a, b, max_pivots=None):
    """Run the simplex; returns (plan, n_pivots). Raises on non-termination."""
    C = np.ascontiguousarray(C, dtype=np.float64)
    a = np.ascontiguousarray(a, dtype=np.float64)
    b = np.ascontiguousarray(b, dtype=np.float64)
    n, m = C.shape
    if max_pivots is None:
        max_pivots = 200 * (n + m) + 2 * n * m + 20000
    flow, bi, bj, pivots, status = _solve(C, a, b, max_pivots)
    if status != STATUS_OK:
        raise RuntimeError(f"transportation simplex did not terminate within {max_pivots} pivots")
    P = np.zeros((n, m))
    P[bi, bj] = np.maximum(flow, 0.0)
    return P, pivots


def dual_residuals(C, basis_i, basis_j, n, m):
    u, v = _duals(C, basis_i, basis_j, n, m)
    return u, v
