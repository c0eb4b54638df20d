"""Pure-Python reference implementation of the transport solver core.

Mirrors the compiled extension in ``_speedups.pyx``; the package selects one
of the two at import time.  The algorithms:

* ``network_simplex`` -- primal network simplex for the dense balanced
  transportation problem: block pricing with a deterministic Bland-style
  fallback against degenerate cycling, spanning-tree basis kept in
  first-child/sibling arrays.
* ``quantile_plan_1d`` -- northwest-corner (monotone) coupling for sorted
  one-dimensional marginals together with dual potentials propagated along
  the staircase; optimal for costs |x-y|^q, q >= 1.
"""

import numpy as np

BACKEND = "python"


def quantile_plan_1d(a, b, cost_of_arc):
    """Monotone coupling of sorted 1d marginals.

    ``cost_of_arc(i, j)`` returns the transport cost of the (i, j) pair and
    is used to propagate dual potentials along the staircase.
    Returns (ii, jj, flow, u, w).
    """
    a = np.asarray(a, dtype=float)
    b = np.asarray(b, dtype=float)
    n, m = len(a), len(b)
    ii = np.empty(n + m - 1, dtype=np.int64)
    jj = np.empty(n + m - 1, dtype=np.int64)
    vv = np.empty(n + m - 1, dtype=float)
    u = np.zeros(n)
    w = np.zeros(m)

    ra, rb = a[0], b[0]
    i = j = k = 0
    w[0] = cost_of_arc(0, 0)
    while True:
        ii[k] = i
        jj[k] = j
        step = min(ra, rb)
        vv[k] = step
        k += 1
        ra -= step
        rb -= step
        if i == n - 1 and j == m - 1:
            break
        # advance the exhausted side; on ties advance the row first, which
        # keeps a connected staircase with a degenerate zero arc
        if ra <= rb and i < n - 1:
            i += 1
            ra = a[i]
            u[i] = cost_of_arc(i, j) - w[j]
        else:
            j += 1
            rb = b[j]
            w[j] = cost_of_arc(i, j) - u[i]
    return ii[:k], jj[:k], vv[:k], u, w


def network_simplex(cost, a, b, max_iter=0):
    """Dense transportation problem by primal network simplex.

    Parameters: ``cost`` (n, m) array, ``a`` supplies, ``b`` demands with
    equal totals.  Returns (ii, jj, flow, u, w, n_pivots): the basic flows
    and the dual potentials (u[0] = 0).
    """
    c = np.ascontiguousarray(cost, dtype=float)
    a = np.asarray(a, dtype=float)
    b = np.asarray(b, dtype=float)
    n, m = c.shape
    nodes = n + m
    if max_iter <= 0:
        max_iter = 1000 * nodes + 100_000
    c_flat = c.ravel()

    # --- northwest-corner initial basis -----------------------------------
    basis_i = np.empty(nodes - 1, dtype=np.int64)
    basis_j = np.empty(nodes - 1, dtype=np.int64)
    basis_f = np.empty(nodes - 1, dtype=float)
    ra, rb = a[0], b[0]
    i = j = 0
    for k in range(nodes - 1):
        basis_i[k] = i
        basis_j[k] = j
        step = min(ra, rb)
        basis_f[k] = step
        ra -= step
        rb -= step
        if ra <= rb and i < n - 1:
            i += 1
            ra = a[i]
        elif j < m - 1:
            j += 1
            rb = b[j]
        # else: last cell (n-1, m-1); loop is about to end

    # tree arrays; node ids: sources 0..n-1, sinks n..n+m-1, root = node 0
    parent = np.full(nodes, -1, dtype=np.int64)
    pflow = np.zeros(nodes)          # flow on the arc to the parent
    depth = np.zeros(nodes, dtype=np.int64)
    pot = np.zeros(nodes)            # u on sources, w on sinks
    first_child = np.full(nodes, -1, dtype=np.int64)
    next_sib = np.full(nodes, -1, dtype=np.int64)
    prev_sib = np.full(nodes, -1, dtype=np.int64)

    def attach(v, p):
        parent[v] = p
        next_sib[v] = first_child[p]
        prev_sib[v] = -1
        if first_child[p] >= 0:
            prev_sib[first_child[p]] = v
        first_child[p] = v

    def detach(v):
        p = parent[v]
        if prev_sib[v] >= 0:
            next_sib[prev_sib[v]] = next_sib[v]
        else:
            first_child[p] = next_sib[v]
        if next_sib[v] >= 0:
            prev_sib[next_sib[v]] = prev_sib[v]

    # consecutive staircase arcs share exactly one endpoint; the other is new
    attach(n + basis_j[0], 0)
    pflow[n + basis_j[0]] = basis_f[0]
    for k in range(1, nodes - 1):
        si, sj = basis_i[k], n + basis_j[k]
        if basis_i[k] == basis_i[k - 1]:   # same row: the sink is new
            attach(sj, si)
            pflow[sj] = basis_f[k]
        else:                              # same column: the source is new
            attach(si, sj)
            pflow[si] = basis_f[k]

    def refresh_potentials():
        stack = [0]
        while stack:
            p = stack.pop()
            v = first_child[p]
            while v >= 0:
                depth[v] = depth[p] + 1
                if v >= n:
                    pot[v] = c[p, v - n] - pot[p]
                else:
                    pot[v] = c[v, p - n] - pot[p]
                stack.append(v)
                v = next_sib[v]

    refresh_potentials()

    tol = 1e-12 * max(1.0, float(np.max(np.abs(c))))
    block = max(64, int(np.sqrt(n * m)))
    arc_count = n * m
    scan_from = 0
    pivots = 0
    bland = False
    bland_after = 50 * nodes + 10_000
    cand = np.empty(0, dtype=np.int64)  # altering candidate list
    cand_cap, min_fill = 256, 64

    while pivots < max_iter:
        # --- entering arc --------------------------------------------------
        enter = -1
        if not bland:
            best = -tol
            if len(cand):
                rc = c_flat[cand] - pot[cand // m] - pot[n + cand % m]
                keep = rc < -tol
                cand = cand[keep]
                rc = rc[keep]
                if len(cand):
                    kmin = int(np.argmin(rc))
                    if rc[kmin] < best:
                        best = rc[kmin]
                        enter = int(cand[kmin])
            if enter < 0:
                found = []
                scanned = 0
                pos = scan_from
                count = 0
                while scanned < arc_count:
                    hi = min(pos + block, arc_count)
                    ks = np.arange(pos, hi)
                    rc = c_flat[pos:hi] - pot[ks // m] - pot[n + (ks % m)]
                    hit = ks[rc < -tol]
                    if len(hit):
                        found.append(hit)
                        count += len(hit)
                        kmin = int(np.argmin(rc))
                        if rc[kmin] < best:
                            best = rc[kmin]
                            enter = pos + kmin
                    scanned += hi - pos
                    pos = hi if hi < arc_count else 0
                    if count >= min_fill:
                        break
                scan_from = pos
                cand = (
                    np.concatenate(found)[:cand_cap]
                    if found else np.empty(0, dtype=np.int64)
                )
        else:
            for start in range(0, arc_count, 4096):
                hi = min(start + 4096, arc_count)
                ks = np.arange(start, hi)
                rc = c_flat[start:hi] - pot[ks // m] - pot[n + (ks % m)]
                hits = np.nonzero(rc < -tol)[0]
                if len(hits):
                    enter = start + int(hits[0])
                    break
        if enter < 0:
            break  # optimal

        ei, ej = enter // m, n + enter % m
        rc_val = c_flat[enter] - pot[ei] - pot[ej]

        # --- cycle: walk both endpoints to their common ancestor -----------
        # arcs on the two upward paths alternate signs -, +, -, ...
        path_x, path_y = [], []
        x, y, sx, sy = ei, ej, -1, -1
        while depth[x] > depth[y]:
            path_x.append((x, sx))
            x = parent[x]
            sx = -sx
        while depth[y] > depth[x]:
            path_y.append((y, sy))
            y = parent[y]
            sy = -sy
        while x != y:
            path_x.append((x, sx))
            x = parent[x]
            sx = -sx
            path_y.append((y, sy))
            y = parent[y]
            sy = -sy

        theta = np.inf
        leave = -1
        leave_on_x = False
        for v, s in path_y:
            if s < 0 and pflow[v] < theta - 1e-30:
                theta = pflow[v]
                leave = v
                leave_on_x = False
        for v, s in path_x:
            if s < 0 and pflow[v] < theta - 1e-30:
                theta = pflow[v]
                leave = v
                leave_on_x = True
        if leave < 0:
            raise RuntimeError("unbounded pivot in balanced problem")

        for v, s in path_x:
            pflow[v] += s * theta
        for v, s in path_y:
            pflow[v] += s * theta

        # --- basis exchange: re-root the cut subtree at the entering node --
        sub_root = ei if leave_on_x else ej
        new_parent = ej if leave_on_x else ei
        path = [sub_root]
        v = sub_root
        while v != leave:
            v = parent[v]
            path.append(v)
        flows = [pflow[v] for v in path]
        for t in range(len(path) - 1, 0, -1):
            detach(path[t])
            attach(path[t], path[t - 1])
            pflow[path[t]] = flows[t - 1]
        detach(sub_root)
        attach(sub_root, new_parent)
        pflow[sub_root] = theta

        # nodes of sub_root's type shift by rc, the other type by -rc,
        # keeping every basic arc tight and making the entering arc tight
        same_sink = sub_root >= n
        stack = [sub_root]
        depth[sub_root] = depth[new_parent] + 1
        pot[sub_root] += rc_val
        while stack:
            p = stack.pop()
            v = first_child[p]
            while v >= 0:
                pot[v] += rc_val if (v >= n) == same_sink else -rc_val
                depth[v] = depth[p] + 1
                stack.append(v)
                v = next_sib[v]

        pivots += 1
        if pivots == bland_after:
            bland = True
        if pivots % 4096 == 0:
            refresh_potentials()  # guard against numerical drift

    if pivots >= max_iter:
        raise RuntimeError("network simplex exceeded its pivot budget")

    ii = np.empty(nodes - 1, dtype=np.int64)
    jj = np.empty(nodes - 1, dtype=np.int64)
    vv = np.empty(nodes - 1, dtype=float)
    k = 0
    for v in range(nodes):
        p = parent[v]
        if p < 0:
            continue
        if v >= n:
            ii[k], jj[k] = p, v - n
        else:
            ii[k], jj[k] = v, p - n
        vv[k] = pflow[v]
        k += 1
    return ii[:k], jj[:k], vv[:k], pot[:n].copy(), pot[n:].copy(), pivots
