# cython: boundscheck=False, wraparound=False, cdivision=True, initializedcheck=False
"""Compiled transport solver core.

Same algorithms and pivot rules as the pure-Python twin in ``_pyref.py``:
primal network simplex with block pricing and a Bland fallback, plus the
monotone staircase coupling for sorted one-dimensional marginals.
"""

import numpy as np
cimport numpy as cnp
from libc.math cimport INFINITY

cnp.import_array()

BACKEND = "compiled"


def quantile_plan_1d(a, b, cost_of_arc):
    """Monotone coupling of sorted 1d marginals; see the pure-Python twin."""
    cdef double[::1] av = np.ascontiguousarray(a, dtype=np.float64)
    cdef double[::1] bv = np.ascontiguousarray(b, dtype=np.float64)
    cdef Py_ssize_t n = av.shape[0], m = bv.shape[0]
    ii_arr = np.empty(n + m - 1, dtype=np.int64)
    jj_arr = np.empty(n + m - 1, dtype=np.int64)
    vv_arr = np.empty(n + m - 1, dtype=np.float64)
    u_arr = np.zeros(n, dtype=np.float64)
    w_arr = np.zeros(m, dtype=np.float64)
    cdef long long[::1] ii = ii_arr
    cdef long long[::1] jj = jj_arr
    cdef double[::1] vv = vv_arr
    cdef double[::1] u = u_arr
    cdef double[::1] w = w_arr
    cdef Py_ssize_t i = 0, j = 0, k = 0
    cdef double ra = av[0], rb = bv[0], step

    w[0] = cost_of_arc(0, 0)
    while True:
        ii[k] = i
        jj[k] = j
        step = ra if ra < rb else rb
        vv[k] = step
        k += 1
        ra -= step
        rb -= step
        if i == n - 1 and j == m - 1:
            break
        if ra <= rb and i < n - 1:
            i += 1
            ra = av[i]
            u[i] = cost_of_arc(i, j) - w[j]
        else:
            j += 1
            rb = bv[j]
            w[j] = cost_of_arc(i, j) - u[i]
    return ii_arr[:k], jj_arr[:k], vv_arr[:k], u_arr, w_arr


def network_simplex(cost, a, b, long long max_iter=0):
    """Dense transportation problem by primal network simplex."""
    c_arr = np.ascontiguousarray(cost, dtype=np.float64)
    cdef double[:, ::1] c = c_arr
    cdef double[::1] av = np.ascontiguousarray(a, dtype=np.float64)
    cdef double[::1] bv = np.ascontiguousarray(b, dtype=np.float64)
    cdef Py_ssize_t n = c.shape[0], m = c.shape[1]
    cdef Py_ssize_t nodes = n + m
    cdef long long arc_count = <long long> n * <long long> m
    if max_iter <= 0:
        max_iter = 1000 * nodes + 100_000

    basis_i_arr = np.empty(nodes - 1, dtype=np.int64)
    basis_j_arr = np.empty(nodes - 1, dtype=np.int64)
    basis_f_arr = np.empty(nodes - 1, dtype=np.float64)
    cdef long long[::1] basis_i = basis_i_arr
    cdef long long[::1] basis_j = basis_j_arr
    cdef double[::1] basis_f = basis_f_arr

    cdef Py_ssize_t i = 0, j = 0, k
    cdef double ra = av[0], rb = bv[0], step
    for k in range(nodes - 1):
        basis_i[k] = i
        basis_j[k] = j
        step = ra if ra < rb else rb
        basis_f[k] = step
        ra -= step
        rb -= step
        if ra <= rb and i < n - 1:
            i += 1
            ra = av[i]
        elif j < m - 1:
            j += 1
            rb = bv[j]

    parent_arr = np.full(nodes, -1, dtype=np.int64)
    pflow_arr = np.zeros(nodes, dtype=np.float64)
    depth_arr = np.zeros(nodes, dtype=np.int64)
    pot_arr = np.zeros(nodes, dtype=np.float64)
    first_child_arr = np.full(nodes, -1, dtype=np.int64)
    next_sib_arr = np.full(nodes, -1, dtype=np.int64)
    prev_sib_arr = np.full(nodes, -1, dtype=np.int64)
    cdef long long[::1] parent = parent_arr
    cdef double[::1] pflow = pflow_arr
    cdef long long[::1] depth = depth_arr
    cdef double[::1] pot = pot_arr
    cdef long long[::1] first_child = first_child_arr
    cdef long long[::1] next_sib = next_sib_arr
    cdef long long[::1] prev_sib = prev_sib_arr

    # work arrays for paths and traversals
    stack_arr = np.empty(nodes, dtype=np.int64)
    px_arr = np.empty(nodes, dtype=np.int64)
    py_arr = np.empty(nodes, dtype=np.int64)
    sx_arr = np.empty(nodes, dtype=np.int64)
    sy_arr = np.empty(nodes, dtype=np.int64)
    pth_arr = np.empty(nodes, dtype=np.int64)
    fl_arr = np.empty(nodes, dtype=np.float64)
    cdef long long[::1] stack = stack_arr
    cdef long long[::1] px = px_arr
    cdef long long[::1] py = py_arr
    cdef long long[::1] sgx = sx_arr
    cdef long long[::1] sgy = sy_arr
    cdef long long[::1] pth = pth_arr
    cdef double[::1] fl = fl_arr

    cdef long long v, p, w_node

    # -- tree helpers as inline code (no closures in cdef) -------------------

    # attach first staircase arc, then hook each new endpoint
    v = n + basis_j[0]
    parent[v] = 0
    first_child[0] = v
    pflow[v] = basis_f[0]
    cdef long long si, sj
    for k in range(1, nodes - 1):
        si = basis_i[k]
        sj = n + basis_j[k]
        if basis_i[k] == basis_i[k - 1]:
            v = sj
            p = si
        else:
            v = si
            p = sj
        parent[v] = p
        next_sib[v] = first_child[p]
        prev_sib[v] = -1
        if first_child[p] >= 0:
            prev_sib[first_child[p]] = v
        first_child[p] = v
        pflow[v] = basis_f[k]

    # depths and potentials from the root
    cdef Py_ssize_t top = 0
    stack[top] = 0
    top += 1
    while top > 0:
        top -= 1
        p = stack[top]
        v = first_child[p]
        while v >= 0:
            depth[v] = depth[p] + 1
            if v >= n:
                pot[v] = c[p, v - n] - pot[p]
            else:
                pot[v] = c[v, p - n] - pot[p]
            stack[top] = v
            top += 1
            v = next_sib[v]

    cdef double cmax = 1.0, cv
    for k in range(<Py_ssize_t> arc_count):
        cv = c[k // m, k % m]
        if cv > cmax:
            cmax = cv
        elif -cv > cmax:
            cmax = -cv
    cdef double tol = 1e-12 * cmax

    cdef long long block = <long long> (np.sqrt(arc_count))
    if block < 64:
        block = 64
    cdef long long scan_from = 0, pivots = 0
    cdef bint bland = False
    cdef long long bland_after = 50 * nodes + 10_000

    # altering candidate list for pricing
    cdef long long cand_cap = 256, min_fill = 64
    cand_arr = np.empty(cand_cap + block, dtype=np.int64)
    cdef long long[::1] cand = cand_arr
    cdef long long cand_n = 0, keep_n

    cdef long long enter, pos, hi, kk, ei, ej, ci, cj
    cdef long long nx, ny, leave, sub_root, new_parent, plen, t
    cdef double best, rc, rc_val, theta
    cdef long long scanned
    cdef bint leave_on_x, same_sink
    cdef long long x, y
    cdef long long sxs, sys

    while pivots < max_iter:
        enter = -1
        if not bland:
            # re-price the surviving candidates first
            best = -tol
            keep_n = 0
            for kk in range(cand_n):
                ci = cand[kk] // m
                cj = cand[kk] % m
                rc = c[ci, cj] - pot[ci] - pot[n + cj]
                if rc < -tol:
                    cand[keep_n] = cand[kk]
                    keep_n += 1
                    if rc < best:
                        best = rc
                        enter = cand[kk]
            cand_n = keep_n
            if enter < 0:
                # refill by block scan until enough candidates or full wrap
                cand_n = 0
                scanned = 0
                pos = scan_from
                ci = pos // m
                cj = pos % m
                while scanned < arc_count:
                    hi = pos + block
                    if hi > arc_count:
                        hi = arc_count
                    for kk in range(pos, hi):
                        rc = c[ci, cj] - pot[ci] - pot[n + cj]
                        if rc < -tol:
                            cand[cand_n] = kk
                            cand_n += 1
                            if rc < best:
                                best = rc
                                enter = kk
                        cj += 1
                        if cj == m:
                            cj = 0
                            ci += 1
                    scanned += hi - pos
                    if hi < arc_count:
                        pos = hi
                    else:
                        pos = 0
                        ci = 0
                        cj = 0
                    if cand_n >= min_fill:
                        break
                scan_from = pos
                if cand_n > cand_cap:
                    cand_n = cand_cap
        else:
            ci = 0
            cj = 0
            for kk in range(arc_count):
                rc = c[ci, cj] - pot[ci] - pot[n + cj]
                if rc < -tol:
                    enter = kk
                    break
                cj += 1
                if cj == m:
                    cj = 0
                    ci += 1
        if enter < 0:
            break  # optimal

        ei = enter // m
        ej = n + enter % m
        rc_val = c[ei, ej - n] - pot[ei] - pot[ej]

        # cycle: walk both endpoints to the common ancestor
        nx = 0
        ny = 0
        x = ei
        y = ej
        sxs = -1
        sys = -1
        while depth[x] > depth[y]:
            px[nx] = x
            sgx[nx] = sxs
            nx += 1
            x = parent[x]
            sxs = -sxs
        while depth[y] > depth[x]:
            py[ny] = y
            sgy[ny] = sys
            ny += 1
            y = parent[y]
            sys = -sys
        while x != y:
            px[nx] = x
            sgx[nx] = sxs
            nx += 1
            x = parent[x]
            sxs = -sxs
            py[ny] = y
            sgy[ny] = sys
            ny += 1
            y = parent[y]
            sys = -sys

        theta = INFINITY
        leave = -1
        leave_on_x = False
        for k in range(ny):
            if sgy[k] < 0 and pflow[py[k]] < theta - 1e-30:
                theta = pflow[py[k]]
                leave = py[k]
                leave_on_x = False
        for k in range(nx):
            if sgx[k] < 0 and pflow[px[k]] < theta - 1e-30:
                theta = pflow[px[k]]
                leave = px[k]
                leave_on_x = True
        if leave < 0:
            raise RuntimeError("unbounded pivot in balanced problem")

        for k in range(nx):
            pflow[px[k]] += sgx[k] * theta
        for k in range(ny):
            pflow[py[k]] += sgy[k] * theta

        # basis exchange: re-root the cut subtree at the entering endpoint
        if leave_on_x:
            sub_root = ei
            new_parent = ej
        else:
            sub_root = ej
            new_parent = ei
        plen = 0
        v = sub_root
        pth[plen] = v
        plen += 1
        while v != leave:
            v = parent[v]
            pth[plen] = v
            plen += 1
        for k in range(plen):
            fl[k] = pflow[pth[k]]
        for t in range(plen - 1, 0, -1):
            v = pth[t]
            # detach v from its current parent
            p = parent[v]
            if prev_sib[v] >= 0:
                next_sib[prev_sib[v]] = next_sib[v]
            else:
                first_child[p] = next_sib[v]
            if next_sib[v] >= 0:
                prev_sib[next_sib[v]] = prev_sib[v]
            # attach v under pth[t-1]
            p = pth[t - 1]
            parent[v] = p
            next_sib[v] = first_child[p]
            prev_sib[v] = -1
            if first_child[p] >= 0:
                prev_sib[first_child[p]] = v
            first_child[p] = v
            pflow[v] = fl[t - 1]
        # move sub_root under new_parent
        v = sub_root
        p = parent[v]
        if prev_sib[v] >= 0:
            next_sib[prev_sib[v]] = next_sib[v]
        else:
            first_child[p] = next_sib[v]
        if next_sib[v] >= 0:
            prev_sib[next_sib[v]] = prev_sib[v]
        parent[v] = new_parent
        next_sib[v] = first_child[new_parent]
        prev_sib[v] = -1
        if first_child[new_parent] >= 0:
            prev_sib[first_child[new_parent]] = v
        first_child[new_parent] = v
        pflow[v] = theta

        # refresh potentials and depths inside the cut subtree
        same_sink = sub_root >= n
        depth[sub_root] = depth[new_parent] + 1
        pot[sub_root] += rc_val
        top = 0
        stack[top] = sub_root
        top += 1
        while top > 0:
            top -= 1
            p = stack[top]
            v = first_child[p]
            while v >= 0:
                if (v >= n) == same_sink:
                    pot[v] += rc_val
                else:
                    pot[v] -= rc_val
                depth[v] = depth[p] + 1
                stack[top] = v
                top += 1
                v = next_sib[v]

        pivots += 1
        if pivots == bland_after:
            bland = True
        if pivots % 4096 == 0:
            # periodic full refresh against numerical drift
            top = 0
            stack[top] = 0
            top += 1
            while top > 0:
                top -= 1
                p = stack[top]
                v = first_child[p]
                while v >= 0:
                    depth[v] = depth[p] + 1
                    if v >= n:
                        pot[v] = c[p, v - n] - pot[p]
                    else:
                        pot[v] = c[v, p - n] - pot[p]
                    stack[top] = v
                    top += 1
                    v = next_sib[v]

    if pivots >= max_iter:
        raise RuntimeError("network simplex exceeded its pivot budget")

    ii_arr = np.empty(nodes - 1, dtype=np.int64)
    jj_arr = np.empty(nodes - 1, dtype=np.int64)
    vv_arr = np.empty(nodes - 1, dtype=np.float64)
    cdef long long[::1] ii = ii_arr
    cdef long long[::1] jj = jj_arr
    cdef double[::1] vv = vv_arr
    k = 0
    for v in range(nodes):
        p = parent[v]
        if p < 0:
            continue
        if v >= n:
            ii[k] = p
            jj[k] = v - n
        else:
            ii[k] = v
            jj[k] = p - n
        vv[k] = pflow[v]
        k += 1
    return ii_arr[:k], jj_arr[:k], vv_arr[:k], pot_arr[:n].copy(), pot_arr[n:].copy(), pivots
