# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True
"""Compiled hot loops: cyclic Jacobi sweeps, subgraph backtracking, RBF sums."""

import numpy as np
cimport numpy as cnp
from libc.math cimport sqrt, fabs, exp

cnp.import_array()


def jacobi_eigh(double[:, ::1] a_in, double tol, long max_sweeps):
    """Cyclic-by-row Jacobi on a copy of ``a_in``.

    Returns (diagonal, eigenvectors, sweeps_used, converged).
    """
    cdef Py_ssize_t n = a_in.shape[0]
    cdef cnp.ndarray[cnp.float64_t, ndim=2] a_arr = np.array(a_in, dtype=np.float64, copy=True)
    cdef cnp.ndarray[cnp.float64_t, ndim=2] v_arr = np.eye(n, dtype=np.float64)
    cdef double[:, ::1] a = a_arr
    cdef double[:, ::1] v = v_arr
    cdef Py_ssize_t p, q, k
    cdef double apq, theta, t, c, s, akp, akq, off, scale
    cdef long sweep = 0
    cdef bint converged = False

    scale = 0.0
    for p in range(n):
        for q in range(n):
            scale += a[p, q] * a[p, q]
    scale = sqrt(scale)
    if scale == 0.0:
        scale = 1.0

    while sweep <= max_sweeps:
        off = 0.0
        for p in range(n):
            for q in range(p + 1, n):
                if fabs(a[p, q]) > off:
                    off = fabs(a[p, q])
        if off <= tol * scale:
            converged = True
            break
        if sweep == max_sweeps:
            break
        sweep += 1
        for p in range(n - 1):
            for q in range(p + 1, n):
                apq = a[p, q]
                if apq == 0.0:
                    continue
                theta = (a[q, q] - a[p, p]) / (2.0 * apq)
                if theta >= 0.0:
                    t = 1.0 / (theta + sqrt(theta * theta + 1.0))
                else:
                    t = -1.0 / (-theta + sqrt(theta * theta + 1.0))
                c = 1.0 / sqrt(t * t + 1.0)
                s = t * c
                for k in range(n):
                    akp = a[k, p]
                    akq = a[k, q]
                    a[k, p] = c * akp - s * akq
                    a[k, q] = s * akp + c * akq
                for k in range(n):
                    akp = a[p, k]
                    akq = a[q, k]
                    a[p, k] = c * akp - s * akq
                    a[q, k] = s * akp + c * akq
                a[p, q] = 0.0
                a[q, p] = 0.0
                for k in range(n):
                    akp = v[k, p]
                    akq = v[k, q]
                    v[k, p] = c * akp - s * akq
                    v[k, q] = s * akp + c * akq

    return np.diag(a_arr).copy(), v_arr, sweep, converged


def match_subgraph(
    const cnp.uint8_t[:, ::1] host_adj,
    const int[:, ::1] host_nbrs,
    const int[::1] host_nbr_len,
    const int[::1] host_all,
    const int[::1] host_deg,
    const int[::1] pat_parent,
    const int[:, ::1] pat_back,
    const int[::1] pat_back_len,
    const int[::1] pat_deg,
    long limit,
    int root_host,
):
    """Backtracking search over a fixed pattern order.

    Row ``r`` of the result holds the host node assigned to pattern
    position ``r``. ``limit < 0`` means unbounded; ``root_host >= 0`` pins
    position 0.
    """
    cdef Py_ssize_t n = host_adj.shape[0]
    cdef Py_ssize_t k = pat_parent.shape[0]
    cdef cnp.ndarray[cnp.int32_t, ndim=1] mapping_arr = np.full(k, -1, dtype=np.int32)
    cdef cnp.ndarray[cnp.int32_t, ndim=1] ptr_arr = np.zeros(k, dtype=np.int32)
    cdef cnp.ndarray[cnp.uint8_t, ndim=1] used_arr = np.zeros(n, dtype=np.uint8)
    cdef int[::1] mapping = mapping_arr
    cdef int[::1] ptr = ptr_arr
    cdef cnp.uint8_t[::1] used = used_arr
    cdef Py_ssize_t depth = 0
    cdef int v, ncand, b, par
    cdef bint found, ok
    cdef list out = []

    if k == 0 or k > n:
        return np.zeros((0, k), dtype=np.int32)

    while depth >= 0:
        if depth == k:
            out.append(mapping_arr.copy())
            if limit >= 0 and len(out) >= limit:
                break
            depth -= 1
            used[mapping[depth]] = 0
            continue
        found = False
        while True:
            if depth == 0 and root_host >= 0:
                if ptr[0] >= 1:
                    break
                v = root_host
            else:
                par = pat_parent[depth]
                if par >= 0:
                    ncand = host_nbr_len[mapping[par]]
                    if ptr[depth] >= ncand:
                        break
                    v = host_nbrs[mapping[par], ptr[depth]]
                else:
                    if ptr[depth] >= n:
                        break
                    v = host_all[ptr[depth]]
            ptr[depth] += 1
            if used[v] or host_deg[v] < pat_deg[depth]:
                continue
            ok = True
            for b in range(pat_back_len[depth]):
                if not host_adj[v, mapping[pat_back[depth, b]]]:
                    ok = False
                    break
            if ok:
                found = True
                break
        if found:
            mapping[depth] = v
            used[v] = 1
            depth += 1
            if depth < k:
                ptr[depth] = 0
        else:
            depth -= 1
            if depth >= 0:
                used[mapping[depth]] = 0

    if not out:
        return np.zeros((0, k), dtype=np.int32)
    return np.vstack(out)


def rbf_sum(double[:, ::1] x, double[:, ::1] y, double gamma):
    """Sum of exp(-gamma * |x_i - y_j|^2) over all (i, j), row-major order."""
    cdef Py_ssize_t p = x.shape[0], q = y.shape[0], d = x.shape[1]
    cdef Py_ssize_t i, j, c
    cdef double total = 0.0, dist, diff
    for i in range(p):
        for j in range(q):
            dist = 0.0
            for c in range(d):
                diff = x[i, c] - y[j, c]
                dist += diff * diff
            total += exp(-gamma * dist)
    return total
