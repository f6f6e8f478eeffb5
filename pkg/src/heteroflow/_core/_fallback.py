"""Pure-Python/numpy versions of the compiled kernels.

Signatures and return conventions mirror ``_kernels.pyx`` exactly so the
backend can be swapped at import time.
"""

import numpy as np


def _round_robin(m):
    """Yield rounds of disjoint index pairs covering every pair once (m even)."""
    players = list(range(m))
    for _ in range(m - 1):
        yield [(players[i], players[m - 1 - i]) for i in range(m // 2)]
        players = [players[0], players[-1]] + players[1:-1]


def jacobi_eigh(a_in, tol, max_sweeps):
    # Parallel-ordered Jacobi: each round rotates n/2 disjoint planes at once,
    # which commute, so the whole round is a handful of vectorized updates.
    a = np.array(a_in, dtype=np.float64, copy=True)
    n = a.shape[0]
    v = np.eye(n)
    scale = np.linalg.norm(a) or 1.0
    m = n + (n % 2)
    rounds = []
    for pairs in _round_robin(m):
        pq = np.array([(min(p, q), max(p, q)) for p, q in pairs if p < n and q < n], dtype=np.intp)
        if len(pq):
            rounds.append((pq[:, 0], pq[:, 1]))
    iu = np.triu_indices(n, 1)

    sweep = 0
    converged = False
    while sweep <= max_sweeps:
        off = np.abs(a[iu]).max() if n > 1 else 0.0
        if off <= tol * scale:
            converged = True
            break
        if sweep == max_sweeps:
            break
        sweep += 1
        for p, q in rounds:
            apq = a[p, q]
            live = apq != 0.0
            if not live.any():
                continue
            p, q, apq = p[live], q[live], apq[live]
            theta = (a[q, q] - a[p, p]) / (2.0 * apq)
            root = np.sqrt(theta * theta + 1.0)
            t = np.sign(theta) / (np.abs(theta) + root)
            t[theta == 0.0] = 1.0
            c = 1.0 / np.sqrt(t * t + 1.0)
            s = t * c
            ap, aq = a[:, p].copy(), a[:, q].copy()
            a[:, p] = c * ap - s * aq
            a[:, q] = s * ap + c * aq
            ap, aq = a[p, :].copy(), a[q, :].copy()
            a[p, :] = c[:, None] * ap - s[:, None] * aq
            a[q, :] = s[:, None] * ap + c[:, None] * aq
            a[p, q] = 0.0
            a[q, p] = 0.0
            vp, vq = v[:, p].copy(), v[:, q].copy()
            v[:, p] = c * vp - s * vq
            v[:, q] = s * vp + c * vq
    return np.diag(a).copy(), v, sweep, converged


def match_subgraph(host_adj, host_nbrs, host_nbr_len, host_all, host_deg,
                   pat_parent, pat_back, pat_back_len, pat_deg, limit, root_host):
    n = host_adj.shape[0]
    k = len(pat_parent)
    if k == 0 or k > n:
        return np.zeros((0, k), dtype=np.int32)
    adj = host_adj.astype(bool)
    nbrs = [list(host_nbrs[i, : host_nbr_len[i]]) for i in range(n)]
    every = list(host_all)
    back = [list(pat_back[r, : pat_back_len[r]]) for r in range(k)]
    mapping = [-1] * k
    used = [False] * n
    out = []

    def candidates(depth):
        if depth == 0 and root_host >= 0:
            return (root_host,)
        par = pat_parent[depth]
        return nbrs[mapping[par]] if par >= 0 else every

    def extend(depth):
        if depth == k:
            out.append(list(mapping))
            return limit >= 0 and len(out) >= limit
        for v in candidates(depth):
            if used[v] or host_deg[v] < pat_deg[depth]:
                continue
            if all(adj[v, mapping[b]] for b in back[depth]):
                mapping[depth] = v
                used[v] = True
                stop = extend(depth + 1)
                used[v] = False
                if stop:
                    return True
        return False

    extend(0)
    if not out:
        return np.zeros((0, k), dtype=np.int32)
    return np.asarray(out, dtype=np.int32)


def rbf_sum(x, y, gamma):
    total = 0.0
    for xi in x:
        sq = ((y - xi) ** 2).sum(axis=1)
        for value in np.exp(-gamma * sq):
            total += value
    return float(total)
