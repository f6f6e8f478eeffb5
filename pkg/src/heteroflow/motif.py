"""Exact (non-induced) subgraph matching and node-level motif labels."""

from functools import lru_cache

import numpy as np

from ._core import kernels
from .errors import ValidationError
from .graph import Graph

MAX_MOTIF_NODES = 8


class Motif:
    """A connected pattern graph with 2 to 8 nodes."""

    def __init__(self, pattern, name=None):
        if not isinstance(pattern, Graph):
            raise ValidationError("motif pattern must be a Graph")
        if not pattern.connected:
            raise ValidationError("motif pattern must be connected")
        if not 2 <= pattern.n <= MAX_MOTIF_NODES:
            raise ValidationError(f"motif size {pattern.n} outside [2, {MAX_MOTIF_NODES}]")
        self.pattern = pattern
        self.name = name

    @property
    def n(self):
        return self.pattern.n

    def __repr__(self):
        label = f" {self.name!r}" if self.name else ""
        return f"Motif({label.strip() or self.pattern!r})"

    @classmethod
    def from_edges(cls, n, edges, name=None):
        return cls(Graph(n, edges), name=name)


def triangle():
    return Motif.from_edges(3, [(0, 1), (1, 2), (0, 2)], name="triangle")


def path_motif(k):
    return Motif.from_edges(k, [(i, i + 1) for i in range(k - 1)], name=f"path{k}")


@lru_cache(maxsize=512)
def _host_arrays(g):
    n = g.n
    deg = np.asarray(g.degrees, dtype=np.int32)
    adj = np.ascontiguousarray(g.adjacency, dtype=np.uint8)
    rank = sorted(range(n), key=lambda v: (-deg[v], v))
    position = {v: r for r, v in enumerate(rank)}
    width = max(1, int(deg.max()) if n else 1)
    nbrs = np.zeros((n, width), dtype=np.int32)
    nbr_len = np.zeros(n, dtype=np.int32)
    for v in range(n):
        ordered = sorted(g.neighbors[v], key=position.__getitem__)
        nbrs[v, : len(ordered)] = ordered
        nbr_len[v] = len(ordered)
    return adj, nbrs, nbr_len, np.array(rank, dtype=np.int32), deg


@lru_cache(maxsize=512)
def _pattern_plan(p, start):
    """Static expansion order: next node is the one with most already-placed
    neighbours (ties: higher degree, then lower index)."""
    deg = p.degrees
    if start is None:
        start = min(range(p.n), key=lambda v: (-deg[v], v))
    order = [start]
    placed = {start}
    while len(order) < p.n:
        best = min(
            (v for v in range(p.n) if v not in placed),
            key=lambda v: (-sum(u in placed for u in p.neighbors[v]), -deg[v], v),
        )
        order.append(best)
        placed.add(best)
    pos = {v: r for r, v in enumerate(order)}
    k = p.n
    parent = np.full(k, -1, dtype=np.int32)
    back = np.zeros((k, k), dtype=np.int32)
    back_len = np.zeros(k, dtype=np.int32)
    for r, v in enumerate(order):
        earlier = sorted(pos[u] for u in p.neighbors[v] if pos[u] < r)
        back[r, : len(earlier)] = earlier
        back_len[r] = len(earlier)
        if earlier:
            parent[r] = earlier[0]
    pat_deg = np.array([deg[v] for v in order], dtype=np.int32)
    return np.array(order, dtype=np.int32), parent, back, back_len, pat_deg


def _search(g, m, limit, start=None, root_host=-1):
    if m.n > g.n:
        return []
    adj, nbrs, nbr_len, rank, deg = _host_arrays(g)
    order, parent, back, back_len, pat_deg = _pattern_plan(m.pattern, start)
    rows = kernels.match_subgraph(
        adj, nbrs, nbr_len, rank, deg, parent, back, back_len, pat_deg,
        -1 if limit is None else int(limit), int(root_host),
    )
    result = []
    for row in rows:
        psi = [0] * m.n
        for r, v in enumerate(order):
            psi[v] = int(row[r])
        result.append(tuple(psi))
    return result


def find_embeddings(g, m, limit=None):
    """All injective edge-preserving maps from motif nodes into ``g``.

    Each result is a tuple ``psi`` with ``psi[u]`` the host node of motif node
    ``u``. Automorphic images of the same node set are all returned.
    """
    if limit is not None and limit <= 0:
        return []
    return _search(g, m, limit)


def node_level_labels(g, m):
    """Binary vector marking nodes that lie in at least one copy of ``m``."""
    y = np.zeros(g.n, dtype=np.int8)
    if m.n > g.n:
        return y
    for v in range(g.n):
        if y[v]:
            continue
        # try every pattern node as the preimage of v; one hit covers its image
        for u in range(m.n):
            hit = _search(g, m, 1, start=u, root_host=v)
            if hit:
                y[list(hit[0])] = 1
                break
    return y


def graph_contains_motif(g, m):
    """1 if ``g`` contains a (non-induced) copy of ``m``, by early-exit search."""
    return int(bool(_search(g, m, 1)))


def graph_contains_motif_via_nodes(g, m):
    """Same verdict computed as ``|y|_0 > 0`` from the node-level labels."""
    return int(np.count_nonzero(node_level_labels(g, m)) > 0)


def boundary_and_intra_edges(g, motif_nodes):
    """Split edges touching ``motif_nodes`` into (boundary, intra) edge lists."""
    inside = set(int(v) for v in motif_nodes)
    if any(not 0 <= v < g.n for v in inside):
        raise ValidationError("motif node index outside the graph")
    boundary, intra = [], []
    for i, j in g.edges:
        hits = (i in inside) + (j in inside)
        if hits == 2:
            intra.append((i, j))
        elif hits == 1:
            boundary.append((i, j))
    return boundary, intra
