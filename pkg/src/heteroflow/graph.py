"""Graphs, normalized operators, the symmetric eigensolver and Dirichlet energies."""

from dataclasses import dataclass
from functools import cached_property

import numpy as np

from ._core import kernels
from .errors import (
    DimensionMismatch,
    Disconnected,
    DuplicateEdge,
    EdgeNotInGraph,
    GraphTooLarge,
    IndexOutOfRange,
    NoConvergence,
    NotSymmetric,
    SelfLoop,
    ValidationError,
    ZeroFeatureNorm,
)

MAX_NODES = 200


class Graph:
    """Undirected simple graph with dense cached operators.

    Edges are stored once as ``(i, j)`` with ``i < j`` and kept sorted, which is
    also the canonical serialization order. Instances are immutable.

    ``connected=False`` is a relaxed construction path for motif-search hosts
    only; such graphs may contain isolated nodes and have no normalized
    operators.
    """

    def __init__(self, n, edges, *, connected=True):
        n = int(n)
        if n < 1:
            raise ValidationError("graph needs at least one node")
        if n > MAX_NODES:
            raise GraphTooLarge(f"n={n} exceeds the dense limit of {MAX_NODES}")
        seen = set()
        for e in edges:
            i, j = (int(x) for x in e)
            if not (0 <= i < n and 0 <= j < n):
                raise IndexOutOfRange(f"edge ({i}, {j}) outside [0, {n})")
            if i == j:
                raise SelfLoop(f"self-loop at node {i}")
            key = (i, j) if i < j else (j, i)
            if key in seen:
                raise DuplicateEdge(f"edge {key} appears twice")
            seen.add(key)
        self.n = n
        self.edges = tuple(sorted(seen))
        self.connected = connected
        if connected:
            if n == 1 or _components(n, self.edges) != 1:
                raise Disconnected(f"graph on {n} nodes is not connected")

    def __repr__(self):
        return f"Graph(n={self.n}, m={len(self.edges)})"

    def __eq__(self, other):
        return isinstance(other, Graph) and self.n == other.n and self.edges == other.edges

    def __hash__(self):
        return hash((self.n, self.edges))

    @property
    def m(self):
        return len(self.edges)

    @cached_property
    def edge_array(self):
        arr = np.array(self.edges, dtype=np.intp).reshape(-1, 2)
        arr.flags.writeable = False
        return arr

    @cached_property
    def edge_set(self):
        return frozenset(self.edges)

    @cached_property
    def adjacency(self):
        a = np.zeros((self.n, self.n))
        if self.edges:
            i, j = self.edge_array.T
            a[i, j] = 1.0
            a[j, i] = 1.0
        a.flags.writeable = False
        return a

    @cached_property
    def degrees(self):
        d = self.adjacency.sum(axis=1).astype(np.int64)
        d.flags.writeable = False
        return d

    @cached_property
    def neighbors(self):
        nbrs = [[] for _ in range(self.n)]
        for i, j in self.edges:
            nbrs[i].append(j)
            nbrs[j].append(i)
        return tuple(tuple(x) for x in nbrs)

    @cached_property
    def spectrum(self):
        """Eigendecomposition of the normalized Laplacian (cached)."""
        return symmetric_eigendecomposition(normalized_laplacian(self), operator_tag="laplacian")

    def has_edge(self, i, j):
        return (i, j) in self.edge_set or (j, i) in self.edge_set

    def relabel(self, perm):
        """Return the graph with node ``v`` renamed to ``perm[v]``."""
        perm = np.asarray(perm)
        return Graph(self.n, [(perm[i], perm[j]) for i, j in self.edges], connected=self.connected)

    def to_dict(self):
        return {"n": self.n, "edges": [list(e) for e in self.edges]}

    @classmethod
    def from_dict(cls, obj, *, connected=True):
        try:
            return cls(obj["n"], [tuple(e) for e in obj["edges"]], connected=connected)
        except (KeyError, TypeError) as exc:
            raise ValidationError(f"malformed graph object: {exc}") from exc


def _components(n, edges):
    parent = list(range(n))

    def find(x):
        while parent[x] != x:
            parent[x] = parent[parent[x]]
            x = parent[x]
        return x

    count = n
    for i, j in edges:
        ri, rj = find(i), find(j)
        if ri != rj:
            parent[ri] = rj
            count -= 1
    return count


def build_graph(n, edges):
    """Validate and build a connected simple graph."""
    return Graph(n, edges)


def as_features(f, n=None):
    """Coerce ``f`` to an ``n x d`` float matrix (a 1-D vector becomes one column)."""
    arr = np.asarray(f, dtype=np.float64)
    if arr.ndim == 1:
        arr = arr[:, None]
    if arr.ndim != 2 or arr.shape[1] < 1:
        raise DimensionMismatch(f"feature matrix must be n x d with d >= 1, got shape {arr.shape}")
    if n is not None and arr.shape[0] != n:
        raise DimensionMismatch(f"feature matrix has {arr.shape[0]} rows, graph has {n} nodes")
    if not np.all(np.isfinite(arr)):
        raise ValidationError("feature matrix contains non-finite entries")
    return arr


def _require_normalizable(g):
    if not g.connected and np.any(g.degrees == 0):
        raise ValidationError("normalized operators need every degree >= 1")


def normalized_adjacency(g, self_loops=False):
    """D^-1/2 A D^-1/2, or the self-loop-augmented variant with A + I."""
    _require_normalizable(g)
    a = np.array(g.adjacency)
    if self_loops:
        a += np.eye(g.n)
    inv_sqrt = 1.0 / np.sqrt(a.sum(axis=1))
    return inv_sqrt[:, None] * a * inv_sqrt[None, :]


def normalized_laplacian(g):
    """I - D^-1/2 A D^-1/2."""
    return np.eye(g.n) - normalized_adjacency(g)


@dataclass(frozen=True)
class SpectralDecomposition:
    eigenvalues: np.ndarray
    eigenvectors: np.ndarray
    operator_tag: str = "matrix"
    sweeps: int = 0

    @property
    def lambda_max(self):
        return float(self.eigenvalues[-1])

    def reconstruct(self):
        return (self.eigenvectors * self.eigenvalues) @ self.eigenvectors.T


def symmetric_eigendecomposition(m, operator_tag="matrix", tol=1e-12, max_sweeps=None):
    """Jacobi eigendecomposition of a real symmetric matrix, eigenvalues ascending.

    Ties in the eigenvalue order are broken by original column index so the
    result is deterministic for a fixed input.
    """
    m = np.ascontiguousarray(m, dtype=np.float64)
    if m.ndim != 2 or m.shape[0] != m.shape[1]:
        raise DimensionMismatch(f"expected a square matrix, got shape {m.shape}")
    n = m.shape[0]
    if n and np.abs(m - m.T).max() > 1e-12:
        raise NotSymmetric(f"asymmetry {np.abs(m - m.T).max():.3e} exceeds 1e-12")
    m = 0.5 * (m + m.T)
    if max_sweeps is None:
        max_sweeps = 100 * n * n
    w, v, sweeps, converged = kernels.jacobi_eigh(m, tol, max_sweeps)
    if not converged:
        raise NoConvergence(f"Jacobi did not converge within {max_sweeps} sweeps")
    order = np.argsort(w, kind="stable")
    return SpectralDecomposition(
        eigenvalues=w[order],
        eigenvectors=np.ascontiguousarray(v[:, order]),
        operator_tag=operator_tag,
        sweeps=int(sweeps),
    )


def _edge_terms(g, f, edges):
    if len(edges) == 0:
        return np.zeros(0)
    edges = np.asarray(edges, dtype=np.intp).reshape(-1, 2)
    scaled = f / np.sqrt(g.degrees)[:, None]
    diff = scaled[edges[:, 0]] - scaled[edges[:, 1]]
    return np.einsum("ij,ij->i", diff, diff)


def dirichlet_energy(g, f):
    """Sum over edges of |f_i/sqrt(d_i) - f_j/sqrt(d_j)|^2, i.e. trace(F^T Delta F).

    Each undirected edge is counted once (equivalently, half the sum over
    ordered pairs).
    """
    f = as_features(f, g.n)
    return float(_edge_terms(g, f, g.edge_array).sum())


def rayleigh_quotient(g, f):
    """Dirichlet energy divided by the squared Frobenius norm of ``f``."""
    f = as_features(f, g.n)
    norm2 = float(np.sum(f * f))
    if norm2 == 0.0:
        raise ZeroFeatureNorm("Rayleigh quotient of a zero feature matrix")
    return dirichlet_energy(g, f) / norm2


def edge_subset_dirichlet_energy(g, f, subset):
    """Dirichlet energy restricted to ``subset`` (each pair in either orientation)."""
    f = as_features(f, g.n)
    canon = []
    for e in subset:
        i, j = (int(x) for x in e)
        key = (i, j) if i < j else (j, i)
        if key not in g.edge_set:
            raise EdgeNotInGraph(f"edge {key} is not in the graph")
        canon.append(key)
    return float(_edge_terms(g, f, canon).sum())
