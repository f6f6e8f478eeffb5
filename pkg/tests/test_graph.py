import numpy as np
import pytest

from heteroflow.errors import (
    DimensionMismatch,
    Disconnected,
    DuplicateEdge,
    EdgeNotInGraph,
    GraphTooLarge,
    IndexOutOfRange,
    SelfLoop,
    ZeroFeatureNorm,
)
from heteroflow.graph import (
    Graph,
    build_graph,
    dirichlet_energy,
    edge_subset_dirichlet_energy,
    normalized_adjacency,
    normalized_laplacian,
    rayleigh_quotient,
)
from heteroflow.datagen import random_skeleton

from oracles import dirichlet_edge_sum, laplacian_dense

K4 = [(0, 1), (1, 2), (2, 3), (3, 0), (0, 2), (1, 3)]


def random_graph(seed, lo=4, hi=30):
    rng = np.random.default_rng(seed)
    return random_skeleton(int(rng.integers(lo, hi + 1)), rng), rng


class TestConstruction:
    def test_single_edge(self):
        g = build_graph(2, [(0, 1)])
        assert g.degrees.tolist() == [1, 1]

    def test_k4(self):
        g = build_graph(4, K4)
        assert g.degrees.tolist() == [3, 3, 3, 3]
        assert g.m == 6

    def test_canonical_order(self):
        g = build_graph(4, [(3, 2), (1, 0), (2, 0)])
        assert g.edges == ((0, 1), (0, 2), (2, 3))
        assert g.has_edge(3, 2) and g.has_edge(2, 3)

    @pytest.mark.parametrize(
        "n, edges, exc",
        [
            (3, [(0, 1)], Disconnected),
            (1, [], Disconnected),
            (2, [(0, 0), (0, 1)], SelfLoop),
            (2, [(0, 1), (1, 0)], DuplicateEdge),
            (2, [(0, 2)], IndexOutOfRange),
            (2, [(-1, 0)], IndexOutOfRange),
            (4, [(0, 1), (2, 3)], Disconnected),
        ],
    )
    def test_rejects(self, n, edges, exc):
        with pytest.raises(exc):
            build_graph(n, edges)

    def test_too_large(self):
        with pytest.raises(GraphTooLarge):
            Graph(201, [(i, i + 1) for i in range(200)])

    def test_relaxed_host_allows_isolated_nodes(self):
        g = Graph(4, [(0, 1), (1, 2), (0, 2)], connected=False)
        assert g.degrees.tolist() == [2, 2, 2, 0]

    def test_dict_round_trip(self):
        g, _ = random_graph(3)
        assert Graph.from_dict(g.to_dict()) == g

    def test_relabel_preserves_degree_multiset(self):
        g, rng = random_graph(4)
        perm = rng.permutation(g.n)
        h = g.relabel(perm)
        assert sorted(h.degrees) == sorted(g.degrees)
        assert all(h.has_edge(perm[i], perm[j]) for i, j in g.edges)


class TestOperators:
    def test_single_edge_laplacian(self):
        lap = normalized_laplacian(build_graph(2, [(0, 1)]))
        np.testing.assert_allclose(lap, [[1, -1], [-1, 1]], atol=1e-15)

    def test_triangle_laplacian(self):
        lap = normalized_laplacian(build_graph(3, [(0, 1), (1, 2), (0, 2)]))
        np.testing.assert_allclose(np.diag(lap), 1.0)
        off = lap[~np.eye(3, dtype=bool)]
        np.testing.assert_allclose(off, -0.5)

    def test_star_entry(self):
        lap = normalized_laplacian(build_graph(4, [(0, 1), (0, 2), (0, 3)]))
        assert lap[0, 1] == pytest.approx(-1 / np.sqrt(3), abs=1e-15)
        assert lap[1, 2] == 0.0

    @pytest.mark.parametrize("seed", range(10))
    def test_matches_dense_oracle(self, seed):
        g, _ = random_graph(seed)
        np.testing.assert_allclose(normalized_laplacian(g), laplacian_dense(g.n, g.edges), atol=1e-14)

    def test_self_loop_adjacency(self):
        g = build_graph(3, [(0, 1), (1, 2)])
        s = normalized_adjacency(g, self_loops=True)
        d = np.array([2.0, 3.0, 2.0])
        a = np.array([[1, 1, 0], [1, 1, 1], [0, 1, 1]], dtype=float)
        np.testing.assert_allclose(s, a / np.sqrt(np.outer(d, d)), atol=1e-15)


class TestDirichlet:
    def test_single_edge_value(self):
        # per-edge squared difference, counted once: (1 - (-1))^2 = 4
        g = build_graph(2, [(0, 1)])
        assert dirichlet_energy(g, [1.0, -1.0]) == pytest.approx(4.0, abs=1e-14)
        assert rayleigh_quotient(g, [1.0, -1.0]) == pytest.approx(2.0, abs=1e-14)

    @pytest.mark.parametrize("seed", range(10))
    def test_degree_scaled_constant_is_zero(self, seed):
        g, rng = random_graph(seed)
        v = rng.standard_normal(3)
        f = np.sqrt(g.degrees)[:, None] * v[None, :] * 2.5
        assert dirichlet_energy(g, f) < 1e-12 * np.sum(f * f)
        assert rayleigh_quotient(g, f) < 1e-12

    @pytest.mark.parametrize("seed", range(20))
    def test_trace_and_loop_oracles(self, seed):
        g, rng = random_graph(seed)
        f = rng.standard_normal((g.n, 3))
        e = dirichlet_energy(g, f)
        tr = np.trace(f.T @ laplacian_dense(g.n, g.edges) @ f)
        assert e == pytest.approx(tr, rel=1e-10)
        assert e == pytest.approx(dirichlet_edge_sum(g.n, g.edges, f), rel=1e-12)

    def test_top_eigenvector_gives_lambda_max(self):
        g, _ = random_graph(11)
        sp = g.spectrum
        assert rayleigh_quotient(g, sp.eigenvectors[:, -1]) == pytest.approx(sp.lambda_max, abs=1e-10)

    @pytest.mark.parametrize("seed", range(10))
    def test_rayleigh_bounds(self, seed):
        g, rng = random_graph(seed)
        r = rayleigh_quotient(g, rng.standard_normal((g.n, 2)))
        assert 0.0 <= r <= g.spectrum.lambda_max + 1e-12 <= 2.0 + 1e-12

    @pytest.mark.parametrize("seed", range(10))
    def test_relabel_invariance(self, seed):
        g, rng = random_graph(seed)
        f = rng.standard_normal((g.n, 2))
        perm = rng.permutation(g.n)
        fp = np.empty_like(f)
        fp[perm] = f
        assert dirichlet_energy(g.relabel(perm), fp) == pytest.approx(dirichlet_energy(g, f), rel=1e-12)

    @pytest.mark.parametrize("seed", range(10))
    def test_subset_additivity(self, seed):
        g, rng = random_graph(seed)
        f = rng.standard_normal((g.n, 2))
        mask = rng.random(g.m) < 0.5
        s = [e for e, k in zip(g.edges, mask) if k]
        rest = [e for e, k in zip(g.edges, mask) if not k]
        total = edge_subset_dirichlet_energy(g, f, s) + edge_subset_dirichlet_energy(g, f, rest)
        assert total == pytest.approx(dirichlet_energy(g, f), rel=1e-12)
        assert edge_subset_dirichlet_energy(g, f, g.edges) == pytest.approx(dirichlet_energy(g, f), rel=1e-14)

    def test_subset_empty_and_orientation(self):
        g = build_graph(3, [(0, 1), (1, 2)])
        f = np.array([1.0, 2.0, 5.0])
        assert edge_subset_dirichlet_energy(g, f, []) == 0.0
        assert edge_subset_dirichlet_energy(g, f, [(2, 1)]) == edge_subset_dirichlet_energy(g, f, [(1, 2)])

    def test_errors(self):
        g = build_graph(3, [(0, 1), (1, 2)])
        with pytest.raises(EdgeNotInGraph):
            edge_subset_dirichlet_energy(g, np.ones(3), [(0, 2)])
        with pytest.raises(DimensionMismatch):
            dirichlet_energy(g, np.ones(4))
        with pytest.raises(ZeroFeatureNorm):
            rayleigh_quotient(g, np.zeros(3))
