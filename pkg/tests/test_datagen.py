from collections import Counter

import numpy as np
import pytest
from scipy import stats
from scipy.special import gammaln

from heteroflow import datagen as dg
from heteroflow import io
from heteroflow.errors import EmptySplit, InvalidConfig, TargetOutOfRange, ValidationError
from heteroflow.graph import Graph

from oracles import modularity_bruteforce_best

TWO_TRIANGLES = Graph(6, [(0, 1), (1, 2), (0, 2), (3, 4), (4, 5), (3, 5), (2, 3)])


class TestTrees:
    def test_two_nodes(self):
        assert dg.random_tree(2, np.random.default_rng(0)).edges == ((0, 1),)

    @pytest.mark.parametrize("n", [3, 7, 20, 50])
    def test_tree_shape(self, n):
        rng = np.random.default_rng(n)
        for _ in range(20):
            t = dg.random_tree(n, rng)
            assert t.m == n - 1 and t.connected

    def test_uniform_on_three_nodes(self):
        rng = np.random.default_rng(0)
        counts = Counter(dg.random_tree(3, rng).edges for _ in range(30000))
        assert len(counts) == 3
        for c in counts.values():
            assert abs(c / 30000 - 1 / 3) < 0.01

    def test_uniform_on_four_nodes_chi_square(self):
        # Cayley: 4^2 = 16 labelled trees
        rng = np.random.default_rng(1)
        counts = Counter(dg.random_tree(4, rng).edges for _ in range(16000))
        assert len(counts) == 16
        assert stats.chisquare(list(counts.values())).pvalue > 0.001


class TestDensify:
    def test_target_equal_tree(self):
        t = dg.random_tree(6, np.random.default_rng(0))
        assert dg.densify(t, 5, np.random.default_rng(1)) is t

    def test_adds_exactly_one(self):
        t = dg.random_tree(5, np.random.default_rng(0))
        g = dg.densify(t, 5, np.random.default_rng(1))
        assert g.m == 5 and set(t.edges) <= set(g.edges)

    @pytest.mark.parametrize("n", [4, 9, 20, 50])
    def test_maximum_density(self, n):
        rng = np.random.default_rng(n)
        t = dg.random_tree(n, rng)
        g = dg.densify(t, n * (n - 1) // 4, rng)
        assert g.m == n * (n - 1) // 4 and set(t.edges) <= set(g.edges)

    def test_out_of_range(self):
        t = dg.random_tree(6, np.random.default_rng(0))
        with pytest.raises(TargetOutOfRange):
            dg.densify(t, 4, np.random.default_rng(0))
        with pytest.raises(TargetOutOfRange):
            dg.densify(t, 8, np.random.default_rng(0))

    def test_added_edges_uniform(self):
        # the 5-node path has 6 non-edges, each equally likely to be added
        path = Graph(5, [(0, 1), (1, 2), (2, 3), (3, 4)])
        rng = np.random.default_rng(0)
        counts = Counter(set(dg.densify(path, 5, rng).edges).difference(path.edges).pop() for _ in range(6000))
        assert len(counts) == 6
        assert stats.chisquare(list(counts.values())).pvalue > 0.001

    def test_edge_mode(self):
        rng = np.random.default_rng(0)
        assert dg.sample_target_edges(10, rng, "half") == 22
        vals = {dg.sample_target_edges(10, rng) for _ in range(500)}
        assert min(vals) == 9 and max(vals) == 22
        with pytest.raises(InvalidConfig):
            dg.sample_target_edges(10, rng, "dense")
        with pytest.raises(TargetOutOfRange):
            dg.sample_target_edges(3, rng)


class TestCommunities:
    def test_two_triangles(self):
        labels = dg.assign_labels_homophilic(TWO_TRIANGLES)
        assert labels.tolist() == [0, 0, 0, 1, 1, 1]
        best = modularity_bruteforce_best(6, TWO_TRIANGLES.edges)
        assert dg.modularity(TWO_TRIANGLES, labels) == pytest.approx(best, abs=1e-12)

    def test_k4_single_community(self):
        k4 = Graph(4, [(0, 1), (0, 2), (0, 3), (1, 2), (1, 3), (2, 3)])
        assert dg.assign_labels_homophilic(k4).tolist() == [0, 0, 0, 0]
        assert modularity_bruteforce_best(4, k4.edges) == pytest.approx(0.0, abs=1e-12)

    @pytest.mark.parametrize("seed", range(15))
    def test_greedy_never_beats_optimum(self, seed):
        rng = np.random.default_rng(seed)
        g = dg.random_skeleton(int(rng.integers(4, 9)), rng)
        labels = dg.assign_labels_homophilic(g)
        q = dg.modularity(g, labels)
        best = modularity_bruteforce_best(g.n, g.edges)
        assert q <= best + 1e-12
        assert q >= -1e-12

    def test_modularity_against_networkx(self):
        nx = pytest.importorskip("networkx")
        from networkx.algorithms.community import modularity

        rng = np.random.default_rng(3)
        for _ in range(10):
            g = dg.random_skeleton(30, rng)
            labels = dg.assign_labels_homophilic(g)
            h = nx.Graph(list(g.edges))
            comms = [set(np.flatnonzero(labels == c).tolist()) for c in np.unique(labels)]
            assert dg.modularity(g, labels) == pytest.approx(modularity(h, comms), abs=1e-12)

    def test_deterministic(self):
        g = dg.random_skeleton(40, np.random.default_rng(5))
        assert np.array_equal(dg.assign_labels_homophilic(g), dg.assign_labels_homophilic(g))


class TestHeterophilic:
    def test_balanced(self):
        g = Graph(2, [(0, 1)])
        rng = np.random.default_rng(0)
        labels = np.concatenate([dg.assign_labels_heterophilic(g, 2, rng) for _ in range(5000)])
        assert abs(np.mean(labels == 0) - 0.5) < 0.02

    def test_deterministic(self):
        g = dg.random_skeleton(30, np.random.default_rng(1))
        a = dg.assign_labels_heterophilic(g, 3, np.random.default_rng(7))
        b = dg.assign_labels_heterophilic(g, 3, np.random.default_rng(7))
        assert np.array_equal(a, b)

    def test_needs_two_classes(self):
        with pytest.raises(ValidationError):
            dg.assign_labels_heterophilic(Graph(2, [(0, 1)]), 1, np.random.default_rng(0))


class TestFeatures:
    def test_no_noise_same_rows(self):
        f = dg.features_from_labels(np.array([1, 1, 0]), 4, 0.0, 3, np.random.default_rng(0))
        np.testing.assert_array_equal(f[0], f[1])
        assert not np.array_equal(f[0], f[2])

    def test_noise_scale(self):
        d, sigma = 8, 0.05
        f = dg.features_from_labels(np.zeros(20000, dtype=int), d, sigma, 3, np.random.default_rng(0))
        diff = np.linalg.norm(f[0::2] - f[1::2], axis=1)
        # |e1 - e2| = sigma * sqrt(2) * chi_d
        chi_mean = np.sqrt(2) * np.exp(gammaln((d + 1) / 2) - gammaln(d / 2))
        assert np.mean(diff) == pytest.approx(sigma * np.sqrt(2) * chi_mean, rel=0.01)
        assert np.mean(diff**2) == pytest.approx(2 * d * sigma**2, rel=0.02)

    def test_embedding_seed(self):
        a = dg.class_embedding([0, 1], 4, 1)
        b = dg.class_embedding([0, 1], 4, 2)
        assert not np.allclose(a, b)
        np.testing.assert_array_equal(dg.class_embedding([0, 1], 4, 1), a)

    def test_class_vector_independent_of_other_classes(self):
        a = dg.class_embedding([0, 5], 4, 1)
        b = dg.class_embedding([5], 4, 1)
        np.testing.assert_array_equal(a[1], b[0])


def small_cfg(**kw):
    base = dict(seed=3, quadrant="hom-het", backbone_count=10, motif_variants=5)
    base.update(kw)
    return dg.GenConfig(**base)


@pytest.fixture(scope="module")
def records():
    return dg.generate_dataset(small_cfg())


class TestDataset:
    def test_counts(self, records):
        labels = [r.graph_label for r in records]
        assert labels.count(1) == 50 and labels.count(0) == 50

    def test_sizes(self, records):
        for r in records:
            lo, hi = (25, 57) if r.graph_label else (20, 50)
            assert lo <= r.n <= hi

    def test_record_invariants(self, records):
        for r in records:
            assert bool(r.graph_label) == bool(r.motif_nodes)
            assert r.features.shape == (r.n, 8)
            if r.graph_label:
                assert len(r.boundary_edges) == 1
                (i, j), = r.boundary_edges
                assert (i in r.motif_nodes) != (j in r.motif_nodes)

    def test_removing_motif_restores_backbone(self, records):
        by_backbone = {}
        for r in records:
            if not r.graph_label:
                by_backbone[r.provenance["backbone_id"]] = r.graph
        for r in records:
            if r.graph_label:
                motif = set(r.motif_nodes)
                rest = [e for e in r.graph.edges if not (set(e) & motif)]
                assert tuple(rest) == by_backbone[r.provenance["backbone_id"]].edges

    def test_provenance(self, records):
        p = records[0].provenance
        assert {"quadrant", "backbone_id", "motif_variant", "seed"} <= set(p)

    def test_deterministic_bytes(self, records):
        again = dg.generate_dataset(small_cfg())
        assert [io.dumps(io.record_to_dict(r)) for r in records] == [io.dumps(io.record_to_dict(r)) for r in again]

    def test_quadrants_share_backbones(self):
        a = dg.generate_dataset(small_cfg(quadrant="hom-hom", backbone_count=2, motif_variants=1))
        b = dg.generate_dataset(small_cfg(quadrant="hom-het", backbone_count=2, motif_variants=1))
        assert [r.graph for r in a if not r.graph_label] == [r.graph for r in b if not r.graph_label]

    def test_homophily_separates_quadrants(self):
        hom = dg.generate_dataset(small_cfg(quadrant="hom-hom", backbone_count=100, motif_variants=1))
        het = dg.generate_dataset(small_cfg(quadrant="het-het", backbone_count=100, motif_variants=1))
        h1 = [dg.edge_homophily(r.graph, r.node_labels) for r in hom if not r.graph_label]
        h2 = [dg.edge_homophily(r.graph, r.node_labels) for r in het if not r.graph_label]
        assert stats.mannwhitneyu(h1, h2, alternative="greater").pvalue < 0.01

    @pytest.mark.parametrize(
        "kw",
        [
            dict(quadrant="mixed"),
            dict(noise_sigma=0.0),
            dict(backbone_count=0),
            dict(motif_n_range=(7, 5)),
            dict(num_classes=1),
            dict(edge_mode="other"),
        ],
    )
    def test_config_validation(self, kw):
        with pytest.raises(InvalidConfig):
            small_cfg(**kw)


class TestAttach:
    def test_counts_and_features(self):
        rng = np.random.default_rng(0)
        bg = dg.random_skeleton(20, rng)
        mg = dg.random_skeleton(5, rng)
        back = dg.make_record(bg, np.zeros(20, dtype=int), 4, 0.05, 0, rng)
        mot = dg.make_record(mg, np.ones(5, dtype=int), 4, 0.05, 0, rng)
        r = dg.attach_motif(back, mot, rng)
        assert r.n == 25 and r.graph.m == bg.m + mg.m + 1
        assert r.motif_nodes == tuple(range(20, 25))
        assert len(r.intra_motif_edges) == mg.m
        np.testing.assert_array_equal(r.features, np.vstack([back.features, mot.features]))

    def test_record_rejects_inconsistent_label(self):
        g = Graph(2, [(0, 1)])
        with pytest.raises(ValidationError):
            dg.SyntheticGraphRecord(g, np.zeros((2, 1)), [0, 0], graph_label=1)
        with pytest.raises(ValidationError):
            dg.SyntheticGraphRecord(g, np.zeros((2, 1)), [0, 0], boundary_edges=[(0, 2)])


class TestSplits:
    def test_hundred(self):
        parts = dg.split_indices([0, 1] * 50, rng=np.random.default_rng(0))
        assert [len(p) for p in parts] == [80, 10, 10]
        assert sorted(np.concatenate(parts).tolist()) == list(range(100))

    def test_ten(self):
        assert [len(p) for p in dg.split_indices([0, 1] * 5, rng=np.random.default_rng(0))] == [8, 1, 1]

    def test_stratified(self):
        rng = np.random.default_rng(1)
        labels = (rng.random(1000) < 0.3).astype(int)
        for part in dg.split_indices(labels, rng=rng):
            assert abs(labels[part].mean() - labels.mean()) < 0.05

    def test_same_seed_same_split(self):
        a = dg.split_indices([0, 1] * 30, rng=np.random.default_rng(4))
        b = dg.split_indices([0, 1] * 30, rng=np.random.default_rng(4))
        assert all(np.array_equal(x, y) for x, y in zip(a, b))

    def test_errors(self):
        with pytest.raises(EmptySplit):
            dg.split_indices([0, 1, 0], rng=np.random.default_rng(0))
        with pytest.raises(ValidationError):
            dg.split_indices([0, 1] * 10, ratios=(0.5, 0.5, 0.5))

    def test_regression_target(self):
        rng = np.random.default_rng(0)
        g = Graph(2, [(0, 1)])
        r = dg.SyntheticGraphRecord(g, rng.standard_normal((2, 1)), [0, 1])
        assert dg.regression_target(r) == pytest.approx(0.5)
