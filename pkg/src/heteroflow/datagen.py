"""Synthetic backbone/motif graph classification data with controlled heterophily.

Backbones (20-50 nodes) and motifs (5-7 nodes) are random trees densified with
extra uniformly chosen edges. Homophilic graphs take their latent node classes
from greedy modularity communities, heterophilic graphs draw classes uniformly
at random. Node features are a frozen per-class Gaussian embedding plus small
isotropic noise. Motif classes live in their own block of the embedding table,
so motif and backbone nodes have distinct feature distributions.
"""

import heapq
from dataclasses import dataclass, field, replace

import numpy as np

from .errors import EmptySplit, InvalidConfig, TargetOutOfRange, ValidationError
from .graph import Graph, as_features
from .motif import boundary_and_intra_edges

QUADRANTS = ("hom-hom", "hom-het", "het-hom", "het-het")
MOTIF_CLASS_OFFSET = 100

# stream tags for derived seeds
_BACKBONE, _MOTIF, _RECORD, _EMBED, _SPLIT = 1, 2, 3, 4, 5
_KIND = {"hom": 0, "het": 1}


def rng_for(*key):
    """Independent generator for an integer key path (root seed first)."""
    return np.random.default_rng(np.random.SeedSequence([int(k) for k in key]))


# ---------------------------------------------------------------- structure

def random_tree(n, rng):
    """Uniform labeled tree on ``n`` nodes via a random Pruefer sequence."""
    if n < 2:
        raise ValidationError("a tree needs at least 2 nodes")
    if n == 2:
        return Graph(2, [(0, 1)])
    seq = [int(x) for x in rng.integers(0, n, size=n - 2)]
    degree = [1] * n
    for x in seq:
        degree[x] += 1
    leaves = [v for v in range(n) if degree[v] == 1]
    heapq.heapify(leaves)
    edges = []
    for x in seq:
        leaf = heapq.heappop(leaves)
        edges.append((leaf, x))
        degree[x] -= 1
        if degree[x] == 1:
            heapq.heappush(leaves, x)
    edges.append((heapq.heappop(leaves), heapq.heappop(leaves)))
    return Graph(n, edges)


def max_edges(n):
    return n * (n - 1) // 4


def densify(tree, target_edges, rng):
    """Add uniformly sampled non-edges until the graph has ``target_edges`` edges."""
    n = tree.n
    if not n - 1 <= target_edges <= max_edges(n):
        raise TargetOutOfRange(f"target {target_edges} outside [{n - 1}, {max_edges(n)}]")
    extra = target_edges - tree.m
    if extra < 0:
        raise TargetOutOfRange("target is below the current edge count")
    if extra == 0:
        return tree
    present = tree.edge_set
    candidates = [(i, j) for i in range(n) for j in range(i + 1, n) if (i, j) not in present]
    picks = rng.choice(len(candidates), size=extra, replace=False)
    return Graph(n, list(tree.edges) + [candidates[k] for k in sorted(picks)])


def sample_target_edges(n, rng, mode="sampled"):
    if max_edges(n) < n - 1:
        raise TargetOutOfRange(f"no edge count fits [{n - 1}, {max_edges(n)}] for n={n}")
    if mode == "half":
        return max_edges(n)
    if mode != "sampled":
        raise InvalidConfig(f"unknown edge mode {mode!r}")
    return int(rng.integers(n - 1, max_edges(n) + 1))


def random_skeleton(n, rng, mode="sampled"):
    tree = random_tree(n, rng)
    return densify(tree, sample_target_edges(n, rng, mode), rng)


# ------------------------------------------------------------------- labels

def modularity(g, labels):
    """Newman modularity of a node partition."""
    labels = np.asarray(labels)
    m2 = 2.0 * g.m
    deg = g.degrees.astype(float)
    q = 0.0
    for c in np.unique(labels):
        mask = labels == c
        inner = g.adjacency[np.ix_(mask, mask)].sum()
        q += inner / m2 - (deg[mask].sum() / m2) ** 2
    return float(q)


def greedy_modularity_communities(g, tie_tol=1e-12):
    """Clauset-Newman-Moore agglomeration on a dense community matrix.

    Starting from singletons, the adjacent pair with the largest modularity
    gain ``2 (e_ij - a_i a_j)`` is merged until no gain is positive. Equal
    gains (within ``tie_tol``) go to the lexicographically smallest pair of
    community ids, where a community's id is its smallest node. Returns
    labels numbered by first appearance.
    """
    n = g.n
    m2 = 2.0 * g.m
    e = np.array(g.adjacency) / m2
    a = g.degrees / m2
    alive = np.ones(n, dtype=bool)
    upper = np.triu(np.ones((n, n), dtype=bool), 1)
    members = {v: [v] for v in range(n)}
    while True:
        gain = 2.0 * (e - np.outer(a, a))
        ok = upper & (e > 0) & alive[:, None] & alive[None, :]
        if not ok.any():
            break
        best = gain[ok].max()
        if best <= 0:
            break
        ties = np.argwhere(ok & (gain >= best - tie_tol))
        i, j = (int(x) for x in ties[0])  # argwhere is row-major: smallest (i, j)
        e[i, :] += e[j, :]
        e[:, i] += e[:, j]
        e[j, :] = 0.0
        e[:, j] = 0.0
        a[i] += a[j]
        a[j] = 0.0
        alive[j] = False
        members[i].extend(members.pop(j))
    labels = np.empty(n, dtype=np.int64)
    for rank, cid in enumerate(sorted(members)):
        labels[members[cid]] = rank
    return labels


def assign_labels_homophilic(g):
    return greedy_modularity_communities(g)


def assign_labels_heterophilic(g, num_classes, rng):
    if num_classes < 2:
        raise ValidationError("heterophilic labeling needs at least 2 classes")
    return rng.integers(0, num_classes, size=g.n).astype(np.int64)


def edge_homophily(g, labels):
    """Fraction of edges whose endpoints share a label."""
    if g.m == 0:
        return 0.0
    labels = np.asarray(labels)
    i, j = g.edge_array.T
    return float(np.mean(labels[i] == labels[j]))


# ----------------------------------------------------------------- features

def class_embedding(classes, d, embedding_seed):
    """Frozen N(0, I) embedding rows; row ``c`` depends only on (seed, c)."""
    classes = np.asarray(classes, dtype=np.int64)
    table = {int(c): rng_for(embedding_seed, _EMBED, int(c)).standard_normal(d) for c in np.unique(classes)}
    out = np.empty((len(classes), d))
    for k, c in enumerate(classes):
        out[k] = table[int(c)]
    return out


def features_from_labels(node_labels, d, sigma, embedding_seed, rng):
    if d < 1:
        raise ValidationError("feature dimension must be >= 1")
    if sigma < 0:
        raise ValidationError("noise sigma must be >= 0")
    base = class_embedding(node_labels, d, embedding_seed)
    if sigma == 0:
        return base
    return base + sigma * rng.standard_normal(base.shape)


# ------------------------------------------------------------------ records

@dataclass(frozen=True)
class SyntheticGraphRecord:
    graph: Graph
    features: np.ndarray
    node_labels: np.ndarray
    motif_nodes: tuple = ()
    boundary_edges: tuple = ()
    intra_motif_edges: tuple = ()
    graph_label: int = 0
    provenance: dict = field(default_factory=dict)
    target: float = None

    def __post_init__(self):
        feats = as_features(self.features, self.graph.n)
        object.__setattr__(self, "features", feats)
        labels = np.asarray(self.node_labels, dtype=np.int64)
        if labels.shape != (self.graph.n,):
            raise ValidationError("node_labels must have one entry per node")
        object.__setattr__(self, "node_labels", labels)
        motif = tuple(int(v) for v in self.motif_nodes)
        if bool(motif) != bool(self.graph_label):
            raise ValidationError("graph_label must be 1 exactly when motif nodes exist")
        edges = self.graph.edge_set
        boundary = tuple(tuple(e) for e in self.boundary_edges)
        intra = tuple(tuple(e) for e in self.intra_motif_edges)
        if set(boundary) & set(intra) or not set(boundary) | set(intra) <= edges:
            raise ValidationError("boundary/intra edges must be disjoint subsets of the graph")
        object.__setattr__(self, "motif_nodes", motif)
        object.__setattr__(self, "boundary_edges", boundary)
        object.__setattr__(self, "intra_motif_edges", intra)

    @property
    def n(self):
        return self.graph.n


def make_record(graph, labels, d, sigma, embedding_seed, rng, provenance=None):
    feats = features_from_labels(labels, d, sigma, embedding_seed, rng)
    return SyntheticGraphRecord(graph, feats, labels, provenance=dict(provenance or {}))


def attach_motif(backbone, motif, rng):
    """Disjoint union plus one bridge between a random motif and backbone node."""
    off = backbone.n
    u = int(rng.integers(0, motif.n))
    v = int(rng.integers(0, backbone.n))
    motif_edges = [(i + off, j + off) for i, j in motif.graph.edges]
    bridge = (v, u + off)
    graph = Graph(off + motif.n, list(backbone.graph.edges) + motif_edges + [bridge])
    motif_nodes = tuple(range(off, off + motif.n))
    boundary, intra = boundary_and_intra_edges(graph, motif_nodes)
    provenance = dict(backbone.provenance)
    provenance.update({f"motif_{k}": val for k, val in motif.provenance.items()})
    return SyntheticGraphRecord(
        graph=graph,
        features=np.vstack([backbone.features, motif.features]),
        node_labels=np.concatenate([backbone.node_labels, motif.node_labels]),
        motif_nodes=motif_nodes,
        boundary_edges=tuple(boundary),
        intra_motif_edges=tuple(intra),
        graph_label=1,
        provenance=provenance,
    )


@dataclass(frozen=True)
class GenConfig:
    seed: int = 0
    quadrant: str = "hom-hom"
    backbone_count: int = 200
    motif_variants: int = 5
    backbone_n_range: tuple = (20, 50)
    motif_n_range: tuple = (5, 7)
    noise_sigma: float = 0.05
    feature_dim: int = 8
    num_classes: int = 3
    edge_mode: str = "sampled"
    embedding_seed: int = None

    def __post_init__(self):
        if self.quadrant not in QUADRANTS:
            raise InvalidConfig(f"quadrant must be one of {QUADRANTS}")
        for name in ("backbone_n_range", "motif_n_range"):
            lo, hi = getattr(self, name)
            if not 2 <= lo <= hi:
                raise InvalidConfig(f"{name} must be a nonempty range with lower end >= 2")
        if self.motif_n_range[0] < 4:
            raise InvalidConfig("densified motifs need at least 4 nodes")
        if self.noise_sigma <= 0:
            raise InvalidConfig("noise_sigma must be positive")
        if self.backbone_count < 1 or self.motif_variants < 1:
            raise InvalidConfig("counts must be >= 1")
        if self.feature_dim < 1:
            raise InvalidConfig("feature_dim must be >= 1")
        if self.num_classes < 2:
            raise InvalidConfig("num_classes must be >= 2")
        if self.edge_mode not in ("sampled", "half"):
            raise InvalidConfig("edge_mode must be 'sampled' or 'half'")

    @property
    def embed_seed(self):
        return self.seed if self.embedding_seed is None else self.embedding_seed

    def with_quadrant(self, quadrant):
        return replace(self, quadrant=quadrant)


def _skeleton_labels(kind, n_range, rng, cfg):
    n = int(rng.integers(n_range[0], n_range[1] + 1))
    g = random_skeleton(n, rng, cfg.edge_mode)
    if kind == "hom":
        labels = assign_labels_homophilic(g)
    else:
        labels = assign_labels_heterophilic(g, cfg.num_classes, rng)
    return g, labels


def backbone_skeleton(cfg, kind, index):
    """Structure and classes of backbone ``index``; shared by quadrants of the same kind."""
    return _skeleton_labels(kind, cfg.backbone_n_range, rng_for(cfg.seed, _BACKBONE, _KIND[kind], index), cfg)


def motif_skeleton(cfg, kind, variant):
    g, labels = _skeleton_labels(kind, cfg.motif_n_range, rng_for(cfg.seed, _MOTIF, _KIND[kind], variant), cfg)
    return g, labels + MOTIF_CLASS_OFFSET


def generate_dataset(cfg):
    """All records of one quadrant: a positive and a negative per (backbone, motif)."""
    back_kind, motif_kind = cfg.quadrant.split("-")
    qi = QUADRANTS.index(cfg.quadrant)
    motifs = [motif_skeleton(cfg, motif_kind, v) for v in range(cfg.motif_variants)]
    records = []
    for b in range(cfg.backbone_count):
        bg, blabels = backbone_skeleton(cfg, back_kind, b)
        for v, (mg, mlabels) in enumerate(motifs):
            base = {"quadrant": cfg.quadrant, "backbone_id": b, "motif_variant": v, "seed": cfg.seed}
            rng = rng_for(cfg.seed, _RECORD, qi, b, v)
            back = make_record(bg, blabels, cfg.feature_dim, cfg.noise_sigma, cfg.embed_seed, rng, base)
            mot = make_record(mg, mlabels, cfg.feature_dim, cfg.noise_sigma, cfg.embed_seed, rng,
                              {"id": v, "kind": motif_kind})
            records.append(attach_motif(back, mot, rng))
            neg = make_record(bg, blabels, cfg.feature_dim, cfg.noise_sigma, cfg.embed_seed, rng, base)
            records.append(neg)
    return records


def regression_target(record):
    """Synthetic regression target: motif presence plus the share of class-0 nodes."""
    share = float(np.mean(record.node_labels == 0))
    return 2.0 * record.graph_label + share


# ------------------------------------------------------------------- splits

def split_indices(labels, ratios=(0.8, 0.1, 0.1), rng=None):
    """Stratified shuffle-and-cut into train/val/test index arrays.

    Validation and test sizes are ``floor(N * ratio)``; train takes the rest.
    Each label group is shuffled and spread evenly along one ordering before
    cutting, so every split keeps roughly the global label mix.
    """
    if len(ratios) != 3 or abs(sum(ratios) - 1.0) > 1e-9 or min(ratios) < 0:
        raise ValidationError("ratios must be three nonnegative numbers summing to 1")
    rng = np.random.default_rng(0) if rng is None else rng
    labels = np.asarray(labels)
    total = len(labels)
    n_val = int(np.floor(total * ratios[1] + 1e-9))
    n_test = int(np.floor(total * ratios[2] + 1e-9))
    n_train = total - n_val - n_test
    if min(n_train, n_val, n_test) <= 0:
        raise EmptySplit(f"{total} records cannot fill all three splits")
    keys = np.empty(total)
    for lab in np.unique(labels):
        idx = np.flatnonzero(labels == lab)
        idx = idx[rng.permutation(len(idx))]
        keys[idx] = (np.arange(len(idx)) + rng.random(len(idx))) / len(idx)
    order = np.argsort(keys, kind="stable")
    val = np.sort(order[:n_val])
    test = np.sort(order[n_val:n_val + n_test])
    train = np.sort(order[n_val + n_test:])
    return train, val, test


def split_rng(seed, quadrant):
    """Generator used for the canonical split of one generated quadrant."""
    return rng_for(seed, _SPLIT, QUADRANTS.index(quadrant))


def split_dataset(records, ratios=(0.8, 0.1, 0.1), rng=None):
    labels = [r.graph_label for r in records]
    parts = split_indices(labels, ratios, rng)
    return tuple([records[i] for i in part] for part in parts)
