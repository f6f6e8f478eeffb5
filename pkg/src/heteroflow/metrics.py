"""Embedding-separation and edge-energy diagnostics."""

from dataclasses import dataclass

import numpy as np

from ._core import kernels
from .errors import (
    DimensionMismatch,
    EmptySample,
    NonpositiveBandwidth,
    TooFewSamples,
    ZeroInitialSubsetEnergy,
    ZeroNorm,
)
from .graph import as_features, edge_subset_dirichlet_energy


def rbf_kernel(x, y, sigma):
    """exp(-|x - y|^2 / (2 sigma^2))."""
    if sigma <= 0:
        raise NonpositiveBandwidth(f"bandwidth must be positive, got {sigma}")
    diff = np.asarray(x, dtype=np.float64) - np.asarray(y, dtype=np.float64)
    return float(np.exp(-np.dot(diff, diff) / (2.0 * sigma * sigma)))


def _as_samples(s):
    arr = np.asarray(s, dtype=np.float64)
    if arr.ndim == 1:
        arr = arr[:, None]
    return np.ascontiguousarray(arr)


def median_bandwidth(samples):
    """Median pairwise Euclidean distance of the pooled sample (1.0 if that is 0)."""
    x = _as_samples(samples)
    if len(x) < 2:
        raise TooFewSamples("median heuristic needs at least two samples")
    sq = np.sum(x * x, axis=1)
    d2 = np.maximum(sq[:, None] + sq[None, :] - 2.0 * x @ x.T, 0.0)
    iu = np.triu_indices(len(x), 1)
    med = float(np.median(np.sqrt(d2[iu])))
    return med if med > 0 else 1.0


@dataclass(frozen=True)
class MMDResult:
    mmd2: float
    p: int
    q: int
    bandwidth: float


def mmd2(h, g, sigma):
    """Biased squared MMD with an RBF kernel, diagonal terms included."""
    if sigma <= 0:
        raise NonpositiveBandwidth(f"bandwidth must be positive, got {sigma}")
    h, g = _as_samples(h), _as_samples(g)
    if len(h) == 0 or len(g) == 0:
        raise EmptySample("both samples need at least one embedding")
    if h.shape[1] != g.shape[1]:
        raise DimensionMismatch("samples live in different dimensions")
    gamma = 1.0 / (2.0 * sigma * sigma)
    p, q = len(h), len(g)
    khh = kernels.rbf_sum(h, h, gamma)
    kgg = kernels.rbf_sum(g, g, gamma)
    # fixed summation order for the cross term keeps mmd2(h, g) == mmd2(g, h) bit for bit
    a, b = (h, g) if (p, h.tobytes()) <= (q, g.tobytes()) else (g, h)
    khg = kernels.rbf_sum(a, b, gamma)
    value = khh / p**2 + kgg / q**2 - 2.0 * khg / (p * q)
    return MMDResult(float(value), p, q, float(sigma))


def class_mmd(embeddings, labels, sigma=None, subsample=None, rng=None):
    """MMD between motif (label 1) and motif-free (label 0) embeddings.

    The bandwidth defaults to the median heuristic over the pooled sample.
    ``subsample`` draws that many embeddings per class without replacement.
    """
    emb = _as_samples(embeddings)
    labels = np.asarray(labels)
    pos, neg = emb[labels > 0.5], emb[labels <= 0.5]
    if subsample is not None:
        rng = np.random.default_rng(0) if rng is None else rng
        pos = pos[np.sort(rng.choice(len(pos), min(subsample, len(pos)), replace=False))]
        neg = neg[np.sort(rng.choice(len(neg), min(subsample, len(neg)), replace=False))]
    if sigma is None:
        sigma = median_bandwidth(np.vstack([pos, neg]))
    return mmd2(pos, neg, sigma)


def _normalized_subset_energy(g, f, subset):
    norm2 = float(np.sum(f * f))
    if norm2 == 0:
        raise ZeroNorm("feature matrix has zero norm")
    return edge_subset_dirichlet_energy(g, f, subset) / norm2


def shrink_ratio(g, f0, ft, subset):
    """Normalized subset Dirichlet energy at the end divided by its initial value.

    ``f0`` and ``ft`` may have different widths (input vs embedding channels).
    """
    f0 = as_features(f0, g.n)
    ft = as_features(ft, g.n)
    before = _normalized_subset_energy(g, f0, subset)
    if before <= 0:
        raise ZeroInitialSubsetEnergy("initial subset energy is zero; ratio undefined")
    return _normalized_subset_energy(g, ft, subset) / before


def negative_alignment_fraction(f, edges):
    """Share of edges whose endpoint feature rows have negative inner product."""
    f = np.asarray(f, dtype=np.float64)
    if f.ndim == 1:
        f = f[:, None]
    edges = np.asarray(edges, dtype=np.intp).reshape(-1, 2)
    if len(edges) == 0:
        return 0.0
    dots = np.einsum("ij,ij->i", f[edges[:, 0]], f[edges[:, 1]])
    return float(np.mean(dots < 0))


def frequency_profile(spectrum, f):
    """Share of ``|F|^2`` carried by each Laplacian eigenvector."""
    f = as_features(f, spectrum.eigenvectors.shape[0])
    total = float(np.sum(f * f))
    if total == 0:
        raise ZeroNorm("feature matrix has zero norm")
    coeff = spectrum.eigenvectors.T @ f
    return np.sum(coeff * coeff, axis=1) / total
