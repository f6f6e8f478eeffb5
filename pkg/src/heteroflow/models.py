"""Desk-scale graph classifiers with hand-written reverse-mode gradients.

Three families share a mean-pooling readout and a linear head:

``gcn``
    ``H <- relu(S H W_l)`` with the self-loop normalized adjacency ``S``.
``gf_gcn``
    linear encoder, then ``H <- H + tau * A_hat H W`` with one shared
    symmetric ``W`` (explicit Euler steps of the simplified gradient flow).
``adaptive_mix``
    ``H <- relu(m1 A_hat H W_low + m2 (I - A_hat) H W_high + m3 H W_id)``,
    ``m = softmax(alpha_l)`` learned per layer.

All graphs of a batch are stacked into one block-diagonal sparse operator so
a full-batch epoch is a handful of sparse/dense products.
"""

from dataclasses import dataclass, field

import numpy as np
import scipy.sparse as sp
from scipy.special import expit

from .errors import DimensionMismatch, NonFiniteLoss, ShapeMismatch, ValidationError

FAMILIES = ("gcn", "gf_gcn", "adaptive_mix")

# Hidden widths chosen so the three families carry a similar parameter count
# for the default 8-dim input and 4 layers (about 1k weights each).
DEFAULT_HIDDEN = {"gcn": 16, "gf_gcn": 32, "adaptive_mix": 9}


# -------------------------------------------------------------------- batch

class GraphBatch:
    """Block-diagonal stack of graphs with features and optional targets."""

    def __init__(self, graphs, features, targets=None, dtype=np.float64):
        if len(graphs) != len(features):
            raise ShapeMismatch("one feature matrix per graph is required")
        sizes = np.array([g.n for g in graphs], dtype=np.int64)
        offsets = np.concatenate([[0], np.cumsum(sizes)])
        total = int(offsets[-1])
        feats = [np.asarray(f, dtype=np.float64) for f in features]
        for g, f in zip(graphs, feats):
            if f.ndim != 2 or f.shape[0] != g.n:
                raise DimensionMismatch("feature rows must match node counts")
        if feats and len({f.shape[1] for f in feats}) != 1:
            raise DimensionMismatch("all graphs need the same feature width")

        rows, cols, deg = [], [], np.zeros(total)
        for g, off in zip(graphs, offsets[:-1]):
            if g.m:
                e = g.edge_array + off
                rows.append(e[:, 0])
                cols.append(e[:, 1])
            deg[off:off + g.n] = g.degrees
        r = np.concatenate(rows) if rows else np.zeros(0, dtype=np.intp)
        c = np.concatenate(cols) if cols else np.zeros(0, dtype=np.intp)
        both_r = np.concatenate([r, c])
        both_c = np.concatenate([c, r])
        inv = 1.0 / np.sqrt(np.maximum(deg, 1.0))
        self.a_hat = sp.csr_matrix((inv[both_r] * inv[both_c], (both_r, both_c)), shape=(total, total), dtype=dtype)
        inv_sl = 1.0 / np.sqrt(deg + 1.0)
        diag = np.arange(total)
        self.a_sl = sp.csr_matrix(
            (
                np.concatenate([inv_sl[both_r] * inv_sl[both_c], inv_sl**2]),
                (np.concatenate([both_r, diag]), np.concatenate([both_c, diag])),
            ),
            shape=(total, total),
            dtype=dtype,
        )
        owner = np.repeat(np.arange(len(graphs)), sizes)
        self.pool = sp.csr_matrix((1.0 / sizes[owner], (owner, diag)), shape=(len(graphs), total), dtype=dtype)
        self.x = (np.vstack(feats) if feats else np.zeros((0, 0))).astype(dtype)
        self.dtype = np.dtype(dtype)
        self.sizes = sizes
        self.offsets = offsets
        self.graphs = list(graphs)
        self.targets = None if targets is None else np.asarray(targets, dtype=np.float64)

    def __len__(self):
        return len(self.sizes)

    @property
    def in_dim(self):
        return self.x.shape[1]

    def node_slice(self, k):
        return slice(int(self.offsets[k]), int(self.offsets[k + 1]))

    @classmethod
    def from_records(cls, records, task="binary_classification", dtype=np.float64):
        graphs = [r.graph for r in records]
        feats = [r.features for r in records]
        if task == "regression":
            targets = [r.target for r in records]
            if any(t is None for t in targets):
                raise ValidationError("regression needs a target on every record")
        else:
            targets = [r.graph_label for r in records]
        return cls(graphs, feats, targets, dtype)


# ------------------------------------------------------------------- params

@dataclass
class ModelParams:
    family: str
    layers: int
    in_dim: int
    hidden: int
    tau: float = 0.2
    activation: str = "relu"
    tensors: dict = field(default_factory=dict)

    def copy(self):
        return ModelParams(self.family, self.layers, self.in_dim, self.hidden, self.tau,
                           self.activation, {k: v.copy() for k, v in self.tensors.items()})

    def count(self):
        return int(sum(v.size for v in self.tensors.values()))

    def mixing(self, layer):
        alpha = self.tensors[f"alpha{layer}"]
        z = np.exp(alpha - alpha.max())
        return z / z.sum()


def _glorot(rng, fan_in, fan_out):
    limit = np.sqrt(6.0 / (fan_in + fan_out))
    return rng.uniform(-limit, limit, size=(fan_in, fan_out))


def init_params(family, in_dim, hidden=None, layers=4, tau=0.2, seed=0, activation=None):
    if family not in FAMILIES:
        raise ValidationError(f"unknown family {family!r}")
    if layers < 1:
        raise ValidationError("need at least one layer")
    hidden = DEFAULT_HIDDEN[family] if hidden is None else hidden
    if activation is None:
        activation = "identity" if family == "gf_gcn" else "relu"
    rng = np.random.default_rng(seed)
    t = {}
    if family == "gcn":
        dims = [in_dim] + [hidden] * layers
        for l in range(layers):
            t[f"W{l}"] = _glorot(rng, dims[l], dims[l + 1])
    elif family == "gf_gcn":
        t["enc"] = _glorot(rng, in_dim, hidden)
        w = _glorot(rng, hidden, hidden)
        t["W"] = 0.5 * (w + w.T)
    else:
        dims = [in_dim] + [hidden] * layers
        for l in range(layers):
            for name in ("low", "high", "id"):
                t[f"{name}{l}"] = _glorot(rng, dims[l], dims[l + 1])
            t[f"alpha{l}"] = np.zeros(3)
    t["head_w"] = _glorot(rng, hidden, 1)[:, 0]
    t["head_b"] = np.zeros(1)
    return ModelParams(family, layers, in_dim, hidden, tau, activation, t)


# ------------------------------------------------------------------ forward

def _act(z, kind):
    return np.maximum(z, 0.0) if kind == "relu" else z


def _act_grad(dh, z, kind):
    return dh * (z > 0) if kind == "relu" else dh


def forward_batch(params, batch, keep_layers=False):
    """Return (node embeddings, graph embeddings, predictions, cache).

    Computation runs in the batch's dtype; parameters are cast on the fly.
    """
    if batch.in_dim != params.in_dim:
        raise DimensionMismatch(f"model expects {params.in_dim} input features, got {batch.in_dim}")
    t = {k: v.astype(batch.dtype, copy=False) for k, v in params.tensors.items()}
    h = batch.x
    cache = {"layers": [h] if keep_layers else None, "steps": []}
    if params.family == "gcn":
        for l in range(params.layers):
            u = batch.a_sl @ h
            z = u @ t[f"W{l}"]
            cache["steps"].append((u, z))
            h = _act(z, params.activation)
            if keep_layers:
                cache["layers"].append(h)
    elif params.family == "gf_gcn":
        h = h @ t["enc"]
        if keep_layers:
            cache["layers"][0] = h
        for l in range(params.layers):
            u = batch.a_hat @ h
            cache["steps"].append(u)
            h = h + params.tau * (u @ t["W"])
            if keep_layers:
                cache["layers"].append(h)
    else:
        for l in range(params.layers):
            # m1 U W_low + m2 (H - U) W_high + m3 H W_id, folded into two products
            m = params.mixing(l).astype(batch.dtype)
            u = batch.a_hat @ h
            w_u = m[0] * t[f"low{l}"] - m[1] * t[f"high{l}"]
            w_h = m[1] * t[f"high{l}"] + m[2] * t[f"id{l}"]
            z = u @ w_u + h @ w_h
            cache["steps"].append((h, u, z, m, w_u, w_h))
            h = _act(z, params.activation)
            if keep_layers:
                cache["layers"].append(h)
    pooled = batch.pool @ h
    pred = pooled @ t["head_w"] + t["head_b"][0]
    cache["h_last"] = h
    cache["pooled"] = pooled
    return h, pooled, pred, cache


def forward(params, g, f0):
    """Single-graph forward pass: (node embeddings, graph embedding, prediction)."""
    h, pooled, pred, _ = forward_batch(params, GraphBatch([g], [f0]))
    return h, pooled[0], float(pred[0])


def layer_embeddings(params, g, f0):
    """Node embeddings after every layer, input (or encoded input) first."""
    _, _, _, cache = forward_batch(params, GraphBatch([g], [f0]), keep_layers=True)
    return cache["layers"]


# --------------------------------------------------------------------- loss

def loss(pred, target, kind):
    """Mean squared error or mean logistic loss (0/1 targets mapped to -1/+1)."""
    pred = np.asarray(pred, dtype=np.float64)
    target = np.asarray(target, dtype=np.float64)
    if pred.shape != target.shape:
        raise ShapeMismatch(f"prediction shape {pred.shape} != target shape {target.shape}")
    if pred.size == 0:
        raise ShapeMismatch("empty batch")
    if kind == "mse":
        return float(np.mean((pred - target) ** 2))
    if kind == "logistic":
        sign = 2.0 * target - 1.0
        return float(np.mean(np.logaddexp(0.0, -sign * pred)))
    raise ValidationError(f"unknown loss {kind!r}")


def _loss_grad(pred, target, kind):
    if kind == "mse":
        return 2.0 * (pred - target) / len(pred)
    sign = 2.0 * target - 1.0
    return -sign * expit(-sign * pred) / len(pred)


def loss_and_grad(params, batch, kind):
    """Loss over ``batch`` and its gradient for every tensor in ``params``.

    The gradient of the shared symmetric ``W`` in ``gf_gcn`` is the symmetric
    part of the unconstrained gradient, i.e. the gradient on the symmetric
    subspace the parameter lives in.
    """
    if len(batch) == 0:
        raise ValidationError("empty batch")
    t = {k: v.astype(batch.dtype, copy=False) for k, v in params.tensors.items()}
    _, pooled, pred, cache = forward_batch(params, batch)
    value = loss(pred, batch.targets, kind)
    dpred = _loss_grad(pred, batch.targets, kind).astype(batch.dtype)
    g = {"head_w": pooled.T @ dpred, "head_b": np.array([dpred.sum()])}
    dh = batch.pool.T @ np.outer(dpred, t["head_w"])

    if params.family == "gcn":
        for l in reversed(range(params.layers)):
            u, z = cache["steps"][l]
            dz = _act_grad(dh, z, params.activation)
            g[f"W{l}"] = u.T @ dz
            dh = batch.a_sl @ (dz @ t[f"W{l}"].T)
    elif params.family == "gf_gcn":
        w = t["W"]
        dw = np.zeros_like(w)
        for l in reversed(range(params.layers)):
            u = cache["steps"][l]
            dw += params.tau * (u.T @ dh)
            dh = dh + params.tau * (batch.a_hat @ (dh @ w.T))
        g["W"] = 0.5 * (dw + dw.T)
        g["enc"] = batch.x.T @ dh
    else:
        for l in reversed(range(params.layers)):
            h, u, z, m, w_u, w_h = cache["steps"][l]
            dz = _act_grad(dh, z, params.activation)
            gu = u.T @ dz
            gh = h.T @ dz
            low, high, ident = t[f"low{l}"], t[f"high{l}"], t[f"id{l}"]
            g[f"low{l}"] = m[0] * gu
            g[f"high{l}"] = m[1] * (gh - gu)
            g[f"id{l}"] = m[2] * gh
            # <channel output, dZ> without materializing the channel outputs
            dm = np.array([np.sum(low * gu), np.sum(high * (gh - gu)), np.sum(ident * gh)], dtype=np.float64)
            g[f"alpha{l}"] = m * (dm - m @ dm)
            dh = batch.a_hat @ (dz @ w_u.T) + dz @ w_h.T
    return value, {k: np.asarray(v, dtype=np.float64) for k, v in g.items()}


def grad(params, batch, kind):
    return loss_and_grad(params, batch, kind)[1]


# -------------------------------------------------------------------- adam

@dataclass
class AdamState:
    m: dict
    v: dict
    t: int = 0
    beta1: float = 0.9
    beta2: float = 0.999
    eps: float = 1e-8

    @classmethod
    def zeros_like(cls, params):
        return cls({k: np.zeros_like(v) for k, v in params.tensors.items()},
                   {k: np.zeros_like(v) for k, v in params.tensors.items()})


def adam_step(params, grads, state, lr):
    """Bias-corrected Adam update; returns new (params, state)."""
    if set(state.m) != set(params.tensors):
        raise ShapeMismatch("optimizer state does not match parameters")
    new = params.copy()
    t = state.t + 1
    b1, b2 = state.beta1, state.beta2
    m_new, v_new = {}, {}
    for k, p in new.tensors.items():
        gk = grads[k]
        m_new[k] = b1 * state.m[k] + (1 - b1) * gk
        v_new[k] = b2 * state.v[k] + (1 - b2) * gk * gk
        m_hat = m_new[k] / (1 - b1**t)
        v_hat = v_new[k] / (1 - b2**t)
        p -= lr * m_hat / (np.sqrt(v_hat) + state.eps)
    if new.family == "gf_gcn":
        w = new.tensors["W"]
        new.tensors["W"] = 0.5 * (w + w.T)
    return new, AdamState(m_new, v_new, t, b1, b2, state.eps)


# ------------------------------------------------------------------ training

@dataclass(frozen=True)
class TrainConfig:
    learning_rate: float = 0.01
    epochs: int = 300
    seed: int = 0
    task: str = "binary_classification"
    layers: int = 4
    hidden: int = None
    tau: float = 0.2
    # training arithmetic; parameters and optimizer state stay float64
    dtype: str = "float32"

    def __post_init__(self):
        if self.dtype not in ("float32", "float64"):
            raise ValidationError(f"unsupported dtype {self.dtype!r}")
        if self.learning_rate < 0:
            raise ValidationError("learning_rate must be nonnegative")
        if self.epochs < 1:
            raise ValidationError("epochs must be >= 1")
        if self.task not in ("binary_classification", "regression"):
            raise ValidationError(f"unknown task {self.task!r}")

    @property
    def loss_kind(self):
        return "mse" if self.task == "regression" else "logistic"


@dataclass
class TrainReport:
    family: str
    train_loss: list
    val_loss: list
    selected_epoch: int
    test_metric: float
    test_metric_name: str
    test_embeddings: np.ndarray
    test_targets: np.ndarray
    params: ModelParams


def _metric(pred, targets, task):
    if task == "regression":
        return float(np.mean((pred - targets) ** 2)), "mse"
    return float(np.mean((pred > 0) == (targets > 0.5))), "accuracy"


def train(family, splits, cfg):
    """Full-batch Adam; the parameters with the lowest validation loss are kept.

    ``splits`` is a (train, val, test) triple of record lists or batches.
    Epochs are 1-based in the report. Train and validation passes run in
    ``cfg.dtype``; the test split is always evaluated in float64.
    """
    dtypes = (cfg.dtype, cfg.dtype, "float64")
    batches = [s if isinstance(s, GraphBatch) else GraphBatch.from_records(s, cfg.task, np.dtype(dt))
               for s, dt in zip(splits, dtypes)]
    if any(len(b) == 0 for b in batches):
        raise ValidationError("every split must be nonempty")
    tr, va, te = batches
    kind = cfg.loss_kind
    params = init_params(family, tr.in_dim, cfg.hidden, cfg.layers, cfg.tau, cfg.seed)
    state = AdamState.zeros_like(params)
    best, best_val, best_epoch = params.copy(), np.inf, 0
    train_curve, val_curve = [], []
    for epoch in range(1, cfg.epochs + 1):
        value, grads = loss_and_grad(params, tr, kind)
        if not np.isfinite(value):
            raise NonFiniteLoss(f"training loss became {value} at epoch {epoch}", epoch=epoch)
        params, state = adam_step(params, grads, state, cfg.learning_rate)
        val = loss(forward_batch(params, va)[2], va.targets, kind)
        if not np.isfinite(val):
            raise NonFiniteLoss(f"validation loss became {val} at epoch {epoch}", epoch=epoch)
        train_curve.append(value)
        val_curve.append(val)
        if val < best_val:
            best, best_val, best_epoch = params.copy(), val, epoch
    _, pooled, pred, _ = forward_batch(best, te)
    metric, name = _metric(pred, te.targets, cfg.task)
    return TrainReport(family, train_curve, val_curve, best_epoch, metric, name, pooled, te.targets, best)


def embed_graphs(params, records):
    """Pooled graph embedding for each record."""
    if len(records) == 0:
        return np.zeros((0, params.hidden))
    batch = GraphBatch([r.graph for r in records], [r.features for r in records])
    return forward_batch(params, batch)[1]


def node_embeddings(params, records):
    """Final-layer node embeddings, one array per record."""
    if len(records) == 0:
        return []
    batch = GraphBatch([r.graph for r in records], [r.features for r in records])
    h = forward_batch(params, batch)[0]
    return [h[batch.node_slice(k)] for k in range(len(records))]
