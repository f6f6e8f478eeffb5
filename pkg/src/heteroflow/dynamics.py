"""Linear gradient-flow feature dynamics on graphs and their frequency regimes.

The message-passing update is taken with the degree-normalized adjacency
``A_hat = D^-1/2 A D^-1/2`` and an identity activation::

    full:        dF/dt = -F Omega + A_hat F W - F0 W_tilde
    simplified:  dF/dt = A_hat F W

The full update is exactly the negative gradient of::

    E(F) = 1/2 sum_i <f_i, Omega f_i> - 1/2 sum_ij A_hat_ij <f_i, W f_j> + phi0(F, F0)

with ``phi0 = 0`` or ``phi0 = trace(F^T F0 W_tilde)``.
"""

from dataclasses import dataclass, field

import numpy as np

from .errors import DimensionMismatch, Diverged, NotSymmetric, ValidationError, ZeroFeatureNorm
from .graph import Graph, as_features, normalized_adjacency, normalized_laplacian, symmetric_eigendecomposition

LFD = "LFD"
HFD = "HFD"
BOUNDARY = "boundary"
UNDECIDED = "undecided"

DIVERGENCE_NORM = 1e12


def _symmetric(m, name):
    m = np.atleast_2d(np.asarray(m, dtype=np.float64))
    if m.ndim != 2 or m.shape[0] != m.shape[1]:
        raise DimensionMismatch(f"{name} must be square, got shape {m.shape}")
    if np.abs(m - m.T).max() > 1e-12:
        raise NotSymmetric(f"{name} is not symmetric")
    return m


@dataclass(frozen=True)
class WeightSpec:
    """Channel-mixing matrices of the linear dynamics.

    ``omega`` defaults to zero and ``w_tilde`` to ``None`` (no source term).
    """

    w: np.ndarray
    omega: np.ndarray = None
    w_tilde: np.ndarray = None
    mu: np.ndarray = field(init=False, repr=False)
    q: np.ndarray = field(init=False, repr=False)

    def __post_init__(self):
        w = _symmetric(self.w, "W")
        d = w.shape[0]
        omega = np.zeros((d, d)) if self.omega is None else _symmetric(self.omega, "Omega")
        if omega.shape != (d, d):
            raise DimensionMismatch("Omega and W must have the same shape")
        w_tilde = self.w_tilde
        if w_tilde is not None:
            w_tilde = np.atleast_2d(np.asarray(w_tilde, dtype=np.float64))
            if w_tilde.shape != (d, d):
                raise DimensionMismatch("W_tilde and W must have the same shape")
        eig = symmetric_eigendecomposition(w, operator_tag="W")
        object.__setattr__(self, "w", w)
        object.__setattr__(self, "omega", omega)
        object.__setattr__(self, "w_tilde", w_tilde)
        object.__setattr__(self, "mu", eig.eigenvalues)
        object.__setattr__(self, "q", eig.eigenvectors)

    @property
    def d(self):
        return self.w.shape[0]

    @classmethod
    def scalar(cls, value, d=1):
        return cls(value * np.eye(d))


@dataclass(frozen=True)
class EigenSplit:
    theta_plus: np.ndarray
    theta_minus: np.ndarray

    @property
    def attractive(self):
        return self.theta_plus.T @ self.theta_plus

    @property
    def repulsive(self):
        return self.theta_minus.T @ self.theta_minus

    def reconstruct(self):
        return self.attractive - self.repulsive


def eigen_split(w):
    """Write symmetric W as Theta_plus^T Theta_plus - Theta_minus^T Theta_minus."""
    spec = w if isinstance(w, WeightSpec) else WeightSpec(w)
    mu, q = spec.mu, spec.q
    plus = np.sqrt(np.clip(mu, 0.0, None))
    minus = np.sqrt(np.clip(-mu, 0.0, None))
    return EigenSplit(theta_plus=plus[:, None] * q.T, theta_minus=minus[:, None] * q.T)


def _check(g, f, w):
    f = as_features(f, g.n)
    if f.shape[1] != w.d:
        raise DimensionMismatch(f"features have {f.shape[1]} channels, W is {w.d}x{w.d}")
    return f


def energy_functional(g, f, f0, w, phi0_mode="zero"):
    """Evaluate the energy whose gradient flow is the full update."""
    f = _check(g, f, w)
    a_hat = normalized_adjacency(g)
    value = 0.5 * np.sum(f * (f @ w.omega)) - 0.5 * np.sum(f * (a_hat @ f @ w.w))
    if phi0_mode == "zero":
        return float(value)
    if phi0_mode != "quadratic":
        raise ValidationError(f"unknown phi0 mode {phi0_mode!r}")
    f0 = _check(g, f0, w)
    if w.w_tilde is None:
        return float(value)
    return float(value + np.sum(f * (f0 @ w.w_tilde)))


def velocity(g, f, f0, w, variant="full", a_hat=None):
    """Right-hand side dF/dt of the linear dynamics."""
    if a_hat is None:
        a_hat = normalized_adjacency(g)
    if variant == "simplified":
        return a_hat @ f @ w.w
    if variant != "full":
        raise ValidationError(f"unknown variant {variant!r}")
    out = -f @ w.omega + a_hat @ f @ w.w
    if w.w_tilde is not None and f0 is not None:
        out -= f0 @ w.w_tilde
    return out


def gradient_flow_step(g, f, f0, w, tau, variant="full"):
    """One explicit Euler step F + tau * dF/dt."""
    if tau <= 0:
        raise ValidationError("step size must be positive")
    f = _check(g, f, w)
    if f0 is not None:
        f0 = _check(g, f0, w)
    return f + tau * velocity(g, f, f0, w, variant)


@dataclass(frozen=True)
class DynamicsTrace:
    tau: float
    times: np.ndarray
    snapshots: np.ndarray  # (k, n, d), rows of ``times`` where kept
    snapshot_times: np.ndarray
    dirichlet: np.ndarray
    rayleigh: np.ndarray
    feature_norm: np.ndarray
    energy: np.ndarray = None
    renormalized: bool = False

    @property
    def final(self):
        return self.snapshots[-1]

    def __len__(self):
        return len(self.times)


def simulate(g, f0, w, tau=0.05, steps=2000, variant="simplified", renormalize=False,
             snapshot_every=1):
    """Integrate the dynamics with explicit Euler and record energies.

    With ``renormalize`` the state is divided by its Frobenius norm after
    every step, which leaves the Rayleigh trajectory unchanged and never
    overflows. Otherwise :class:`Diverged` is raised once the norm exceeds
    1e12.
    """
    if steps < 1:
        raise ValidationError("steps must be >= 1")
    if tau <= 0:
        raise ValidationError("step size must be positive")
    f0 = _check(g, f0, w)
    norm0 = np.linalg.norm(f0)
    if norm0 == 0:
        raise ZeroFeatureNorm("initial features are zero")
    a_hat = normalized_adjacency(g)
    lap = normalized_laplacian(g)
    track_energy = variant == "full"
    phi0_mode = "quadratic" if w.w_tilde is not None else "zero"

    dirichlet = np.empty(steps + 1)
    norms = np.empty(steps + 1)
    energy = np.empty(steps + 1) if track_energy else None
    snaps, snap_t = [], []

    f = f0 / norm0 if renormalize else f0.copy()
    for k in range(steps + 1):
        nrm = np.linalg.norm(f)
        dirichlet[k] = np.sum(f * (lap @ f))
        norms[k] = nrm
        if track_energy:
            energy[k] = energy_functional(g, f, f0, w, phi0_mode)
        if k % snapshot_every == 0 or k == steps:
            snaps.append(f.copy())
            snap_t.append(k * tau)
        if k == steps:
            break
        f = f + tau * velocity(g, f, f0, w, variant, a_hat)
        nrm = np.linalg.norm(f)
        if not np.isfinite(nrm) or (not renormalize and nrm > DIVERGENCE_NORM):
            raise Diverged(
                f"feature norm exceeded {DIVERGENCE_NORM:g} at step {k + 1}; "
                "lower the step size or enable renormalization",
                step=k + 1,
            )
        if renormalize:
            if nrm == 0:
                raise ZeroFeatureNorm(f"features collapsed to zero at step {k + 1}")
            f = f / nrm

    with np.errstate(invalid="ignore", divide="ignore"):
        rayleigh = np.where(norms > 0, dirichlet / norms**2, 0.0)
    return DynamicsTrace(
        tau=float(tau),
        times=np.arange(steps + 1) * tau,
        snapshots=np.array(snaps),
        snapshot_times=np.array(snap_t),
        dirichlet=dirichlet,
        rayleigh=rayleigh,
        feature_norm=norms,
        energy=energy,
        renormalized=renormalize,
    )


@dataclass(frozen=True)
class RegimePrediction:
    regime: str
    margin: float
    lambda_max: float
    mu_min: float
    mu_max: float


def predict_regime(g, w, tol=1e-9):
    """Spectral regime test: HFD iff |mu_0| (lambda_max - 1) > mu_max."""
    spec = w if isinstance(w, WeightSpec) else WeightSpec(w)
    lam = g.spectrum.lambda_max
    mu0, mu_top = float(spec.mu[0]), float(spec.mu[-1])
    margin = abs(mu0) * (lam - 1.0) - mu_top
    if abs(margin) <= tol:
        regime = BOUNDARY
    else:
        regime = HFD if margin > 0 else LFD
    return RegimePrediction(regime, margin, lam, mu0, mu_top)


def classify_regime_empirical(trace, spectrum, eps=1e-2):
    """Label a trace by where its final Rayleigh quotient sits in the spectrum."""
    if len(trace.rayleigh) == 0:
        raise ValidationError("empty trace")
    final = float(trace.rayleigh[-1])
    if final < eps:
        return LFD
    if spectrum.eigenvalues[-1] - final < eps:
        return HFD
    return UNDECIDED


def barbell_graph(clique_n, path_len):
    """Two K_clique_n joined through a path of ``path_len`` extra nodes.

    Nodes ``0..k-1`` form the first clique, ``k..k+p-1`` the path and the rest
    the second clique; edge ``(k-1, k)`` is the first clique's boundary edge.
    """
    if clique_n < 3 or path_len < 1:
        raise ValidationError("barbell needs clique_n >= 3 and path_len >= 1")
    k, p = clique_n, path_len
    edges = [(i, j) for i in range(k) for j in range(i + 1, k)]
    edges += [(i - 1, i) for i in range(k, k + p)]
    edges.append((k + p - 1, k + p))
    off = k + p
    edges += [(off + i, off + j) for i in range(k) for j in range(i + 1, k)]
    return Graph(2 * k + p, edges)


def random_weight(rng, d, scale=1.0):
    """Symmetric Gaussian matrix, used for experiments and tests."""
    a = rng.standard_normal((d, d)) * scale
    return 0.5 * (a + a.T)
