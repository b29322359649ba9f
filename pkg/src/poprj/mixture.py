"""Multivariate-t mixture model: likelihood, hierarchical prior and preprocessing.

The component density is a multivariate t with known degrees of freedom.
Priors follow the usual hierarchical set-up for unknown-``k`` mixtures:

* means ``mu_j ~ N(xi, kappa^{-1})``;
* scale matrices ``Lambda_j | Psi ~ IW(2 alpha', 2 Psi)`` (standard
  parameterisation, mean ``2 Psi / (2 alpha' - q - 1)``);
* ``Psi ~ W(2 g, (2 h)^{-1})``;
* weights symmetric Dirichlet(``delta``) given ``k``, and ``k`` uniform on
  ``{1, ..., k_max}``.

Samplers move ``Lambda_j`` through its lower Cholesky factor ``Phi_j``.
:func:`log_prior` is a density in ``Lambda`` coordinates; the log-Jacobian
of ``Phi -> Phi Phi'`` is supplied separately by :func:`chol_log_jacobian` and
:func:`sampler_log_target` adds it.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy.special import gammaln, multigammaln

from .statcore import (
    LOG_2PI,
    InvWishart,
    Wishart,
    SpdChol,
    chol_factor,
    invwishart_logpdf_chol,
    mvt_logpdf,
)

__all__ = [
    "Dataset",
    "Hyperparams",
    "MixtureState",
    "component_log_densities",
    "log_likelihood",
    "log_prior",
    "tempered_log_target",
    "sampler_log_target",
    "chol_log_jacobian",
    "mean_log_prior",
    "chol_log_prior",
    "weights_log_prior",
    "psi_log_prior",
    "default_hyperparams",
    "kmeans",
    "pca_project",
    "preprocess",
    "random_state",
    "loglik_from_logf",
]


# ---------------------------------------------------------------------------
# Data and parameters
# ---------------------------------------------------------------------------


@dataclass
class Dataset:
    """Observations as an ``(n, q)`` matrix."""

    points: np.ndarray

    def __post_init__(self):
        pts = np.asarray(self.points, dtype=float)
        if pts.ndim == 1:
            pts = pts[:, None]
        if pts.ndim != 2 or pts.shape[0] < 1:
            raise ValueError("points must be a non-empty (n, q) matrix")
        if not np.all(np.isfinite(pts)):
            raise ValueError("points must be finite")
        self.points = pts

    @property
    def n(self) -> int:
        return self.points.shape[0]

    @property
    def q(self) -> int:
        return self.points.shape[1]

    @property
    def ranges(self) -> np.ndarray:
        return self.points.max(axis=0) - self.points.min(axis=0)

    @property
    def midpoints(self) -> np.ndarray:
        return 0.5 * (self.points.max(axis=0) + self.points.min(axis=0))

    @classmethod
    def from_csv(cls, path) -> "Dataset":
        """Headerless comma-separated file, one observation per row."""
        return cls(np.loadtxt(path, delimiter=",", ndmin=2))

    def to_csv(self, path) -> None:
        np.savetxt(path, self.points, delimiter=",", fmt="%.17g")


@dataclass
class Hyperparams:
    xi: np.ndarray
    kappa: np.ndarray
    g: float
    h: np.ndarray
    alpha_prime: float = 3.0
    delta: float = 1.0
    dof: float = 4.0
    k_max: int = 20

    def __post_init__(self):
        self.xi = np.asarray(self.xi, dtype=float)
        self.kappa = np.atleast_2d(np.asarray(self.kappa, dtype=float))
        self.h = np.atleast_2d(np.asarray(self.h, dtype=float))
        for name in ("g", "alpha_prime", "delta", "dof"):
            if not getattr(self, name) > 0:
                raise ValueError(f"{name} must be positive")
        if int(self.k_max) != self.k_max or self.k_max < 1:
            raise ValueError("k_max must be a positive integer")
        self.k_max = int(self.k_max)
        q = self.xi.size
        if self.kappa.shape != (q, q) or self.h.shape != (q, q):
            raise ValueError("kappa and h must be q x q")
        # cached factorisations reused by every prior evaluation
        self._kappa_chol = chol_factor(self.kappa)
        self._h_chol = chol_factor(self.h)

    @property
    def q(self) -> int:
        return self.xi.size

    @property
    def alpha(self) -> float:
        return self.alpha_prime + 0.5 * (self.q + 1)

    @property
    def lambda_dof(self) -> float:
        """Standard inverse-Wishart dof of ``Lambda_j`` (``2 alpha - q - 1``)."""
        return 2.0 * self.alpha_prime

    @property
    def psi_dof(self) -> float:
        return 2.0 * self.g


@dataclass
class MixtureState:
    """Parameters of one chain.

    ``chols[j]`` is the lower Cholesky factor ``Phi_j`` of ``Lambda_j``.
    ``logf`` optionally caches the ``(n, k)`` matrix of component log
    densities for the data set the state was last evaluated on.
    """

    weights: np.ndarray
    means: np.ndarray
    chols: np.ndarray
    psi: np.ndarray
    logf: np.ndarray | None = field(default=None, repr=False, compare=False)

    def __post_init__(self):
        self.weights = np.asarray(self.weights, dtype=float).ravel()
        self.means = np.atleast_2d(np.asarray(self.means, dtype=float))
        self.chols = np.asarray(self.chols, dtype=float)
        if self.chols.ndim == 2:
            self.chols = self.chols[None]
        self.psi = np.atleast_2d(np.asarray(self.psi, dtype=float))

    @property
    def k(self) -> int:
        return self.weights.size

    @property
    def q(self) -> int:
        return self.means.shape[1]

    def lambdas(self) -> np.ndarray:
        return self.chols @ np.swapaxes(self.chols, 1, 2)

    def chol(self, j: int) -> SpdChol:
        return SpdChol(self.chols[j])

    def copy(self) -> "MixtureState":
        return MixtureState(
            self.weights.copy(), self.means.copy(), self.chols.copy(), self.psi.copy(),
            None if self.logf is None else self.logf.copy(),
        )

    def permuted(self, order) -> "MixtureState":
        order = np.asarray(order)
        return MixtureState(
            self.weights[order], self.means[order], self.chols[order], self.psi.copy(),
            None if self.logf is None else self.logf[:, order],
        )

    def validate(self, k_max: int | None = None, tol: float = 1e-12) -> None:
        k, q = self.k, self.q
        if k < 1 or (k_max is not None and k > k_max):
            raise ValueError(f"k={k} out of range")
        if self.means.shape != (k, q) or self.chols.shape != (k, q, q) or self.psi.shape != (q, q):
            raise ValueError("inconsistent state shapes")
        if np.any(self.weights < 0) or abs(self.weights.sum() - 1.0) > tol:
            raise ValueError("weights must lie on the simplex")
        if np.any(np.diagonal(self.chols, axis1=1, axis2=2) <= 0):
            raise ValueError("Cholesky diagonals must be positive")
        if np.any(np.triu(self.chols, 1) != 0):
            raise ValueError("Cholesky factors must be lower triangular")
        chol_factor(self.psi)

    def same_as(self, other: "MixtureState", atol: float = 0.0) -> bool:
        return (
            self.k == other.k
            and np.allclose(self.weights, other.weights, rtol=0, atol=atol)
            and np.allclose(self.means, other.means, rtol=0, atol=atol)
            and np.allclose(self.chols, other.chols, rtol=0, atol=atol)
            and np.allclose(self.psi, other.psi, rtol=0, atol=atol)
        )


# ---------------------------------------------------------------------------
# Likelihood
# ---------------------------------------------------------------------------


def component_log_densities(data: Dataset, means, chols, dof: float) -> np.ndarray:
    """``(n, k)`` matrix of multivariate-t log densities."""
    means = np.atleast_2d(means)
    out = np.empty((data.n, means.shape[0]))
    for j in range(means.shape[0]):
        out[:, j] = mvt_logpdf(data.points, means[j], chols[j], dof)
    return out


def loglik_from_logf(logf: np.ndarray, weights: np.ndarray) -> float:
    """``sum_i log sum_j w_j exp(logf_ij)``, stabilised by the row maximum."""
    top = logf.max(axis=1)
    top = np.where(np.isfinite(top), top, 0.0)
    with np.errstate(divide="ignore", under="ignore"):
        return float(np.sum(top + np.log(np.exp(logf - top[:, None]) @ weights)))


def log_likelihood(data: Dataset, s: MixtureState, dof: float = 4.0) -> float:
    """Observed-data log likelihood ``sum_i log sum_j w_j t(y_i; mu_j, Lambda_j, dof)``."""
    if data.q != s.q:
        raise ValueError(f"data dimension {data.q} != state dimension {s.q}")
    return loglik_from_logf(component_log_densities(data, s.means, s.chols, dof), s.weights)


# ---------------------------------------------------------------------------
# Prior
# ---------------------------------------------------------------------------


def chol_log_jacobian(chol) -> float:
    """``log |d(Phi Phi')/d Phi| = r log 2 + sum_l (r - l + 1) log phi_ll``."""
    d = np.diag(np.asarray(chol))
    r = d.size
    return r * math.log(2.0) + float(np.dot(np.arange(r, 0, -1), np.log(d)))


def mean_log_prior(mean, h: Hyperparams) -> float:
    diff = np.asarray(mean) - h.xi
    L = h._kappa_chol.lower
    z = L.T @ diff
    return float(-0.5 * z @ z + 0.5 * h._kappa_chol.logdet - 0.5 * h.q * LOG_2PI)


def _psi_scale(psi) -> SpdChol:
    return chol_factor(2.0 * np.asarray(psi))


def chol_log_prior(chol, h: Hyperparams, psi_scale: SpdChol, *, jacobian: bool = False) -> float:
    """Inverse-Wishart log density of ``Phi Phi'``, optionally plus the Jacobian.

    ``psi_scale`` is the Cholesky factor of ``2 Psi``.
    """
    out = invwishart_logpdf_chol(np.asarray(chol), h.lambda_dof, psi_scale.lower, psi_scale.logdet)
    if jacobian:
        out += chol_log_jacobian(chol)
    return out


def weights_log_prior(weights, delta: float) -> float:
    """Symmetric Dirichlet density of the first ``k - 1`` weights."""
    w = np.asarray(weights)
    k = w.size
    if np.any(w < 0):
        return -math.inf
    if k == 1:
        return 0.0
    out = float(gammaln(k * delta) - k * gammaln(delta))
    if delta != 1.0:
        with np.errstate(divide="ignore"):
            out += (delta - 1.0) * float(np.sum(np.log(w)))
    return out


def psi_log_prior(psi, h: Hyperparams) -> float:
    """``W(2g, (2h)^{-1})`` log density."""
    try:
        P = chol_factor(psi)
    except (np.linalg.LinAlgError, ValueError):
        return -math.inf
    q, nu = h.q, h.psi_dof
    # scale^{-1} = 2h
    tr = 2.0 * float(np.sum(h.h * P.matrix()))
    logdet_scale = -(q * math.log(2.0) + h._h_chol.logdet)
    return float(
        0.5 * (nu - q - 1.0) * P.logdet - 0.5 * tr
        - 0.5 * nu * q * math.log(2.0) - 0.5 * nu * logdet_scale - multigammaln(0.5 * nu, q)
    )


def log_prior(s: MixtureState, h: Hyperparams) -> float:
    """Joint prior density of ``(w, mu, Lambda, Psi, k)`` in ``Lambda`` coordinates."""
    if s.k < 1 or s.k > h.k_max:
        raise ValueError(f"k={s.k} outside 1..{h.k_max}")
    if s.q != h.q:
        raise ValueError("state and hyperparameter dimensions differ")
    psi_scale = _psi_scale(s.psi)
    out = -math.log(h.k_max)
    out += weights_log_prior(s.weights, h.delta)
    out += psi_log_prior(s.psi, h)
    for j in range(s.k):
        out += mean_log_prior(s.means[j], h) + chol_log_prior(s.chols[j], h, psi_scale)
    return out


def tempered_log_target(data: Dataset, s: MixtureState, h: Hyperparams, zeta: float,
                        *, allow_zero: bool = False) -> float:
    """``zeta * log_likelihood + log_prior``.

    ``allow_zero=True`` admits ``zeta = 0`` (the prior), for prior-recovery
    checks; the likelihood is then not evaluated.
    """
    lo_ok = zeta >= 0.0 if allow_zero else zeta > 0.0
    if not (lo_ok and zeta <= 1.0):
        raise ValueError(f"zeta must lie in (0, 1], got {zeta}")
    lp = log_prior(s, h)
    if zeta == 0.0:
        return lp
    return zeta * log_likelihood(data, s, h.dof) + lp


def sampler_log_target(data: Dataset, s: MixtureState, h: Hyperparams, zeta: float) -> float:
    """Tempered target as a density in ``(mu, Phi)`` coordinates.

    This is the density that Metropolis-Hastings moves on Cholesky factors
    must leave invariant: :func:`tempered_log_target` plus the Jacobian of
    every ``Phi_j -> Lambda_j``.  ``zeta = 0`` is accepted.
    """
    out = tempered_log_target(data, s, h, zeta, allow_zero=True)
    return out + sum(chol_log_jacobian(c) for c in s.chols)


# ---------------------------------------------------------------------------
# Hyperparameters and preprocessing
# ---------------------------------------------------------------------------


def default_hyperparams(data: Dataset, *, k_max: int = 20, dof: float = 4.0,
                        alpha_prime: float = 3.0) -> Hyperparams:
    """Data-dependent defaults: midpoint location, range-scaled precisions."""
    R = data.ranges
    if np.any(R <= 0):
        raise ValueError("every dimension needs a positive range")
    q = data.q
    alpha = alpha_prime + 0.5 * (q + 1)
    return Hyperparams(
        xi=data.midpoints,
        kappa=np.diag(1.0 / R**2),
        g=0.5 * q,
        h=np.diag(100.0 * q / (2.0 * alpha * R**2)),
        alpha_prime=alpha_prime,
        delta=1.0,
        dof=dof,
        k_max=k_max,
    )


def kmeans(raw, l: int, rng, max_iter: int = 100, tol: float = 1e-8) -> np.ndarray:
    """Lloyd's algorithm with k-means++ seeding; returns ``(l, r)`` centroids.

    Iteration stops when the relative decrease in inertia drops below
    ``tol`` or after ``max_iter`` rounds.  A cluster that empties is
    re-seeded at the point currently farthest from its centroid.
    """
    X = np.asarray(raw, dtype=float)
    n = X.shape[0]
    if not 1 <= l <= n:
        raise ValueError(f"need 1 <= l <= n, got l={l}, n={n}")
    centres = np.empty((l, X.shape[1]))
    centres[0] = X[rng.integers(n)]
    d2 = np.sum((X - centres[0]) ** 2, axis=1)
    for c in range(1, l):
        total = d2.sum()
        idx = rng.choice(n, p=d2 / total) if total > 0 else rng.integers(n)
        centres[c] = X[idx]
        d2 = np.minimum(d2, np.sum((X - centres[c]) ** 2, axis=1))

    prev = math.inf
    for _ in range(max_iter):
        dist = ((X[:, None, :] - centres[None, :, :]) ** 2).sum(axis=2)
        labels = dist.argmin(axis=1)
        mind = dist[np.arange(n), labels]
        for c in range(l):
            members = labels == c
            if members.any():
                centres[c] = X[members].mean(axis=0)
            else:
                far = int(np.argmax(mind))
                centres[c] = X[far]
                labels[far] = c
                mind[far] = 0.0
        inertia = float(((X - centres[labels]) ** 2).sum())
        if prev < math.inf and prev - inertia <= tol * max(prev, 1e-300):
            break
        prev = inertia
    return centres


def pca_project(points, q: int) -> tuple[np.ndarray, np.ndarray]:
    """Project centred rows onto the top ``q`` principal axes.

    Returns ``(scores, eigenvalues)`` with eigenvalues in non-increasing
    order.  Each axis is signed so its largest-magnitude loading is
    non-negative.
    """
    P = np.asarray(points, dtype=float)
    if not 1 <= q <= P.shape[1]:
        raise ValueError(f"need 1 <= q <= r, got q={q}, r={P.shape[1]}")
    centred = P - P.mean(axis=0)
    cov = centred.T @ centred / max(P.shape[0] - 1, 1)
    vals, vecs = np.linalg.eigh(cov)
    order = np.argsort(vals)[::-1]
    vals, vecs = vals[order], vecs[:, order]
    lead = vecs[np.argmax(np.abs(vecs), axis=0), np.arange(vecs.shape[1])]
    vecs = vecs * np.where(lead < 0, -1.0, 1.0)
    return centred @ vecs[:, :q], vals


def preprocess(raw, l: int, q: int, rng) -> Dataset:
    """Reduce ``n x r`` data to ``l`` K-means centroids in ``q`` principal dimensions."""
    raw = np.asarray(raw, dtype=float)
    if raw.ndim != 2:
        raise ValueError("raw must be a matrix")
    n, r = raw.shape
    if l > n:
        raise ValueError(f"l={l} exceeds n={n}")
    if q > r:
        raise ValueError(f"q={q} exceeds r={r}")
    centres = raw if l == n else kmeans(raw, l, rng)
    scores, _ = pca_project(centres, q)
    return Dataset(scores)


def random_state(h: Hyperparams, k: int, rng, psi=None) -> MixtureState:
    """Draw a state from the prior given ``k`` (and optionally ``Psi``)."""
    q = h.q
    if psi is None:
        psi = Wishart(h.psi_dof, np.linalg.inv(2.0 * h.h)).sample(rng)
    w = rng.gamma(h.delta, size=k)
    w /= w.sum()
    cov = np.linalg.inv(h.kappa)
    means = rng.multivariate_normal(h.xi, cov, size=k)
    iw = InvWishart(h.lambda_dof, 2.0 * psi)
    chols = np.array([np.linalg.cholesky(iw.sample(rng)) for _ in range(k)])
    return MixtureState(w, means.reshape(k, q), chols, psi)

