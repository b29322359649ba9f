"""Random variates, log densities and small Cholesky algebra.

Every sampler module draws its randomness and evaluates its densities
through this module.  Densities are returned on the natural-log scale and
points outside the support evaluate to ``-inf`` so that Metropolis-Hastings
arithmetic rejects them without special casing.

Matrix-variate densities are parameterised in the standard way:

* ``Wishart(dof, scale)`` has mean ``dof * scale``.
* ``InvWishart(dof, scale)`` is the law of ``W^{-1}`` for
  ``W ~ Wishart(dof, scale^{-1})`` and has mean ``scale / (dof - r - 1)``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Union

import numpy as np
from scipy.linalg.lapack import dtrtrs
from scipy.special import gammaln, multigammaln

LOG_2PI = math.log(2.0 * math.pi)

__all__ = [
    "NotPositiveDefiniteError",
    "SpdChol",
    "RngStream",
    "rng_stream",
    "chol_factor",
    "mahalanobis_sq",
    "solve_lower",
    "Normal",
    "LogNormal",
    "Cauchy",
    "Beta",
    "InvGamma",
    "SymDirichlet",
    "MvNormal",
    "MvStudentT",
    "Wishart",
    "InvWishart",
    "log_pdf",
    "sample",
    "mvt_logpdf",
    "wishart_sample",
]


class NotPositiveDefiniteError(np.linalg.LinAlgError):
    """Raised when a matrix handed to :func:`chol_factor` is not SPD."""


# ---------------------------------------------------------------------------
# Cholesky algebra
# ---------------------------------------------------------------------------


def solve_lower(L, B) -> np.ndarray:
    """Solve ``L X = B`` for lower-triangular ``L`` (thin LAPACK call)."""
    B = np.asarray(B, dtype=float)
    vec = B.ndim == 1
    X, info = dtrtrs(L, B[:, None] if vec else B, lower=1)
    if info != 0:
        raise np.linalg.LinAlgError("singular triangular factor")
    return X[:, 0] if vec else X


@dataclass(frozen=True)
class SpdChol:
    """Lower Cholesky factor ``L`` of an SPD matrix ``A = L L'``."""

    lower: np.ndarray

    def __post_init__(self):
        L = np.asarray(self.lower, dtype=float)
        if L.ndim != 2 or L.shape[0] != L.shape[1]:
            raise ValueError(f"Cholesky factor must be square, got shape {L.shape}")
        if not np.all(np.isfinite(L)):
            raise ValueError("Cholesky factor has non-finite entries")
        if np.any(np.diag(L) <= 0.0):
            raise NotPositiveDefiniteError("Cholesky diagonal must be strictly positive")
        object.__setattr__(self, "lower", np.tril(L))

    @property
    def dim(self) -> int:
        return self.lower.shape[0]

    @property
    def logdet(self) -> float:
        """``log |A|`` computed as ``2 * sum(log diag(L))``."""
        return 2.0 * float(np.sum(np.log(np.diag(self.lower))))

    def matrix(self) -> np.ndarray:
        return self.lower @ self.lower.T

    def inverse(self) -> np.ndarray:
        Linv = solve_lower(self.lower, np.eye(self.dim))
        return Linv.T @ Linv

    @classmethod
    def identity(cls, dim: int) -> "SpdChol":
        return cls(np.eye(dim))


CholLike = Union[SpdChol, np.ndarray]


def _lower_of(c: CholLike) -> np.ndarray:
    return c.lower if isinstance(c, SpdChol) else np.asarray(c, dtype=float)


def chol_factor(A) -> SpdChol:
    """Cholesky factor of a symmetric matrix.

    Raises
    ------
    NotPositiveDefiniteError
        If ``A`` is not positive definite.  Proposal code relies on this to
        reject moves that leave the SPD cone.
    ValueError
        If ``A`` is not square, not finite, or visibly asymmetric.
    """
    A = np.atleast_2d(np.asarray(A, dtype=float))
    if A.shape[0] != A.shape[1]:
        raise ValueError(f"expected a square matrix, got shape {A.shape}")
    if not np.all(np.isfinite(A)):
        raise ValueError("matrix has non-finite entries")
    scale = max(1.0, float(np.max(np.abs(A))))
    if not np.allclose(A, A.T, rtol=0.0, atol=1e-10 * scale):
        raise ValueError("matrix is not symmetric")
    try:
        L = np.linalg.cholesky(0.5 * (A + A.T))
    except np.linalg.LinAlgError as exc:
        raise NotPositiveDefiniteError("matrix is not positive definite") from exc
    if np.any(np.diag(L) <= 0.0) or not np.all(np.isfinite(L)):
        raise NotPositiveDefiniteError("matrix is not positive definite")
    return SpdChol(L)


def mahalanobis_sq(x, mu, chol: CholLike) -> float:
    """``(x - mu)' A^{-1} (x - mu)`` for ``A = L L'`` via a triangular solve."""
    x = np.atleast_1d(np.asarray(x, dtype=float))
    mu = np.atleast_1d(np.asarray(mu, dtype=float))
    L = _lower_of(chol)
    if x.shape != mu.shape or L.shape != (x.size, x.size):
        raise ValueError(
            f"dimension mismatch: x{x.shape}, mu{mu.shape}, chol{L.shape}"
        )
    diff = x - mu
    if not np.isfinite(diff).all():
        raise ValueError("non-finite input to mahalanobis_sq")
    z = solve_lower(L, diff)
    return float(z @ z)


# ---------------------------------------------------------------------------
# Random streams
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class RngStream:
    """A reproducible substream keyed by ``(seed, stream_id)``.

    Streams use the counter-based Philox generator; distinct ``stream_id``
    values give independent keys derived through :class:`numpy.random.SeedSequence`.
    """

    seed: int
    stream_id: int = 0

    def generator(self) -> np.random.Generator:
        if self.stream_id < 0:
            raise ValueError("stream_id must be non-negative")
        ss = np.random.SeedSequence(int(self.seed), spawn_key=(int(self.stream_id),))
        key = ss.generate_state(2, dtype=np.uint64)
        return np.random.Generator(np.random.Philox(key=key))


def rng_stream(seed: int, stream_id: int = 0) -> np.random.Generator:
    return RngStream(seed, stream_id).generator()


# ---------------------------------------------------------------------------
# Scalar distributions
# ---------------------------------------------------------------------------


def _require_positive(**params):
    for name, value in params.items():
        arr = np.asarray(value, dtype=float)
        if not np.all(np.isfinite(arr)) or np.any(arr <= 0.0):
            raise ValueError(f"{name} must be strictly positive, got {value!r}")


@dataclass(frozen=True)
class Normal:
    mu: float
    sigma: float

    def __post_init__(self):
        _require_positive(sigma=self.sigma)

    def log_pdf(self, x) -> float:
        z = (float(x) - self.mu) / self.sigma
        return -0.5 * z * z - math.log(self.sigma) - 0.5 * LOG_2PI

    def sample(self, rng):
        return rng.normal(self.mu, self.sigma)


@dataclass(frozen=True)
class LogNormal:
    location: float
    scale: float

    def __post_init__(self):
        _require_positive(scale=self.scale)

    def log_pdf(self, x) -> float:
        x = float(x)
        if x <= 0.0:
            return -math.inf
        z = (math.log(x) - self.location) / self.scale
        return -0.5 * z * z - math.log(x * self.scale) - 0.5 * LOG_2PI

    def sample(self, rng):
        return rng.lognormal(self.location, self.scale)


@dataclass(frozen=True)
class Cauchy:
    location: float
    scale: float

    def __post_init__(self):
        _require_positive(scale=self.scale)

    def log_pdf(self, x) -> float:
        z = (float(x) - self.location) / self.scale
        return -math.log(math.pi * self.scale) - math.log1p(z * z)

    def sample(self, rng):
        return self.location + self.scale * rng.standard_cauchy()


@dataclass(frozen=True)
class Beta:
    a: float
    b: float

    def __post_init__(self):
        _require_positive(a=self.a, b=self.b)

    def log_pdf(self, x) -> float:
        x = float(x)
        if x < 0.0 or x > 1.0:
            return -math.inf
        lognorm = gammaln(self.a + self.b) - gammaln(self.a) - gammaln(self.b)
        out = float(lognorm)
        # boundary points: the a == 1 / b == 1 terms vanish instead of 0 * -inf
        if self.a != 1.0:
            out += -math.inf if x == 0.0 else (self.a - 1.0) * math.log(x)
        if self.b != 1.0:
            out += -math.inf if x == 1.0 else (self.b - 1.0) * math.log1p(-x)
        return out

    def sample(self, rng):
        return rng.beta(self.a, self.b)


@dataclass(frozen=True)
class InvGamma:
    a: float
    b: float

    def __post_init__(self):
        _require_positive(a=self.a, b=self.b)

    def log_pdf(self, x) -> float:
        x = float(x)
        if x <= 0.0:
            return -math.inf
        return float(
            self.a * math.log(self.b) - gammaln(self.a)
            - (self.a + 1.0) * math.log(x) - self.b / x
        )

    def sample(self, rng):
        return self.b / rng.gamma(self.a)


@dataclass(frozen=True)
class SymDirichlet:
    """Symmetric Dirichlet on the ``k``-simplex; points are full ``k``-vectors."""

    k: int
    delta: float

    def __post_init__(self):
        if int(self.k) != self.k or self.k < 1:
            raise ValueError(f"k must be a positive integer, got {self.k!r}")
        _require_positive(delta=self.delta)

    def log_pdf(self, x) -> float:
        w = np.asarray(x, dtype=float)
        if w.shape != (self.k,) or np.any(w < 0.0) or abs(w.sum() - 1.0) > 1e-10:
            return -math.inf
        if self.k == 1:
            return 0.0
        out = float(gammaln(self.k * self.delta) - self.k * gammaln(self.delta))
        if self.delta != 1.0:
            if np.any(w == 0.0):
                return math.inf if self.delta < 1.0 else -math.inf
            out += (self.delta - 1.0) * float(np.sum(np.log(w)))
        return out

    def sample(self, rng):
        g = rng.gamma(self.delta, size=self.k)
        return g / g.sum()


# ---------------------------------------------------------------------------
# Multivariate distributions
# ---------------------------------------------------------------------------


def mvt_logpdf(points, mean, chol: CholLike, dof: float) -> np.ndarray:
    """Vectorised multivariate-t log density for rows of ``points``.

    ``chol`` is the lower Cholesky factor of the scale matrix.
    """
    L = _lower_of(chol)
    r = L.shape[0]
    Y = np.atleast_2d(points) - mean
    Z = solve_lower(L, Y.T)
    maha = np.einsum("ij,ij->j", Z, Z)
    const = (
        gammaln(0.5 * (dof + r)) - gammaln(0.5 * dof)
        - 0.5 * r * math.log(dof * math.pi)
        - float(np.sum(np.log(np.diag(L))))
    )
    return const - 0.5 * (dof + r) * np.log1p(maha / dof)


def _mvn_logpdf(points, mean, L) -> np.ndarray:
    r = L.shape[0]
    Y = np.atleast_2d(points) - mean
    Z = solve_lower(L, Y.T)
    maha = np.einsum("ij,ij->j", Z, Z)
    return -0.5 * maha - float(np.sum(np.log(np.diag(L)))) - 0.5 * r * LOG_2PI


@dataclass(frozen=True)
class MvNormal:
    mean: np.ndarray
    chol: SpdChol  # of the covariance

    def log_pdf(self, x) -> float:
        x = np.asarray(x, dtype=float)
        if x.shape != np.shape(self.mean):
            raise ValueError("dimension mismatch")
        return float(_mvn_logpdf(x, self.mean, self.chol.lower)[0])

    def sample(self, rng):
        z = rng.standard_normal(self.chol.dim)
        return np.asarray(self.mean, dtype=float) + self.chol.lower @ z


@dataclass(frozen=True)
class MvStudentT:
    mean: np.ndarray
    chol: SpdChol  # of the scale matrix
    dof: float

    def __post_init__(self):
        _require_positive(dof=self.dof)

    def log_pdf(self, x) -> float:
        x = np.asarray(x, dtype=float)
        if x.shape != np.shape(self.mean):
            raise ValueError("dimension mismatch")
        return float(mvt_logpdf(x, self.mean, self.chol, self.dof)[0])

    def sample(self, rng):
        z = rng.standard_normal(self.chol.dim)
        g = rng.chisquare(self.dof)
        return np.asarray(self.mean, dtype=float) + (self.chol.lower @ z) / math.sqrt(g / self.dof)


def _as_chol(scale) -> SpdChol:
    return scale if isinstance(scale, SpdChol) else chol_factor(scale)


def _point_chol(x) -> SpdChol | None:
    if isinstance(x, SpdChol):
        return x
    try:
        return chol_factor(x)
    except (NotPositiveDefiniteError, ValueError):
        return None


def wishart_sample(dof: float, scale_lower: np.ndarray, rng) -> np.ndarray:
    """Bartlett-decomposition draw from ``Wishart(dof, L L')``."""
    r = scale_lower.shape[0]
    A = np.zeros((r, r))
    A[np.diag_indices(r)] = np.sqrt(rng.chisquare(dof - np.arange(r)))
    il = np.tril_indices(r, -1)
    A[il] = rng.standard_normal(len(il[0]))
    LA = scale_lower @ A
    return LA @ LA.T


@dataclass(frozen=True)
class Wishart:
    dof: float
    scale: SpdChol

    def __post_init__(self):
        object.__setattr__(self, "scale", _as_chol(self.scale))
        _require_positive(dof=self.dof)
        if self.dof <= self.scale.dim - 1:
            raise ValueError(f"Wishart dof must exceed dim - 1, got {self.dof}")

    def log_pdf(self, x) -> float:
        X = _point_chol(x)
        if X is None:
            return -math.inf
        r = self.scale.dim
        M = solve_lower(self.scale.lower, X.lower)
        return float(
            0.5 * (self.dof - r - 1.0) * X.logdet
            - 0.5 * np.sum(M * M)
            - 0.5 * self.dof * r * math.log(2.0)
            - 0.5 * self.dof * self.scale.logdet
            - multigammaln(0.5 * self.dof, r)
        )

    def sample(self, rng):
        return wishart_sample(self.dof, self.scale.lower, rng)


@dataclass(frozen=True)
class InvWishart:
    dof: float
    scale: SpdChol

    def __post_init__(self):
        object.__setattr__(self, "scale", _as_chol(self.scale))
        _require_positive(dof=self.dof)
        if self.dof <= self.scale.dim - 1:
            raise ValueError(f"InvWishart dof must exceed dim - 1, got {self.dof}")

    def log_pdf(self, x) -> float:
        X = _point_chol(x)
        if X is None:
            return -math.inf
        return invwishart_logpdf_chol(X.lower, self.dof, self.scale.lower, self.scale.logdet)

    def sample(self, rng):
        inv_scale_lower = np.linalg.cholesky(self.scale.inverse())
        W = wishart_sample(self.dof, inv_scale_lower, rng)
        out = np.linalg.inv(W)
        return 0.5 * (out + out.T)


def invwishart_logpdf_chol(x_lower, dof, scale_lower, scale_logdet) -> float:
    """Inverse-Wishart log density at ``X = x_lower x_lower'``.

    Works directly on Cholesky factors so callers moving in Cholesky
    coordinates never form or invert ``X``.
    """
    r = x_lower.shape[0]
    M = solve_lower(x_lower, scale_lower)
    x_logdet = 2.0 * float(np.sum(np.log(np.diag(x_lower))))
    return float(
        0.5 * dof * scale_logdet
        - 0.5 * (dof + r + 1.0) * x_logdet
        - 0.5 * np.sum(M * M)
        - 0.5 * dof * r * math.log(2.0)
        - multigammaln(0.5 * dof, r)
    )


DistSpec = Union[
    Normal, LogNormal, Cauchy, Beta, InvGamma, SymDirichlet,
    MvNormal, MvStudentT, Wishart, InvWishart,
]


def log_pdf(d: DistSpec, x) -> float:
    """Natural-log density of ``x`` under ``d`` (``-inf`` off the support)."""
    return d.log_pdf(x)


def sample(d: DistSpec, rng: np.random.Generator):
    return d.sample(rng)
