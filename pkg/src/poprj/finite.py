"""Exact finite-state analysis of MCMC kernels for Bayesian variable selection.

The regression model has an intercept plus ``k_max`` candidate covariates,
each switched in or out by a binary indicator.  With the conjugate
normal-inverse-gamma prior the coefficients and noise variance integrate out,
leaving a target on the ``2**k_max`` indicator vectors that can be enumerated.
On that space every kernel is a matrix, so minorization constants, Dobrushin
coefficients and total-variation decay can be computed exactly rather than
estimated.

State ``s`` (an integer) encodes the indicator vector by its bits: covariate
``j`` is included when bit ``j`` of ``s`` is set.  Product-space states for
two chains use ``s1 * S + s2``, matching :func:`numpy.kron`.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field

import numpy as np
from scipy.linalg import cho_factor, cho_solve
from scipy.special import gammaln

__all__ = [
    "VarselModel",
    "FiniteKernel",
    "MinorizationPair",
    "ConditionNotMetError",
    "enumerate_states",
    "marginal_log_likelihood",
    "varsel_log_prior",
    "log_target_vector",
    "exact_posterior",
    "build_flip_kernel",
    "simulate_flip_chain",
    "minorization_pair",
    "population_minorization_constant",
    "tv_bound_iterations",
    "best_vanilla_bound",
    "exchange_kernel",
    "build_population_pair_kernel",
    "dobrushin",
    "mixing_condition_eps",
    "tv_distance",
    "Prop1Report",
    "prop1_verify",
    "theorem1_nu_star",
    "Theorem1Report",
    "theorem1_verify",
    "mh_kernel",
    "synthetic_bimodal_model",
    "synthetic_sparse_model",
    "save_varsel_csv",
    "load_varsel_csv",
    "fixture_path",
    "tempered_pair_toy",
]

MAX_ENUM_KMAX = 20
MAX_PRODUCT_ENTRIES = 10**6


class ConditionNotMetError(ValueError):
    """The mixing condition required by the contraction bound does not hold."""


# ---------------------------------------------------------------------------
# Model
# ---------------------------------------------------------------------------


@dataclass
class VarselModel:
    """Conjugate linear regression with binary inclusion indicators.

    Coefficients ``(intercept, selected slopes)`` have prior
    ``N(prior_mean * 1, sigma^2 * prior_scale * I)`` and ``sigma^2 ~ IG(a, b)``.

    Parameters
    ----------
    X : (n, k_max) array
        Candidate covariates; an intercept column is added internally.
    y : (n,) array
    prior_mean, prior_scale : float
        Rules producing ``m`` and ``V`` for every submodel.
    a, b : float
        Inverse-gamma shape and scale.
    """

    X: np.ndarray
    y: np.ndarray
    prior_mean: float = 0.0
    prior_scale: float = 100.0
    a: float = 0.01
    b: float = 0.01

    def __post_init__(self):
        self.X = np.atleast_2d(np.asarray(self.X, dtype=float))
        self.y = np.asarray(self.y, dtype=float).ravel()
        if self.X.shape[0] != self.y.size or self.y.size < 1:
            raise ValueError("X and y must have the same number of rows (>= 1)")
        if self.a <= 0 or self.b <= 0 or self.prior_scale <= 0:
            raise ValueError("a, b and prior_scale must be positive")

    @property
    def n(self) -> int:
        return self.y.size

    @property
    def k_max(self) -> int:
        return self.X.shape[1]

    def design(self, theta) -> np.ndarray:
        theta = np.asarray(theta, dtype=bool)
        return np.column_stack([np.ones(self.n), self.X[:, theta]])

    def prior_moments(self, k: int) -> tuple[np.ndarray, np.ndarray]:
        return np.full(k + 1, self.prior_mean), self.prior_scale * np.eye(k + 1)


def enumerate_states(k_max: int) -> np.ndarray:
    """All ``2**k_max`` indicator vectors as rows; row ``s`` has the bits of ``s``."""
    if k_max > MAX_ENUM_KMAX:
        raise ValueError(f"k_max={k_max} exceeds the enumeration guard {MAX_ENUM_KMAX}")
    s = np.arange(2**k_max)
    return ((s[:, None] >> np.arange(k_max)) & 1).astype(bool)


def marginal_log_likelihood(model: VarselModel, theta) -> float:
    """Log marginal density of ``y`` given the inclusion vector ``theta``."""
    theta = np.asarray(theta, dtype=bool)
    if theta.shape != (model.k_max,):
        raise ValueError("theta length must equal k_max")
    Z = model.design(theta)
    m, V = model.prior_moments(int(theta.sum()))
    Vinv = np.linalg.inv(V)
    prec_post = Vinv + Z.T @ Z
    try:
        cf = cho_factor(prec_post, lower=True)
    except np.linalg.LinAlgError as exc:
        raise np.linalg.LinAlgError("posterior precision is singular") from exc
    rhs = Vinv @ m + Z.T @ model.y
    m_post = cho_solve(cf, rhs)
    logdet_prec_post = 2.0 * np.sum(np.log(np.diag(cf[0])))
    logdet_V = np.linalg.slogdet(V)[1]
    a_post = model.a + 0.5 * model.n
    quad = model.y @ model.y + m @ Vinv @ m - m_post @ prec_post @ m_post
    b_post = model.b + 0.5 * quad
    if b_post <= 0:
        raise np.linalg.LinAlgError("non-positive posterior scale")
    return float(
        -0.5 * model.n * math.log(2.0 * math.pi)
        - 0.5 * (logdet_prec_post + logdet_V)
        + model.a * math.log(model.b) - a_post * math.log(b_post)
        + gammaln(a_post) - gammaln(model.a)
    )


def varsel_log_prior(theta) -> float:
    """Uniform on model size, then uniform within size."""
    theta = np.asarray(theta, dtype=bool)
    k_max, k = theta.size, int(theta.sum())
    return -math.log(k_max + 1) - math.log(math.comb(k_max, k))


def log_target_vector(model: VarselModel, zeta: float = 1.0) -> np.ndarray:
    """Unnormalised ``zeta * loglik + logprior`` over all enumerated states."""
    if not 0.0 <= zeta <= 1.0:
        raise ValueError("zeta must lie in [0, 1]")
    states = enumerate_states(model.k_max)
    prior = np.array([varsel_log_prior(t) for t in states])
    if zeta == 0.0:
        return prior
    ll = np.array([marginal_log_likelihood(model, t) for t in states])
    return zeta * ll + prior


def _normalise_log(logp: np.ndarray) -> np.ndarray:
    p = np.exp(logp - logp.max())
    return p / p.sum()


def exact_posterior(model: VarselModel, zeta: float = 1.0) -> np.ndarray:
    """Tempered posterior over states, normalised with a max shift."""
    return _normalise_log(log_target_vector(model, zeta))


# ---------------------------------------------------------------------------
# Kernels
# ---------------------------------------------------------------------------


@dataclass
class FiniteKernel:
    """Row-stochastic matrix over an enumerated state space.

    ``target`` is the distribution the kernel was built to leave invariant,
    when known.
    """

    matrix: np.ndarray
    target: np.ndarray | None = None
    states: np.ndarray | None = None

    def __post_init__(self):
        P = np.asarray(self.matrix, dtype=float)
        if P.ndim != 2 or P.shape[0] != P.shape[1]:
            raise ValueError("kernel matrix must be square")
        if np.any(P < -1e-15) or not np.allclose(P.sum(axis=1), 1.0, atol=1e-12, rtol=0):
            raise ValueError("kernel matrix must be row-stochastic")
        self.matrix = np.clip(P, 0.0, None)

    @property
    def size(self) -> int:
        return self.matrix.shape[0]

    def power(self, n: int) -> "FiniteKernel":
        if n < 0:
            raise ValueError("power must be non-negative")
        return FiniteKernel(np.linalg.matrix_power(self.matrix, n), self.target, self.states)

    def stationary(self) -> np.ndarray:
        """Left eigenvector for the eigenvalue closest to one, normalised."""
        w, v = np.linalg.eig(self.matrix.T)
        vec = np.real(v[:, np.argmin(np.abs(w - 1.0))])
        return vec / vec.sum()


def mh_kernel(target, proposal) -> np.ndarray:
    """Metropolis-Hastings matrix for a finite target and proposal matrix."""
    target = np.asarray(target, dtype=float)
    Q = np.asarray(proposal, dtype=float)
    with np.errstate(divide="ignore", invalid="ignore"):
        ratio = (target[None, :] * Q.T) / (target[:, None] * Q)
    acc = np.where(Q > 0, np.minimum(1.0, np.nan_to_num(ratio, nan=0.0, posinf=1.0)), 0.0)
    P = Q * acc
    np.fill_diagonal(P, 0.0)
    P[np.diag_indices_from(P)] = 1.0 - P.sum(axis=1)
    return P


def build_flip_kernel(model: VarselModel, zeta: float = 1.0, *, sweep: bool = False) -> FiniteKernel:
    """Exact single-flip Metropolis kernel.

    A coordinate is picked uniformly and flipped; the move is accepted with
    ``min(1, exp(zeta * dloglik + dlogprior))``.  With ``sweep=True`` the
    kernel is raised to the ``k_max``-th power, one proposal per coordinate
    on average.
    """
    if not 0.0 < zeta <= 1.0:
        raise ValueError("zeta must lie in (0, 1]")
    k = model.k_max
    logt = log_target_vector(model, zeta)
    S = logt.size
    idx = np.arange(S)
    P = np.zeros((S, S))
    for j in range(k):
        nb = idx ^ (1 << j)
        P[idx, nb] = np.minimum(1.0, np.exp(logt[nb] - logt)) / k
    P[idx, idx] = 1.0 - P.sum(axis=1)
    K = FiniteKernel(P, _normalise_log(logt), enumerate_states(k))
    return K.power(k) if sweep else K


def simulate_flip_chain(model: VarselModel, zeta: float, n_sweeps: int, rng,
                        start: int = 0, burn_in: int = 0, *, with_accepts: bool = False):
    """Run the single-flip sampler and return the state index after every sweep.

    With ``with_accepts`` the number of accepted flips in each recorded
    sweep is returned as well (each sweep proposes ``k_max`` flips).
    """
    k = model.k_max
    logt = log_target_vector(model, zeta)
    n_steps = (n_sweeps + burn_in) * k
    coords = rng.integers(0, k, size=n_steps)
    logu = np.log(rng.random(n_steps))
    out = np.empty(n_sweeps, dtype=np.int64)
    accepts = np.zeros(n_sweeps, dtype=np.int64)
    s = start
    for t in range(n_steps):
        prop = s ^ (1 << int(coords[t]))
        sweep_idx = t // k - burn_in
        if logu[t] < logt[prop] - logt[s]:
            s = prop
            if sweep_idx >= 0:
                accepts[sweep_idx] += 1
        if (t + 1) % k == 0 and sweep_idx >= 0:
            out[sweep_idx] = s
    return (out, accepts) if with_accepts else out


def exchange_kernel(pi1, pi2) -> FiniteKernel:
    """Exact two-chain exchange kernel on the product space."""
    pi1 = np.asarray(pi1, dtype=float)
    pi2 = np.asarray(pi2, dtype=float)
    S = pi1.size
    a, b = np.divmod(np.arange(S * S), S)
    with np.errstate(divide="ignore", invalid="ignore"):
        rho = np.minimum(1.0, (pi1[b] * pi2[a]) / (pi1[a] * pi2[b]))
    rho = np.nan_to_num(rho, nan=0.0)
    E = np.zeros((S * S, S * S))
    swapped = b * S + a
    E[np.arange(S * S), swapped] += rho
    E[np.arange(S * S), np.arange(S * S)] += 1.0 - rho
    return FiniteKernel(E, np.kron(pi1, pi2))


def build_population_pair_kernel(K1: FiniteKernel, K2: FiniteKernel, sweeps_each: int) -> FiniteKernel:
    """``(K1 x K2)^s`` then an exchange then ``(K1 x K2)^s`` on the product space."""
    if K1.size != K2.size:
        raise ValueError("both kernels must share the state enumeration")
    if (K1.size**2) ** 2 > MAX_PRODUCT_ENTRIES:
        raise ValueError(
            f"product kernel would have {(K1.size**2)**2} entries (> {MAX_PRODUCT_ENTRIES})"
        )
    if K1.target is None or K2.target is None:
        raise ValueError("kernels must carry their target distributions")
    E = exchange_kernel(K1.target, K2.target).matrix
    KM = np.linalg.matrix_power(np.kron(K1.matrix, K2.matrix), sweeps_each)
    return FiniteKernel(KM @ E @ KM, np.kron(K1.target, K2.target))


# ---------------------------------------------------------------------------
# Minorization and rates
# ---------------------------------------------------------------------------


@dataclass
class MinorizationPair:
    """Certificate ``K^n0(i, j) >= epsilon * nu[j]`` for all ``i, j``."""

    n0: int
    epsilon: float
    nu: np.ndarray

    def verify(self, K: FiniteKernel, atol: float = 1e-12) -> bool:
        Kn = np.linalg.matrix_power(K.matrix, self.n0)
        return bool(np.all(Kn >= self.epsilon * self.nu[None, :] - atol))


def minorization_pair(K: FiniteKernel, n: int) -> MinorizationPair:
    """Column-minimum minorization of ``K^n``."""
    if n < 1:
        raise ValueError("n must be >= 1")
    Kn = np.linalg.matrix_power(K.matrix, n)
    colmin = Kn.min(axis=0)
    eps = float(colmin.sum())
    nu = colmin / eps if eps > 0 else np.zeros_like(colmin)
    return MinorizationPair(n, eps, nu)


def population_minorization_constant(pair: MinorizationPair, pi1, pi2) -> tuple[float, float, float]:
    """Constant for the two-chain exchange composite.

    Returns
    -------
    (epsilon_star, phi, rho1)
        ``rho1 = max pi1/pi2``, ``phi = sum nu * min(1, pi1 / (pi2 * rho1))``
        and ``epsilon_star = epsilon**2 * phi``.
    """
    pi1 = np.asarray(pi1, dtype=float)
    pi2 = np.asarray(pi2, dtype=float)
    if np.any((pi1 > 0) != (pi2 > 0)):
        raise ValueError("pi1 and pi2 must have the same support")
    sup = pi2 > 0
    ratio = np.zeros_like(pi1)
    ratio[sup] = pi1[sup] / pi2[sup]
    rho1 = float(ratio.max())
    phi = float(np.sum(pair.nu * np.minimum(1.0, ratio / rho1)))
    return pair.epsilon**2 * phi, phi, rho1


def tv_bound_iterations(n0: float, epsilon: float, delta: float = 0.01) -> int:
    """Iterations after which ``(1 - epsilon)^(n / n0)`` is below ``delta``.

    The count is ``floor(n0 * log(delta) / log(1 - epsilon))``.  ``n0`` may be
    fractional, which arises when a kernel is rescaled for CPU cost.
    """
    if not 0.0 < epsilon < 1.0:
        raise ValueError("epsilon must lie strictly between 0 and 1")
    if not 0.0 < delta < 1.0:
        raise ValueError("delta must lie strictly between 0 and 1")
    if n0 <= 0:
        raise ValueError("n0 must be positive")
    raw = n0 * math.log(delta) / math.log1p(-epsilon)
    # absorb round-off so that exact integers are not pushed up or down
    return int(math.floor(raw + 1e-9 * max(1.0, raw)))


def best_vanilla_bound(K: FiniteKernel, n0_grid, delta: float = 0.01, cpu_ratio: float = 1.0):
    """Smallest ``M_delta`` over candidate ``n0`` for a single kernel.

    ``cpu_ratio`` applications of ``K`` count as one step, so the effective
    ``n0`` is ``n0 / cpu_ratio``.

    Returns
    -------
    (M, n0, epsilon) for the best grid point, or ``(inf, None, 0.0)`` when
    no grid point gives a positive epsilon.
    """
    best = (math.inf, None, 0.0)
    Kn = np.eye(K.size)
    prev = 0
    for n0 in sorted(n0_grid):
        Kn = Kn @ np.linalg.matrix_power(K.matrix, n0 - prev)
        prev = n0
        eps = float(Kn.min(axis=0).sum())
        if 0.0 < eps < 1.0:
            M = tv_bound_iterations(n0 / cpu_ratio, eps, delta)
            if M < best[0]:
                best = (M, n0, eps)
    return best


def dobrushin(K: FiniteKernel | np.ndarray) -> float:
    """Largest total-variation distance between two rows."""
    P = K.matrix if isinstance(K, FiniteKernel) else np.asarray(K, dtype=float)
    out = 0.0
    for i in range(P.shape[0] - 1):
        d = 0.5 * np.abs(P[i + 1:] - P[i]).sum(axis=1)
        out = max(out, float(d.max()))
    return out


def mixing_condition_eps(K: FiniteKernel | np.ndarray) -> float:
    """Largest ``eps`` with ``K(x, .) >= eps * K(y, .)`` for every ``x, y``.

    Column by column the binding pair is (smallest entry, largest entry), so
    ``eps = min_z min_x K[x, z] / max_y K[y, z]`` over columns that are not
    identically zero.
    """
    P = K.matrix if isinstance(K, FiniteKernel) else np.asarray(K)
    ratios = [c.min() / c.max() for c in P.T if c.max() > 0]
    return float(min(ratios)) if ratios else 0.0


def tv_distance(p, q) -> float:
    return 0.5 * float(np.abs(np.asarray(p) - np.asarray(q)).sum())


# ---------------------------------------------------------------------------
# Verification of the exchange contraction bound
# ---------------------------------------------------------------------------


def _product_exchange_matrix(pis, weights: dict) -> np.ndarray:
    """Exchange kernel on ``S**N`` mixing over chain pairs with ``weights``.

    Works for float arrays and for ``mpmath`` object arrays alike.
    """
    N, S = len(pis), len(pis[0])
    states = list(itertools.product(range(S), repeat=N))
    index = {x: r for r, x in enumerate(states)}
    zero = pis[0][0] * 0
    E = np.full((len(states), len(states)), zero, dtype=object)
    for r, x in enumerate(states):
        for (i, l), w in weights.items():
            den = pis[i][x[i]] * pis[l][x[l]]
            rho = min(1, pis[i][x[l]] * pis[l][x[i]] / den) if den > 0 else zero
            y = list(x)
            y[i], y[l] = x[l], x[i]
            E[r, index[tuple(y)]] += w * rho
            E[r, r] += w * (1 - rho)
    return E if pis[0].dtype == object else E.astype(float)


def _min_exchange_rho(pi_i, pi_l) -> float:
    S = len(pi_i)
    return float(min(
        min(1, pi_i[b] * pi_l[a] / (pi_i[a] * pi_l[b]))
        for a in range(S) for b in range(S) if pi_i[a] * pi_l[b] > 0
    ))


@dataclass
class Prop1Report:
    """Outcome of :func:`prop1_verify`.

    ``actual`` and ``bound`` are the TV distance and its bound after
    ``n = 1, 2, ...`` steps.  ``violations`` lists the steps where the
    distance exceeds the bound by more than ``atol``.
    """

    epsilon: float
    alpha: float
    factor: float
    actual: np.ndarray
    bound: np.ndarray
    violations: list[int] = field(default_factory=list)
    atol: float = 0.0

    @property
    def ratio(self) -> np.ndarray:
        """``actual / bound`` per step; values above one are violations."""
        with np.errstate(divide="ignore", invalid="ignore"):
            return np.where(self.bound > 0, self.actual / self.bound, np.inf)

    @property
    def resolved_steps(self) -> int:
        """Number of leading steps whose bound exceeds the tolerance."""
        return int(np.sum(self.bound > self.atol))

    @property
    def holds(self) -> bool:
        return not self.violations


def prop1_verify(K_M, exchange_weights: dict, pis, eta, n_max: int = 50,
                 atol: float | None = None) -> Prop1Report:
    """Compare exact TV decay of ``eta (K_M K_E)^n`` with the contraction bound.

    The bound is ``[2 (1 - alpha)(1 - eps)]^n * TV(eta, pi*)`` with ``eps``
    the mixing constant of ``K_M`` and
    ``alpha = sum_{pairs} weight * (1 - min rho)``.

    Parameters
    ----------
    K_M : FiniteKernel or array over the product space ``S**N``
        May be an ``mpmath`` object array (see :func:`tempered_pair_toy`),
        in which case the iteration runs in extended precision.
    exchange_weights : dict mapping ``(i, l)`` to selection probability
    pis : sequence of ``N`` target vectors on ``S`` states
    eta : initial distribution on the product space
    atol : float, optional
        Absolute slack before a step counts as a violation.  Defaults to
        ``1e-13`` in double precision, where the TV distance bottoms out at
        round-off level, and ``1e-40`` for extended-precision input.

    Notes
    -----
    Once the bound falls below the round-off floor a double-precision run
    cannot distinguish a genuine violation from noise; such steps are
    counted as satisfied and ``resolved_steps`` reports how many steps were
    actually informative.
    """
    P = K_M.matrix if isinstance(K_M, FiniteKernel) else np.asarray(K_M)
    extended = P.dtype == object
    if not extended:
        P = P.astype(float)
    pis = [np.asarray(p) for p in pis]
    if atol is None:
        atol = 1e-40 if extended else 1e-13
    eps = mixing_condition_eps(P)
    if eps <= 0.0:
        raise ConditionNotMetError("mutation kernel does not satisfy the mixing condition")
    if not math.isclose(float(sum(exchange_weights.values())), 1.0, abs_tol=1e-12):
        raise ValueError("exchange weights must sum to one")
    alpha = sum(float(w) * (1.0 - _min_exchange_rho(pis[i], pis[l]))
                for (i, l), w in exchange_weights.items())
    factor = 2.0 * (1.0 - alpha) * (1.0 - eps)
    pistar = pis[0]
    for p in pis[1:]:
        pistar = np.kron(pistar, p)
    T = P @ _product_exchange_matrix(pis, exchange_weights)
    v = np.asarray(eta, dtype=object if extended else float)
    if extended:
        v = v * (pistar[0] * 0 + 1)
    d0 = float(np.abs(v - pistar).sum() / 2)
    actual = np.empty(n_max)
    bound = factor ** np.arange(1, n_max + 1) * d0
    for n in range(n_max):
        v = v @ T
        actual[n] = float(np.abs(v - pistar).sum() / 2)
    violations = [n + 1 for n in range(n_max) if actual[n] > bound[n] + atol]
    return Prop1Report(eps, alpha, factor, actual, bound, violations, atol)


# ---------------------------------------------------------------------------
# Verification of the population small-set certificate
# ---------------------------------------------------------------------------


def theorem1_nu_star(K1: FiniteKernel, pair: MinorizationPair, pi1, pi2) -> tuple[float, np.ndarray]:
    """Build ``(theta, nu*)`` for the mutate-exchange-mutate composite.

    ``nu*(a1, a2) = K*(a1) nu(a2)`` with
    ``K*(a1) = phi^{-1} sum_x nu(x) min(1, pi1(x) / (pi2(x) rho1)) K1(x, a1)``,
    and ``theta = eps^2 phi``.
    """
    theta, phi, rho1 = population_minorization_constant(pair, pi1, pi2)
    pi1 = np.asarray(pi1, dtype=float)
    pi2 = np.asarray(pi2, dtype=float)
    weight = pair.nu * np.minimum(1.0, pi1 / (pi2 * rho1))
    kstar = weight @ K1.matrix / phi
    return theta, np.kron(kstar, pair.nu)


@dataclass
class Theorem1Report:
    theta: float
    n_violations: int
    min_slack: float
    argmin: tuple[int, int]

    @property
    def holds(self) -> bool:
        return self.n_violations == 0


def theorem1_verify(K_pop: FiniteKernel | np.ndarray, epsilon_star: float, nu_star,
                    atol: float = 1e-12) -> Theorem1Report:
    """Check ``K_pop(x, {a}) >= epsilon_star * nu_star(a)`` for every ``x, a``."""
    P = K_pop.matrix if isinstance(K_pop, FiniteKernel) else np.asarray(K_pop, dtype=float)
    slack = P - epsilon_star * np.asarray(nu_star, dtype=float)[None, :]
    flat = int(np.argmin(slack))
    x, a = divmod(flat, slack.shape[1])
    return Theorem1Report(
        float(epsilon_star), int(np.sum(slack < -atol)), float(slack[x, a]), (x, a)
    )


# ---------------------------------------------------------------------------
# Synthetic data sets and CSV persistence
# ---------------------------------------------------------------------------


def synthetic_bimodal_model(seed: int = 0, effect: float = 0.6823, noise_dir: float = 1.0,
                            n: int = 100, k_max: int = 8) -> VarselModel:
    """Data whose posterior splits between the null and the saturated model.

    The last covariate nearly cancels the sum of the others, so the signal
    ``effect * sum(X)`` lives in a direction only the full model can reach.
    Every intermediate model pays the dimension penalty without explaining
    the signal, which leaves two isolated modes.  The defaults put roughly
    0.55 of the mass on the null model and 0.33 on the saturated one.
    """
    rng = np.random.default_rng(seed)
    Z = rng.standard_normal((n, k_max - 1))
    e = rng.standard_normal(n)
    X = np.column_stack([Z, -Z.sum(axis=1) + noise_dir * e])
    y = effect * X.sum(axis=1) + rng.standard_normal(n)
    return VarselModel(X, y)


def synthetic_sparse_model(seed: int = 7, n: int = 100, k_max: int = 8) -> VarselModel:
    """Independent covariates with three modest effects; a well-mixed posterior."""
    rng = np.random.default_rng(seed)
    X = rng.standard_normal((n, k_max))
    beta = np.zeros(k_max)
    beta[[0, 2, 5]] = [0.35, 0.2, 0.1]
    y = 1.0 + X @ beta + rng.standard_normal(n)
    return VarselModel(X, y)


def save_varsel_csv(model: VarselModel, path) -> None:
    """Headerless CSV, covariates first and the response last."""
    np.savetxt(path, np.column_stack([model.X, model.y]), delimiter=",", fmt="%.17g")


def load_varsel_csv(path, **prior) -> VarselModel:
    data = np.loadtxt(path, delimiter=",", ndmin=2)
    return VarselModel(data[:, :-1], data[:, -1], **prior)


def fixture_path(name: str):
    """Path of a packaged data file (``varsel_bimodal.csv``, ``varsel_sparse.csv``)."""
    from importlib import resources

    return resources.files("poprj") / "data" / name


def tempered_pair_toy(loglik, logprior, zeta2: float, mh_steps: int = 1, dps: int | None = None):
    """Two small tempered targets and their Metropolis kernels.

    Chain one targets ``exp(loglik + logprior)`` and chain two
    ``exp(zeta2 * loglik + logprior)``; each kernel is ``mh_steps``
    applications of Metropolis with a uniform proposal over the other states.

    Returns
    -------
    (K1, K2, pi1, pi2)
        With ``dps=None`` the kernels are :class:`FiniteKernel` instances.
        With ``dps`` set, everything is built as ``mpmath`` object arrays at
        that many decimal digits, for checks that must resolve quantities
        below double-precision round-off.
    """
    S = len(loglik)
    if dps is None:
        Q = (np.ones((S, S)) - np.eye(S)) / (S - 1)
        out = []
        for z in (1.0, zeta2):
            pi = _normalise_log(z * np.asarray(loglik, float) + np.asarray(logprior, float))
            out.append(FiniteKernel(np.linalg.matrix_power(mh_kernel(pi, Q), mh_steps), pi))
        return out[0], out[1], out[0].target, out[1].target

    import mpmath

    mpmath.mp.dps = max(mpmath.mp.dps, int(dps))
    mpf = mpmath.mpf
    kernels, targets = [], []
    for z in (mpf(1), mpf(zeta2)):
        w = [mpmath.exp(z * mpf(loglik[i]) + mpf(logprior[i])) for i in range(S)]
        tot = sum(w)
        pi = np.array([x / tot for x in w], dtype=object)
        P = np.full((S, S), mpf(0), dtype=object)
        for x in range(S):
            for y in range(S):
                if y != x:
                    P[x, y] = min(mpf(1), pi[y] / pi[x]) / (S - 1)
            P[x, x] = 1 - sum(P[x, y] for y in range(S) if y != x)
        kernels.append(np.linalg.matrix_power(P, mh_steps))
        targets.append(pi)
    return kernels[0], kernels[1], targets[0], targets[1]
