"""Single-chain reversible-jump sampler for the multivariate-t mixture.

One sweep runs, in order:

1. per-coordinate Metropolis updates of every component mean (additive
   Cauchy walk), every off-diagonal Cholesky entry (additive Cauchy walk)
   and every Cholesky diagonal (multiplicative log-normal walk);
2. a joint normal random walk on the additive-logit weights
   ``z_j = log(w_j / w_k)``;
3. a Gibbs draw of ``Psi``;
4. with probability one half a birth/death move, otherwise split/combine.

All moves target the tempered posterior written as a density in
``(mu, Phi)`` coordinates (see :func:`poprj.mixture.sampler_log_target`).
The proposal builders (``birth_proposal``, ``split_proposal`` and their
reverses) are deterministic given their random inputs, which keeps the
acceptance ratios open to direct checking.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy.special import betaln, multigammaln

from . import mixture as mx
from .statcore import (
    InvWishart,
    SpdChol,
    chol_factor,
    mahalanobis_sq,
    mvt_logpdf,
    solve_lower,
    wishart_sample,
)

__all__ = [
    "MoveScales",
    "MoveOutcome",
    "ChainContext",
    "move_probs",
    "mh_fixed_updates",
    "gibbs_psi",
    "psi_conditional",
    "birth_proposal",
    "death_proposal",
    "birth_death",
    "split_map",
    "combine_map",
    "split_log_jacobian",
    "combine_pair_probs",
    "split_proposal",
    "combine_proposal",
    "split_combine",
    "rj_sweep",
]

LOG2 = math.log(2.0)


# ---------------------------------------------------------------------------
# Configuration and bookkeeping
# ---------------------------------------------------------------------------


@dataclass
class MoveScales:
    """Proposal scales; every value is a standard deviation or Cauchy scale.

    ``cauchy_mean``, ``split_sigma_mu`` and ``snooker_sd`` may be
    per-dimension vectors.
    """

    cauchy_mean: np.ndarray | float = 0.05
    cauchy_offdiag: float = 0.05
    lognorm_diag_sigma: float = 0.3
    logit_weight_sigma: float = 0.5
    split_gamma: float = 2.0
    split_sigma_mu: np.ndarray | float = 0.1
    split_sigma_phi: float = 0.1
    split_sigma_diag: float = 0.3
    snooker_sd: np.ndarray | float = 0.05

    def __post_init__(self):
        self.cauchy_mean = np.asarray(self.cauchy_mean, dtype=float)
        self.split_sigma_mu = np.asarray(self.split_sigma_mu, dtype=float)
        self.snooker_sd = np.asarray(self.snooker_sd, dtype=float)
        for name in ("cauchy_mean", "cauchy_offdiag", "lognorm_diag_sigma", "logit_weight_sigma",
                     "split_gamma", "split_sigma_mu", "split_sigma_phi", "split_sigma_diag", "snooker_sd"):
            v = np.asarray(getattr(self, name))
            if not (np.all(np.isfinite(v)) and np.all(v > 0)):
                raise ValueError(f"{name} must be strictly positive")

    @classmethod
    def default(cls, data: mx.Dataset) -> "MoveScales":
        R = data.ranges
        return cls(cauchy_mean=R / 20.0, split_sigma_mu=R / 10.0, snooker_sd=R / 20.0)


@dataclass
class MoveOutcome:
    kind: str
    proposed: bool
    accepted: bool
    log_hastings: float = float("nan")
    chain: int | None = None

    def __post_init__(self):
        if self.accepted and not self.proposed:
            raise ValueError("a move cannot be accepted without being proposed")


@dataclass
class ChainContext:
    """Everything a sweep needs besides the state and the random stream.

    Parameters
    ----------
    zeta : float
        Inverse temperature applied to the likelihood.
    lik_power : float
        Extra likelihood exponent for checks; ``0`` targets the prior and
        skips every likelihood evaluation.
    k_lo, k_hi : int
        Allowed range of ``k``; defaults to ``1..k_max``.  Constrained chains
        narrow it.
    """

    data: mx.Dataset
    hyper: mx.Hyperparams
    zeta: float = 1.0
    lik_power: float = 1.0
    k_lo: int = 1
    k_hi: int | None = None
    trans_moves: bool = True
    _psi_key: object = field(default=None, init=False, repr=False)
    _psi_scale: SpdChol | None = field(default=None, init=False, repr=False)
    _chol_const: float = field(default=0.0, init=False, repr=False)
    _diag_coef: np.ndarray | None = field(default=None, init=False, repr=False)
    _mean_const: float = field(default=0.0, init=False, repr=False)
    _mvgamma: float = field(default=0.0, init=False, repr=False)

    def __post_init__(self):
        if not 0.0 < self.zeta <= 1.0:
            raise ValueError(f"zeta must lie in (0, 1], got {self.zeta}")
        if self.lik_power < 0:
            raise ValueError("lik_power must be non-negative")
        if self.k_hi is None:
            self.k_hi = self.hyper.k_max
        if not 1 <= self.k_lo <= self.k_hi <= self.hyper.k_max:
            raise ValueError(f"invalid k range {self.k_lo}..{self.k_hi}")
        h = self.hyper
        self._mean_const = 0.5 * h._kappa_chol.logdet - 0.5 * h.q * math.log(2 * math.pi)
        self._mvgamma = float(multigammaln(0.5 * h.lambda_dof, h.q))

    @property
    def power(self) -> float:
        """Effective likelihood exponent."""
        return self.zeta * self.lik_power

    def psi_scale(self, psi) -> SpdChol:
        key = psi.tobytes()
        if key != self._psi_key:
            self._psi_scale = SpdChol(np.linalg.cholesky(2.0 * psi))
            h = self.hyper
            q, nu = h.q, h.lambda_dof
            # Psi-dependent constant of the inverse-Wishart density plus the
            # constant of the Phi -> Lambda Jacobian
            self._chol_const = (0.5 * nu * self._psi_scale.logdet - 0.5 * nu * q * LOG2
                                - self._mvgamma + q * LOG2)
            self._diag_coef = -(nu + q + 1.0) + (q - np.arange(q))
            self._psi_key = key
        return self._psi_scale

    def mean_prior(self, mean) -> float:
        h = self.hyper
        diff = mean - h.xi
        return self._mean_const - 0.5 * float(diff @ h.kappa @ diff)

    def chol_prior(self, chol, psi) -> float:
        """Inverse-Wishart prior of ``Phi Phi'`` plus its Jacobian, in ``Phi`` coordinates."""
        S = self.psi_scale(psi)
        d = np.diagonal(chol)
        if d.min() <= 0:
            return -math.inf
        M = solve_lower(chol, S.lower)
        return self._chol_const + float(self._diag_coef @ np.log(d)) - 0.5 * float((M * M).sum())

    def ensure_logf(self, s: mx.MixtureState) -> None:
        if self.power == 0.0:
            return
        if s.logf is None or s.logf.shape != (self.data.n, s.k):
            s.logf = mx.component_log_densities(self.data, s.means, s.chols, self.hyper.dof)

    def component_logf(self, mean, chol) -> np.ndarray | None:
        if self.power == 0.0:
            return None
        return mvt_logpdf(self.data.points, mean, chol, self.hyper.dof)

    def loglik(self, s: mx.MixtureState) -> float:
        if self.power == 0.0:
            return 0.0
        self.ensure_logf(s)
        return mx.loglik_from_logf(s.logf, s.weights)

    def component_prior(self, s: mx.MixtureState, j: int) -> float:
        """Mean prior plus ``Phi``-coordinate scale prior of component ``j``."""
        return self.mean_prior(s.means[j]) + self.chol_prior(s.chols[j], s.psi)

    def target_ratio(self, new: mx.MixtureState, old: mx.MixtureState) -> float:
        """Log target ratio for a move that keeps ``Psi`` fixed."""
        return self.log_target(new, include_psi=False) - self.log_target(old, include_psi=False)

    def log_target(self, s: mx.MixtureState, *, include_psi: bool = True) -> float:
        """Tempered target in ``(mu, Phi)`` coordinates.

        ``include_psi=False`` drops the ``Psi`` prior, which cancels in every
        move that leaves ``Psi`` alone.
        """
        h = self.hyper
        out = -math.log(h.k_max) + mx.weights_log_prior(s.weights, h.delta)
        if include_psi:
            out += mx.psi_log_prior(s.psi, h)
        out += sum(self.component_prior(s, j) for j in range(s.k))
        if self.power > 0.0:
            out += self.power * self.loglik(s)
        return out


def move_probs(k: int, lo: int, hi: int) -> tuple[float, float]:
    """Probabilities of the dimension-increasing and -decreasing move at ``k``."""
    if lo == hi:
        return 0.0, 0.0
    if k == lo:
        return 1.0, 0.0
    if k == hi:
        return 0.0, 1.0
    return 0.5, 0.5


def _accept(log_a: float, rng) -> bool:
    if not log_a == log_a:  # nan
        return False
    return log_a >= 0.0 or math.log(rng.random()) < log_a


# ---------------------------------------------------------------------------
# Fixed-dimension moves
# ---------------------------------------------------------------------------


def _loglik_with_column(s: mx.MixtureState, j: int, col: np.ndarray) -> float:
    logf = s.logf.copy()
    logf[:, j] = col
    return mx.loglik_from_logf(logf, s.weights)


def _component_step(s, j, ctx, new_mean, new_chol, prior_delta, ll_cur, rng, kind):
    """Metropolis step replacing component ``j``.

    ``prior_delta`` carries the prior ratio and any proposal asymmetry.
    Returns ``(accepted, loglik, outcome)``.
    """
    col = ctx.component_logf(new_mean, new_chol)
    ll_new = ll_cur if col is None else _loglik_with_column(s, j, col)
    log_a = ctx.power * (ll_new - ll_cur) + prior_delta
    if _accept(log_a, rng):
        s.means[j] = new_mean
        s.chols[j] = new_chol
        if col is not None:
            s.logf[:, j] = col
        return True, ll_new, MoveOutcome(kind, True, True, log_a)
    return False, ll_cur, MoveOutcome(kind, True, False, log_a)


def mh_fixed_updates(state: mx.MixtureState, ctx: ChainContext, scales: MoveScales, rng):
    """Coordinate-wise Metropolis updates of means, Cholesky factors and weights.

    Returns
    -------
    (state', outcomes)
        ``state`` itself is not modified.
    """
    s = state.copy()
    ctx.ensure_logf(s)
    q = s.q
    ll = ctx.loglik(s)
    cm = np.broadcast_to(scales.cauchy_mean, (q,))
    rows, cols = np.tril_indices(q, -1)
    outcomes = []
    for j in range(s.k):
        pm = ctx.mean_prior(s.means[j])
        for d in range(q):
            mean = s.means[j].copy()
            mean[d] += cm[d] * rng.standard_cauchy()
            pm_new = ctx.mean_prior(mean)
            ok, ll, out = _component_step(s, j, ctx, mean, s.chols[j], pm_new - pm, ll, rng, "mean")
            pm = pm_new if ok else pm
            outcomes.append(out)
        pc = ctx.chol_prior(s.chols[j], s.psi)
        for a, b in zip(rows, cols):
            chol = s.chols[j].copy()
            chol[a, b] += scales.cauchy_offdiag * rng.standard_cauchy()
            pc_new = ctx.chol_prior(chol, s.psi)
            ok, ll, out = _component_step(s, j, ctx, s.means[j], chol, pc_new - pc, ll, rng, "offdiag")
            pc = pc_new if ok else pc
            outcomes.append(out)
        for d in range(q):
            chol = s.chols[j].copy()
            step = scales.lognorm_diag_sigma * rng.standard_normal()
            chol[d, d] *= math.exp(step)
            pc_new = ctx.chol_prior(chol, s.psi)
            # the multiplicative walk contributes the asymmetry log(phi'/phi) = step
            ok, ll, out = _component_step(s, j, ctx, s.means[j], chol, pc_new - pc + step, ll, rng, "diag")
            pc = pc_new if ok else pc
            outcomes.append(out)
    if s.k > 1:
        s, out = _weight_step(s, ctx, scales, ll, rng)
        outcomes.append(out)
    return s, outcomes


def _weight_step(s: mx.MixtureState, ctx: ChainContext, scales: MoveScales, ll_cur: float, rng):
    w = s.weights
    z = np.log(w[:-1]) - math.log(w[-1])
    z_new = z + scales.logit_weight_sigma * rng.standard_normal(z.size)
    w_new = np.exp(np.append(z_new, 0.0) - np.logaddexp.reduce(np.append(z_new, 0.0)))
    w_new /= w_new.sum()
    h = ctx.hyper
    ll_new = mx.loglik_from_logf(s.logf, w_new) if ctx.power > 0 else 0.0
    # density of z carries the logistic Jacobian prod_j w_j
    log_a = (
        ctx.power * (ll_new - ll_cur)
        + mx.weights_log_prior(w_new, h.delta) - mx.weights_log_prior(w, h.delta)
        + float(np.sum(np.log(w_new)) - np.sum(np.log(w)))
    )
    if _accept(log_a, rng):
        s.weights = w_new
        return s, MoveOutcome("weights", True, True, log_a)
    return s, MoveOutcome("weights", True, False, log_a)


def psi_conditional(state: mx.MixtureState, h: mx.Hyperparams) -> tuple[float, np.ndarray]:
    """Wishart full conditional of ``Psi``: ``(dof, scale)``."""
    inv_sum = np.zeros((h.q, h.q))
    eye = np.eye(h.q)
    for L in state.chols:
        Linv = solve_lower(L, eye)
        inv_sum += Linv.T @ Linv
    dof = 2.0 * (h.g + state.k * h.alpha_prime)
    scale = np.linalg.inv(2.0 * h.h + 2.0 * inv_sum)
    return dof, 0.5 * (scale + scale.T)


def gibbs_psi(state: mx.MixtureState, h: mx.Hyperparams, rng) -> mx.MixtureState:
    """Replace ``Psi`` with a draw from its full conditional."""
    dof, scale = psi_conditional(state, h)
    s = state.copy()
    s.psi = wishart_sample(dof, np.linalg.cholesky(scale), rng)
    s.psi = 0.5 * (s.psi + s.psi.T)
    return s


# ---------------------------------------------------------------------------
# Birth and death
# ---------------------------------------------------------------------------


def _insert(arr, pos, value):
    return np.insert(arr, pos, value, axis=0)


def _birth_log_ratio_terms(k_old, w, ctx, log_q, log_select=None):
    """Proposal part of the birth acceptance from ``k_old`` components.

    ``log_select`` is ``log`` of (reverse death selection / forward birth
    selection); by default the within-chain ``d_{k+1} / b_k``.
    """
    if log_select is None:
        up, _ = move_probs(k_old, ctx.k_lo, ctx.k_hi)
        _, down = move_probs(k_old + 1, ctx.k_lo, ctx.k_hi)
        log_select = math.log(down) - math.log(up)
    log_beta = math.log(k_old) + (k_old - 1) * math.log1p(-w)  # Be(w; 1, k)
    return log_select + (k_old - 1) * math.log1p(-w) - log_beta - log_q


def birth_proposal(state: mx.MixtureState, ctx: ChainContext, w: float, mean, chol,
                   position: int, log_q: float | None = None, log_select: float | None = None):
    """Deterministic birth of ``(w, mean, chol)`` at ``position``.

    ``log_q`` is the proposal density of ``(mean, chol)`` in Cholesky
    coordinates; the prior density is used when omitted.  ``log_select``
    overrides the move-selection ratio (population moves pass their own).

    Returns
    -------
    (new_state, log_A)
    """
    s = state
    if s.k >= ctx.k_hi:
        raise ValueError(f"birth is not available at k={s.k}")
    ctx.ensure_logf(s)
    new = mx.MixtureState(
        _insert(s.weights * (1.0 - w), position, w),
        _insert(s.means, position, mean),
        _insert(s.chols, position, chol),
        s.psi.copy(),
    )
    if ctx.power > 0:
        new.logf = np.insert(s.logf, position, ctx.component_logf(mean, chol), axis=1)
    if log_q is None:
        log_q = ctx.component_prior(new, position)
    log_a = ctx.target_ratio(new, s) + _birth_log_ratio_terms(s.k, w, ctx, log_q, log_select)
    return new, log_a


def death_proposal(state: mx.MixtureState, ctx: ChainContext, j: int, log_q: float | None = None,
                   log_select: float | None = None):
    """Remove component ``j``; the mirror of :func:`birth_proposal`.

    ``log_q`` and ``log_select`` refer to the reverse birth.
    """
    s = state
    if s.k <= ctx.k_lo:
        raise ValueError(f"death is not available at k={s.k}")
    ctx.ensure_logf(s)
    w = float(s.weights[j])
    keep = np.arange(s.k) != j
    new = mx.MixtureState(s.weights[keep] / (1.0 - w), s.means[keep], s.chols[keep], s.psi.copy())
    if ctx.power > 0:
        new.logf = s.logf[:, keep]
    if log_q is None:
        log_q = ctx.component_prior(s, j)
    log_a = ctx.target_ratio(new, s) - _birth_log_ratio_terms(new.k, w, ctx, log_q, log_select)
    return new, log_a


def _prior_component(ctx: ChainContext, psi, rng):
    h = ctx.hyper
    mean = rng.multivariate_normal(h.xi, np.linalg.inv(h.kappa))
    lam = InvWishart(h.lambda_dof, 2.0 * psi).sample(rng)
    return mean, chol_factor(lam).lower


def birth_death(state: mx.MixtureState, ctx: ChainContext, rng):
    """One birth-or-death Metropolis-Hastings step (new components from the prior)."""
    up, down = move_probs(state.k, ctx.k_lo, ctx.k_hi)
    if up + down == 0.0:
        return state, MoveOutcome("birth", False, False)
    if rng.random() < up:
        w = rng.beta(1.0, state.k)
        mean, chol = _prior_component(ctx, state.psi, rng)
        pos = int(rng.integers(state.k + 1))
        new, log_a = birth_proposal(state, ctx, w, mean, chol, pos)
        kind = "birth"
    else:
        j = int(rng.integers(state.k))
        new, log_a = death_proposal(state, ctx, j)
        kind = "death"
    if _accept(log_a, rng):
        return new, MoveOutcome(kind, True, True, log_a)
    return state, MoveOutcome(kind, True, False, log_a)


# ---------------------------------------------------------------------------
# Split and combine
# ---------------------------------------------------------------------------


@dataclass
class SplitVariables:
    """Auxiliary draws of a split: weight fraction, mean shift, Cholesky shifts."""

    u1: float
    u_mean: np.ndarray
    u_offdiag: np.ndarray  # strictly-lower entries in np.tril_indices order
    u_diag: np.ndarray

    def mirrored(self) -> "SplitVariables":
        return SplitVariables(1.0 - self.u1, -self.u_mean, -self.u_offdiag, 1.0 / self.u_diag)


__all__.append("SplitVariables")


def split_map(w, mean, chol, u: SplitVariables):
    """Split one component into two.

    Returns
    -------
    ((w1, mean1, chol1), (w2, mean2, chol2))
    """
    q = mean.size
    rows, cols = np.tril_indices(q, -1)
    c1 = np.array(chol, dtype=float, copy=True)
    c2 = c1.copy()
    c1[rows, cols] += u.u_offdiag
    c2[rows, cols] -= u.u_offdiag
    d = np.diag(chol)
    c1[np.diag_indices(q)] = d / u.u_diag
    c2[np.diag_indices(q)] = d * u.u_diag
    return (u.u1 * w, mean + u.u_mean, c1), ((1.0 - u.u1) * w, mean - u.u_mean, c2)


def combine_map(comp1, comp2):
    """Inverse of :func:`split_map`: ``((w, mean, chol), SplitVariables)``."""
    w1, m1, c1 = comp1
    w2, m2, c2 = comp2
    q = m1.size
    rows, cols = np.tril_indices(q, -1)
    w = w1 + w2
    mean = 0.5 * (m1 + m2)
    chol = np.zeros((q, q))
    chol[rows, cols] = 0.5 * (c1[rows, cols] + c2[rows, cols])
    d1, d2 = np.diag(c1), np.diag(c2)
    chol[np.diag_indices(q)] = np.sqrt(d1 * d2)
    u = SplitVariables(w1 / w, 0.5 * (m1 - m2), 0.5 * (c1[rows, cols] - c2[rows, cols]), np.sqrt(d2 / d1))
    return (w, mean, chol), u


def split_log_jacobian(w, chol, u_diag) -> float:
    """``log |J| = (r(r+3)/2) log 2 + log w + sum_l log(phi_ll / u_ll)``."""
    r = np.asarray(chol).shape[0]
    return 0.5 * r * (r + 3) * LOG2 + math.log(w) + float(np.sum(np.log(np.diag(chol)) - np.log(u_diag)))


def _split_log_q(u: SplitVariables, scales: MoveScales) -> float:
    g = scales.split_gamma
    sm = np.broadcast_to(scales.split_sigma_mu, u.u_mean.shape)
    out = (g - 1.0) * (math.log(u.u1) + math.log1p(-u.u1)) - betaln(g, g)
    out += float(np.sum(-0.5 * (u.u_mean / sm) ** 2 - np.log(sm))) - 0.5 * u.u_mean.size * math.log(2 * math.pi)
    sp = scales.split_sigma_phi
    out += float(np.sum(-0.5 * (u.u_offdiag / sp) ** 2)) - u.u_offdiag.size * (math.log(sp) + 0.5 * math.log(2 * math.pi))
    sd = scales.split_sigma_diag
    lu = np.log(u.u_diag)
    out += float(np.sum(-0.5 * (lu / sd) ** 2 - lu)) - lu.size * (math.log(sd) + 0.5 * math.log(2 * math.pi))
    return out


def _pair_distance(mean1, chol1, mean2, chol2) -> float:
    return mahalanobis_sq(mean1, mean2, chol1) + mahalanobis_sq(mean2, mean1, chol2)


def combine_pair_probs(state: mx.MixtureState) -> dict[tuple[int, int], float]:
    """Probability of combining each unordered pair, inversely proportional
    to the symmetric two-term Mahalanobis distance.

    Pairs at distance zero, if any, share all the mass uniformly (the limit
    of the inverse-distance weights).
    """
    k = state.k
    pairs = [(a, b) for a in range(k) for b in range(a + 1, k)]
    if not pairs:
        return {}
    dist = np.array([_pair_distance(state.means[a], state.chols[a], state.means[b], state.chols[b])
                     for a, b in pairs])
    if np.any(dist == 0.0):
        wts = (dist == 0.0).astype(float)
    else:
        wts = 1.0 / dist
    wts /= wts.sum()
    return dict(zip(pairs, wts))


def _split_reverse_terms(k_old: int, ctx: ChainContext, scales, u, w_star, chol_star, log_p_pair):
    """Proposal part of ``log A`` for a split from ``k_old`` components."""
    up, _ = move_probs(k_old, ctx.k_lo, ctx.k_hi)
    _, down = move_probs(k_old + 1, ctx.k_lo, ctx.k_hi)
    return (
        math.log(down) + log_p_pair - math.log(up)
        + math.log(k_old) + math.log(k_old + 1) - LOG2
        + split_log_jacobian(w_star, chol_star, u.u_diag)
        - _split_log_q(u, scales)
    )


def split_proposal(state: mx.MixtureState, ctx: ChainContext, scales: MoveScales, j_star: int,
                   u: SplitVariables, positions: tuple[int, int]):
    """Split component ``j_star`` with variables ``u``.

    The two offspring are placed at ``positions`` (distinct, in ``0..k``)
    and the remaining components keep their relative order.

    Returns
    -------
    (new_state, log_A)
    """
    s = state
    if move_probs(s.k, ctx.k_lo, ctx.k_hi)[0] == 0.0:
        raise ValueError(f"split is not available at k={s.k}")
    ctx.ensure_logf(s)
    k = s.k
    p1, p2 = positions
    if p1 == p2 or not (0 <= p1 <= k and 0 <= p2 <= k):
        raise ValueError("positions must be distinct indices in 0..k")
    (w1, m1, c1), (w2, m2, c2) = split_map(s.weights[j_star], s.means[j_star], s.chols[j_star], u)
    others = [j for j in range(k) if j != j_star]
    slots = [p for p in range(k + 1) if p not in (p1, p2)]
    order = np.empty(k + 1, dtype=int)
    weights = np.empty(k + 1)
    means = np.empty((k + 1, s.q))
    chols = np.empty((k + 1, s.q, s.q))
    for slot, j in zip(slots, others):
        weights[slot], means[slot], chols[slot] = s.weights[j], s.means[j], s.chols[j]
        order[slot] = j
    weights[p1], means[p1], chols[p1] = w1, m1, c1
    weights[p2], means[p2], chols[p2] = w2, m2, c2
    new = mx.MixtureState(weights, means, chols, s.psi.copy())
    if np.any(np.diagonal(chols, axis1=1, axis2=2) <= 0) or w1 <= 0 or w2 <= 0:
        return new, -math.inf
    if ctx.power > 0:
        logf = np.empty((ctx.data.n, k + 1))
        logf[:, slots] = s.logf[:, others]
        logf[:, p1] = ctx.component_logf(m1, c1)
        logf[:, p2] = ctx.component_logf(m2, c2)
        new.logf = logf
    pair = (min(p1, p2), max(p1, p2))
    log_p_pair = math.log(combine_pair_probs(new)[pair])
    log_a = ctx.target_ratio(new, s) + _split_reverse_terms(
        k, ctx, scales, u, s.weights[j_star], s.chols[j_star], log_p_pair)
    return new, log_a


def combine_proposal(state: mx.MixtureState, ctx: ChainContext, scales: MoveScales,
                     pair: tuple[int, int], position: int):
    """Merge the components in ``pair``; the merged one lands at ``position``.

    Returns
    -------
    (new_state, log_A, u)
        ``u`` are the split variables that would recreate ``state``.
    """
    s = state
    if move_probs(s.k, ctx.k_lo, ctx.k_hi)[1] == 0.0:
        raise ValueError(f"combine is not available at k={s.k}")
    ctx.ensure_logf(s)
    a, b = sorted(pair)
    k = s.k
    (w, mean, chol), u = combine_map((s.weights[a], s.means[a], s.chols[a]),
                                     (s.weights[b], s.means[b], s.chols[b]))
    others = [j for j in range(k) if j not in (a, b)]
    if not 0 <= position <= k - 2:
        raise ValueError("position must lie in 0..k-2")
    idx = others[:position] + [None] + others[position:]
    weights = np.array([w if j is None else s.weights[j] for j in idx])
    means = np.array([mean if j is None else s.means[j] for j in idx])
    chols = np.array([chol if j is None else s.chols[j] for j in idx])
    new = mx.MixtureState(weights, means, chols, s.psi.copy())
    if ctx.power > 0:
        logf = np.empty((ctx.data.n, k - 1))
        keep = [p for p in range(k - 1) if p != position]
        logf[:, keep] = s.logf[:, others]
        logf[:, position] = ctx.component_logf(mean, chol)
        new.logf = logf
    log_p_pair = math.log(combine_pair_probs(s)[(a, b)])
    log_a = ctx.target_ratio(new, s) - _split_reverse_terms(
        k - 1, ctx, scales, u, w, chol, log_p_pair)
    return new, log_a, u


def draw_split_variables(q: int, scales: MoveScales, rng) -> SplitVariables:
    g = scales.split_gamma
    sm = np.broadcast_to(scales.split_sigma_mu, (q,))
    return SplitVariables(
        float(rng.beta(g, g)),
        sm * rng.standard_normal(q),
        scales.split_sigma_phi * rng.standard_normal(q * (q - 1) // 2),
        np.exp(scales.split_sigma_diag * rng.standard_normal(q)),
    )


__all__.append("draw_split_variables")


def split_combine(state: mx.MixtureState, ctx: ChainContext, scales: MoveScales, rng):
    """One split-or-combine Metropolis-Hastings step."""
    up, down = move_probs(state.k, ctx.k_lo, ctx.k_hi)
    if up + down == 0.0:
        return state, MoveOutcome("split", False, False)
    if rng.random() < up:
        j_star = int(rng.integers(state.k))
        u = draw_split_variables(state.q, scales, rng)
        p = rng.choice(state.k + 1, size=2, replace=False)
        new, log_a = split_proposal(state, ctx, scales, j_star, u, (int(p[0]), int(p[1])))
        kind = "split"
    else:
        probs = combine_pair_probs(state)
        pairs = list(probs)
        pair = pairs[int(rng.choice(len(pairs), p=np.fromiter(probs.values(), float)))]
        pos = int(rng.integers(state.k - 1))
        new, log_a, _ = combine_proposal(state, ctx, scales, pair, pos)
        kind = "combine"
    if _accept(log_a, rng):
        return new, MoveOutcome(kind, True, True, log_a)
    return state, MoveOutcome(kind, True, False, log_a)


# ---------------------------------------------------------------------------
# Sweep
# ---------------------------------------------------------------------------


def rj_sweep(state: mx.MixtureState, ctx: ChainContext, scales: MoveScales, rng):
    """Fixed-dimension updates, a ``Psi`` Gibbs draw, then one trans-dimensional move.

    Returns
    -------
    (state', outcomes)
    """
    s, outcomes = mh_fixed_updates(state, ctx, scales, rng)
    s = gibbs_psi(s, ctx.hyper, rng)
    outcomes.append(MoveOutcome("psi", True, True, 0.0))
    if ctx.trans_moves:
        if rng.random() < 0.5:
            s, out = birth_death(s, ctx, rng)
        else:
            s, out = split_combine(s, ctx, scales, rng)
        if out.proposed:
            outcomes.append(out)
    return s, outcomes
