"""Snooker birth and death: births proposed from another chain's components.

The current chain ``c`` borrows an anchor chain ``a``.  A new component
is drawn from a mixture centred on the anchor's components, weighted
towards those far (in Mahalanobis distance) from the components ``c``
already has.  The weight, insertion and acceptance algebra is the vanilla
birth with the proposal density and the population-level selection
probabilities substituted.
"""

from __future__ import annotations

import math
from typing import Sequence

import numpy as np
from scipy.special import logsumexp

from .. import mixture as mx
from .. import rjvanilla as rj
from ..rjvanilla import MoveOutcome
from ..statcore import InvWishart, SpdChol, invwishart_logpdf_chol, solve_lower

__all__ = [
    "snooker_birth_prob",
    "snooker_select_log_ratio",
    "anchor_probs",
    "anchor_component_weights",
    "snooker_log_q",
    "snooker_draw",
    "snooker_birth_death",
]


def snooker_birth_prob(ks: Sequence[int], k_max: int) -> float:
    """``1`` if every chain has one component, ``0`` if every chain is full, else ``1/2``."""
    if all(k == 1 for k in ks):
        return 1.0 if k_max > 1 else 0.0
    if all(k == k_max for k in ks):
        return 0.0
    return 0.5


def _counts(ks, k_max):
    return sum(k < k_max for k in ks), sum(k > 1 for k in ks)


def snooker_select_log_ratio(ks_birth_from: Sequence[int], ks_birth_to: Sequence[int], k_max: int) -> float:
    """``log [d(after) m_b(before) / (b(before) m_d(after))]`` for a birth ``before -> after``."""
    b = snooker_birth_prob(ks_birth_from, k_max)
    d = 1.0 - snooker_birth_prob(ks_birth_to, k_max)
    m_b, _ = _counts(ks_birth_from, k_max)
    _, m_d = _counts(ks_birth_to, k_max)
    return math.log(d) + math.log(m_b) - math.log(b) - math.log(m_d)


def anchor_probs(zetas: Sequence[float], c: int, candidates: Sequence[int]) -> dict[int, float]:
    """Anchor law over ``candidates`` (excluding ``c``), proportional to ``|zeta_c - zeta_a|^-1``.

    Equal temperatures get the smallest positive gap as their distance.
    """
    z = np.asarray(zetas, dtype=float)
    cand = [a for a in candidates if a != c]
    gaps = np.abs(z[cand] - z[c])
    all_gaps = np.abs(z[:, None] - z[None, :])
    positive = all_gaps[all_gaps > 0]
    floor = positive.min() if positive.size else 1.0
    w = 1.0 / np.maximum(gaps, floor)
    w /= w.sum()
    return dict(zip(cand, w))


def _one_sided(means_from, chols_from, points) -> np.ndarray:
    """``D[j, l] = |L_j^{-1}(points_l - means_j)|^2``."""
    out = np.empty((len(means_from), len(points)))
    for j, (m, L) in enumerate(zip(means_from, chols_from)):
        z = solve_lower(L, (points - m).T)
        out[j] = np.sum(z * z, axis=0)
    return out


def anchor_component_weights(anchor: mx.MixtureState, current_means, current_chols) -> np.ndarray:
    """Mixture weights over anchor components: mean symmetric Mahalanobis distance to the current components."""
    cur_m = np.asarray(current_means, dtype=float)
    dist = (_one_sided(anchor.means, anchor.chols, cur_m)
            + _one_sided(cur_m, current_chols, anchor.means).T).mean(axis=1)
    if not np.all(np.isfinite(dist)) or dist.sum() <= 0:
        return np.full(anchor.k, 1.0 / anchor.k)
    return dist / dist.sum()


def snooker_log_q(mean, chol, anchor: mx.MixtureState, weights, sd) -> float:
    """Proposal log density of ``(mean, chol)`` in Cholesky coordinates.

    Each mixture term is a diagonal normal around an anchor mean times an
    inverse-Wishart with ``r + 2`` degrees of freedom and scale the anchor's
    matrix (so its mean is that matrix).
    """
    mean = np.asarray(mean, dtype=float)
    chol = np.asarray(chol, dtype=float)
    if np.diagonal(chol).min() <= 0:
        return -math.inf
    r = mean.size
    sd = np.broadcast_to(np.asarray(sd, dtype=float), (r,))
    terms = []
    for j in np.flatnonzero(np.asarray(weights) > 0):
        z = (mean - anchor.means[j]) / sd
        log_n = float(-0.5 * z @ z - np.sum(np.log(sd)) - 0.5 * r * math.log(2 * math.pi))
        La = anchor.chols[j]
        log_iw = invwishart_logpdf_chol(chol, r + 2.0, La, 2.0 * float(np.sum(np.log(np.diag(La)))))
        terms.append(math.log(weights[j]) + log_n + log_iw)
    return float(logsumexp(terms)) + mx.chol_log_jacobian(chol)


def snooker_draw(anchor: mx.MixtureState, weights, sd, rng):
    """Draw ``(mean, chol)`` from the snooker proposal."""
    j = int(rng.choice(anchor.k, p=weights))
    r = anchor.q
    mean = anchor.means[j] + np.asarray(sd) * rng.standard_normal(r)
    lam = InvWishart(r + 2.0, SpdChol(anchor.chols[j])).sample(rng)
    return mean, np.linalg.cholesky(lam)


def snooker_birth_death(pop, rng):
    """One snooker birth-or-death proposal among the unconstrained chains.

    Returns
    -------
    (pop', MoveOutcome)
    """
    free = pop.free
    k_max = pop.k_max
    if len(free) < 2:
        return pop, MoveOutcome("snooker_birth", False, False)
    ks = [pop.chains[i].k for i in free]
    b = snooker_birth_prob(ks, k_max)
    birth = rng.random() < b
    if birth:
        eligible = [i for i in free if pop.chains[i].k < k_max]
    else:
        eligible = [i for i in free if pop.chains[i].k > 1]
    if not eligible:
        return pop, MoveOutcome("snooker_birth" if birth else "snooker_death", False, False)
    c = eligible[int(rng.integers(len(eligible)))]
    probs = anchor_probs(pop.zetas, c, free)
    cand = list(probs)
    a = cand[int(rng.choice(len(cand), p=np.fromiter(probs.values(), float)))]
    s, ctx, anchor = pop.chains[c], pop.contexts[c], pop.chains[a]
    sd = pop.scales.snooker_sd
    pos_c = free.index(c)
    if birth:
        w = float(rng.beta(1.0, s.k))
        hbar = anchor_component_weights(anchor, s.means, s.chols)
        mean, chol = snooker_draw(anchor, hbar, sd, rng)
        position = int(rng.integers(s.k + 1))
        ks_after = list(ks)
        ks_after[pos_c] += 1
        new, log_a = rj.birth_proposal(s, ctx, w, mean, chol, position,
                                       log_q=snooker_log_q(mean, chol, anchor, hbar, sd),
                                       log_select=snooker_select_log_ratio(ks, ks_after, k_max))
        kind = "snooker_birth"
    else:
        j = int(rng.integers(s.k))
        keep = np.arange(s.k) != j
        hbar = anchor_component_weights(anchor, s.means[keep], s.chols[keep])
        ks_after = list(ks)
        ks_after[pos_c] -= 1
        new, log_a = rj.death_proposal(s, ctx, j,
                                       log_q=snooker_log_q(s.means[j], s.chols[j], anchor, hbar, sd),
                                       log_select=snooker_select_log_ratio(ks_after, ks, k_max))
        kind = "snooker_death"
    if rj._accept(log_a, rng):
        return pop.replace_chain(c, new), MoveOutcome(kind, True, True, log_a, c)
    return pop, MoveOutcome(kind, True, False, log_a, c)
