"""Variable- and fixed-dimension crossover moves.

Both moves relabel the two selected chains into a canonical order,
propose a deterministic involution on the ordered states, accept by the
Metropolis-Hastings ratio, and finish by drawing a uniform label
permutation for every chain.  The selection and proposal rules live in
small generic functions shared with :mod:`poprj.population.exact`.
"""

from __future__ import annotations

import math
from typing import Mapping, Sequence

import numpy as np

from .. import mixture as mx
from ..rjvanilla import MoveOutcome

__all__ = [
    "vardim_pair_probs",
    "vardim_reassign",
    "fixeddim_pair_probs",
    "position_probs",
    "fixeddim_swap",
    "keys_sorted",
    "weight_order",
    "mean_key_matrix",
    "mean_order",
    "permute_labels",
    "crossover_variable_dim",
    "crossover_fixed_dim",
]


# ---------------------------------------------------------------------------
# Generic selection and proposal rules
# ---------------------------------------------------------------------------


def vardim_pair_probs(ks: Mapping[int, int]) -> dict[tuple[int, int], float]:
    """Pairs ``(high, low)`` of chains with different ``k``, weighted by ``(dk)^-2``."""
    idx = sorted(ks)
    raw = {}
    for a_pos, a in enumerate(idx):
        for b in idx[a_pos + 1:]:
            if ks[a] != ks[b]:
                hi, lo = (a, b) if ks[a] > ks[b] else (b, a)
                raw[(hi, lo)] = 1.0 / (ks[a] - ks[b]) ** 2
    total = sum(raw.values())
    return {p: v / total for p, v in raw.items()}


def vardim_reassign(items_hi: Sequence, w_hi, items_lo: Sequence, w_lo):
    """Move the ``k_hi - k_lo`` lowest-weight items of the larger chain down.

    Items are ordered by increasing weight.  Weight vectors swap with the
    dimensions.

    Returns
    -------
    (new_items_hi, new_w_hi, new_items_lo, new_w_lo)
    """
    d = len(items_hi) - len(items_lo)
    if d <= 0:
        raise ValueError("first chain must have more components")
    return list(items_hi[d:]), w_lo, list(items_hi[:d]) + list(items_lo), w_hi


def fixeddim_pair_probs(ks: Mapping[int, int], zetas: Mapping[int, float]) -> dict[tuple[int, int], float]:
    """Same-``k`` pairs (``k >= 2``) weighted by ``|zeta_a - zeta_b|^-1``.

    Equal temperatures use the smallest positive gap in the population
    instead of an infinite weight; if every temperature is equal the law is
    uniform.
    """
    idx = sorted(ks)
    pairs = [(a, b) for p, a in enumerate(idx) for b in idx[p + 1:] if ks[a] == ks[b] and ks[a] >= 2]
    if not pairs:
        return {}
    zs = np.array([zetas[i] for i in idx])
    gaps = np.abs(zs[:, None] - zs[None, :])
    positive = gaps[gaps > 0]
    floor = positive.min() if positive.size else 1.0
    raw = {p: 1.0 / max(abs(zetas[p[0]] - zetas[p[1]]), floor) for p in pairs}
    total = sum(raw.values())
    return {p: v / total for p, v in raw.items()}


def position_probs(k: int) -> np.ndarray:
    """Crossover position ``j = 1..k-1`` with probability proportional to ``1/j``."""
    if k < 2:
        raise ValueError("a crossover position needs k >= 2")
    w = 1.0 / np.arange(1, k)
    return w / w.sum()


def fixeddim_swap(items_a: Sequence, items_b: Sequence, j: int):
    """Exchange the first ``j`` items of two equal-length sequences."""
    return list(items_b[:j]) + list(items_a[j:]), list(items_a[:j]) + list(items_b[j:])


def keys_sorted(keys) -> bool:
    """True when the rows of ``keys`` are in non-decreasing lexicographic order."""
    rows = [tuple(r) for r in np.atleast_2d(keys)]
    return all(rows[i] <= rows[i + 1] for i in range(len(rows) - 1))


# ---------------------------------------------------------------------------
# Mixture-specific ordering
# ---------------------------------------------------------------------------


def weight_order(s: mx.MixtureState) -> np.ndarray:
    """Labels in increasing-weight order."""
    return np.argsort(s.weights, kind="stable")


def mean_key_matrix(means, chols, weights) -> np.ndarray:
    """Sort keys: first mean coordinate, remaining means, Cholesky entries, weight."""
    q = means.shape[1]
    rows, cols = np.tril_indices(q)
    return np.column_stack([means, chols[:, rows, cols], weights])


def mean_order(s: mx.MixtureState) -> np.ndarray:
    K = mean_key_matrix(s.means, s.chols, s.weights)
    return np.lexsort(K.T[::-1])


def permute_labels(pop, rng):
    """Draw a uniform label permutation independently for every chain."""
    return pop.with_chains([s.permuted(rng.permutation(s.k)) for s in pop.chains])


def _state(weights, means, chols, psi, logf):
    return mx.MixtureState(weights, means, chols, psi, logf)


def _cols(logf, idx):
    return None if logf is None else logf[:, idx]


def _cat_cols(a, b):
    return None if a is None or b is None else np.concatenate([a, b], axis=1)


def _accept(log_a, rng) -> bool:
    return log_a >= 0.0 or math.log(rng.random()) < log_a


def _choose(probs: dict, rng):
    keys = list(probs)
    return keys[int(rng.choice(len(keys), p=np.fromiter(probs.values(), float)))]


# ---------------------------------------------------------------------------
# Moves
# ---------------------------------------------------------------------------


def crossover_variable_dim(pop, rng):
    """Variable-dimension crossover among the unconstrained chains.

    Returns
    -------
    (pop', MoveOutcome)
    """
    ks = {i: pop.chains[i].k for i in pop.free}
    probs = vardim_pair_probs(ks)
    if not probs:
        return permute_labels(pop, rng), MoveOutcome("crossover_vd", False, False)
    a, b = _choose(probs, rng)
    sa = pop.chains[a].permuted(weight_order(pop.chains[a]))
    sb = pop.chains[b].permuted(weight_order(pop.chains[b]))
    d = sa.k - sb.k
    new_a = _state(sb.weights, sa.means[d:], sa.chols[d:], sa.psi, _cols(sa.logf, slice(d, None)))
    new_b = _state(sa.weights, np.concatenate([sa.means[:d], sb.means]),
                   np.concatenate([sa.chols[:d], sb.chols]), sb.psi,
                   _cat_cols(_cols(sa.logf, slice(0, d)), sb.logf))
    new_ks = dict(ks)
    new_ks[a], new_ks[b] = new_a.k, new_b.k
    reverse = vardim_pair_probs(new_ks)[(b, a)]
    log_a = (pop.contexts[a].target_ratio(new_a, sa) + pop.contexts[b].target_ratio(new_b, sb)
             + math.log(reverse) - math.log(probs[(a, b)]))
    chains = list(pop.chains)
    accepted = _accept(log_a, rng)
    chains[a], chains[b] = (new_a, new_b) if accepted else (sa, sb)
    return permute_labels(pop.with_chains(chains), rng), MoveOutcome("crossover_vd", True, accepted, log_a, a)


def crossover_fixed_dim(pop, rng):
    """Fixed-dimension crossover between two chains with equal ``k``.

    Components are ordered by their first mean coordinate; the means and
    Cholesky factors of the first ``j`` components are exchanged, with
    immediate rejection if either proposed state breaks the ordering.
    """
    ks = {i: s.k for i, s in enumerate(pop.chains)}
    zetas = {i: c.zeta for i, c in enumerate(pop.contexts)}
    probs = fixeddim_pair_probs(ks, zetas)
    if not probs:
        return permute_labels(pop, rng), MoveOutcome("crossover_fd", False, False)
    a, b = _choose(probs, rng)
    sa = pop.chains[a].permuted(mean_order(pop.chains[a]))
    sb = pop.chains[b].permuted(mean_order(pop.chains[b]))
    k = sa.k
    j = 1 + int(rng.choice(k - 1, p=position_probs(k)))
    sw = np.r_[np.ones(j, bool), np.zeros(k - j, bool)]
    new_a = _state(sa.weights, np.where(sw[:, None], sb.means, sa.means),
                   np.where(sw[:, None, None], sb.chols, sa.chols), sa.psi,
                   None if sa.logf is None or sb.logf is None else np.where(sw[None, :], sb.logf, sa.logf))
    new_b = _state(sb.weights, np.where(sw[:, None], sa.means, sb.means),
                   np.where(sw[:, None, None], sa.chols, sb.chols), sb.psi,
                   None if sa.logf is None or sb.logf is None else np.where(sw[None, :], sa.logf, sb.logf))
    chains = list(pop.chains)
    ordered = all(keys_sorted(mean_key_matrix(s.means, s.chols, s.weights)) for s in (new_a, new_b))
    if not ordered:
        chains[a], chains[b] = sa, sb
        return permute_labels(pop.with_chains(chains), rng), MoveOutcome("crossover_fd", True, False, -math.inf, a)
    log_a = pop.contexts[a].target_ratio(new_a, sa) + pop.contexts[b].target_ratio(new_b, sb)
    accepted = _accept(log_a, rng)
    chains[a], chains[b] = (new_a, new_b) if accepted else (sa, sb)
    return permute_labels(pop.with_chains(chains), rng), MoveOutcome("crossover_fd", True, accepted, log_a, a)
