"""Exact transition matrices of population moves on small discrete toys.

Each builder enumerates the product space and assembles the move's
kernel from the same selection and acceptance functions the samplers
use, so stationarity and reversibility can be checked to machine
precision.
"""

from __future__ import annotations

import itertools
import math
from typing import Callable, Sequence

import numpy as np

from .crossover import (
    fixeddim_pair_probs,
    fixeddim_swap,
    keys_sorted,
    position_probs,
    vardim_pair_probs,
    vardim_reassign,
)
from .exchange import dr_pair_sets, dr_second_stage_log_ratio, swap_log_ratio

__all__ = [
    "product_space",
    "product_target",
    "exchange_basic_matrix",
    "dr_exchange_matrix",
    "ToyMixtureSpace",
    "crossover_matrix",
]

LogPi = Callable[[int, object], float]


def product_space(states: Sequence, n_chains: int) -> list[tuple]:
    return list(itertools.product(states, repeat=n_chains))


def product_target(log_pi: LogPi, space: Sequence[tuple]) -> np.ndarray:
    """Normalised product target over an enumerated space."""
    logp = np.array([sum(log_pi(i, x) for i, x in enumerate(xs)) for xs in space])
    p = np.exp(logp - logp.max())
    return p / p.sum()


def _accept_prob(log_a: float) -> float:
    return 1.0 if log_a >= 0 else math.exp(log_a)


def _swap(xs, i, l):
    out = list(xs)
    out[i], out[l] = out[l], out[i]
    return tuple(out)


def exchange_basic_matrix(log_pi: LogPi, space: Sequence[tuple], pair_weights: dict) -> np.ndarray:
    """Kernel of a basic exchange with pair ``(i, l)`` chosen with ``pair_weights``."""
    index = {xs: n for n, xs in enumerate(space)}
    T = np.zeros((len(space), len(space)))
    for n, xs in enumerate(space):
        for (i, l), w in pair_weights.items():
            a = _accept_prob(swap_log_ratio(log_pi, xs, i, l))
            T[n, index[_swap(xs, i, l)]] += w * a
            T[n, n] += w * (1.0 - a)
    return T


def dr_exchange_matrix(log_pi: LogPi, space: Sequence[tuple], n_chains: int) -> np.ndarray:
    """Kernel of the two-stage (delayed-rejection) exchange over all chains."""
    pairs1, pairs2 = dr_pair_sets(range(n_chains))
    index = {xs: n for n, xs in enumerate(space)}
    T = np.zeros((len(space), len(space)))
    for n, xs in enumerate(space):
        for p1 in pairs1:
            w1 = 1.0 / len(pairs1)
            a1 = _accept_prob(swap_log_ratio(log_pi, xs, *p1))
            T[n, index[_swap(xs, *p1)]] += w1 * a1
            for p2 in pairs2:
                w2 = w1 * (1.0 - a1) / len(pairs2)
                a2 = _accept_prob(dr_second_stage_log_ratio(log_pi, xs, p1, p2))
                T[n, index[_swap(xs, *p2)]] += w2 * a2
                T[n, n] += w2 * (1.0 - a2)
    return T


class ToyMixtureSpace:
    """Discrete stand-in for mixture states.

    A state is a tuple of ``(item, weight)`` components with ``k`` in
    ``1..len(weight_sets)``; items come from ``alphabet`` and the weight
    vector for ``k`` components is a permutation of ``weight_sets[k-1]``
    (entries distinct, so every state has exactly ``k!`` relabellings).
    """

    def __init__(self, alphabet=(0, 1), weight_sets=((1.0,), (0.3, 0.7), (0.2, 0.3, 0.5))):
        self.alphabet = tuple(alphabet)
        self.weight_sets = tuple(tuple(w) for w in weight_sets)
        states = []
        for k, ws in enumerate(self.weight_sets, start=1):
            for items in itertools.product(self.alphabet, repeat=k):
                for wperm in sorted(set(itertools.permutations(ws))):
                    states.append(tuple(zip(items, wperm)))
        self.states = states

    @staticmethod
    def by_weight(state):
        return tuple(sorted(state, key=lambda c: c[1]))

    @staticmethod
    def by_item(state):
        return tuple(sorted(state))

    @staticmethod
    def relabellings(state):
        return list(itertools.permutations(state))


def _relabel_mass(space_index, xs, mass, out_row):
    """Spread ``mass`` over the uniform relabellings of every chain of ``xs``."""
    per_chain = [ToyMixtureSpace.relabellings(s) for s in xs]
    share = mass / math.prod(len(p) for p in per_chain)
    for combo in itertools.product(*per_chain):
        out_row[space_index[tuple(combo)]] += share


def crossover_matrix(log_pi: LogPi, toy: ToyMixtureSpace, space: Sequence[tuple], zetas, kind: str) -> np.ndarray:
    """Composite kernel: canonical relabelling, crossover MH step, uniform relabelling.

    ``kind`` is ``"variable"`` (weight order, dimension reassignment) or
    ``"fixed"`` (item order, prefix swap with rejection of unordered
    proposals).  ``log_pi`` must be invariant to relabelling.
    """
    index = {xs: n for n, xs in enumerate(space)}
    T = np.zeros((len(space), len(space)))
    n_chains = len(space[0])
    for n, xs in enumerate(space):
        ks = {i: len(s) for i, s in enumerate(xs)}
        if kind == "variable":
            ys = tuple(toy.by_weight(s) for s in xs)
            probs = vardim_pair_probs(ks)
        elif kind == "fixed":
            ys = tuple(toy.by_item(s) for s in xs)
            probs = fixeddim_pair_probs(ks, dict(enumerate(zetas)))
        else:
            raise ValueError(f"unknown crossover kind {kind!r}")
        if not probs:
            _relabel_mass(index, ys, 1.0, T[n])
            continue
        for (a, b), p in probs.items():
            proposals = []
            if kind == "variable":
                items_a = [c[0] for c in ys[a]]
                items_b = [c[0] for c in ys[b]]
                wa = [c[1] for c in ys[a]]
                wb = [c[1] for c in ys[b]]
                ia, new_wa, ib, new_wb = vardim_reassign(items_a, wa, items_b, wb)
                new = list(ys)
                new[a] = tuple(zip(ia, new_wa))
                new[b] = tuple(zip(ib, new_wb))
                new_ks = dict(ks)
                new_ks[a], new_ks[b] = len(new[a]), len(new[b])
                log_sel = math.log(vardim_pair_probs(new_ks)[(b, a)]) - math.log(p)
                proposals.append((1.0, tuple(new), log_sel, True))
            else:
                k = ks[a]
                for j, pj in zip(range(1, k), position_probs(k)):
                    items_a = [c[0] for c in ys[a]]
                    items_b = [c[0] for c in ys[b]]
                    na, nb = fixeddim_swap(items_a, items_b, j)
                    new = list(ys)
                    new[a] = tuple(zip(na, (c[1] for c in ys[a])))
                    new[b] = tuple(zip(nb, (c[1] for c in ys[b])))
                    ordered = keys_sorted(new[a]) and keys_sorted(new[b])
                    proposals.append((pj, tuple(new), 0.0, ordered))
            for pj, new, log_sel, ok in proposals:
                mass = p * pj
                if not ok:
                    _relabel_mass(index, ys, mass, T[n])
                    continue
                log_a = sum(log_pi(i, new[i]) - log_pi(i, ys[i]) for i in range(n_chains)) + log_sel
                acc = _accept_prob(log_a)
                _relabel_mass(index, new, mass * acc, T[n])
                _relabel_mass(index, ys, mass * (1.0 - acc), T[n])
    return T
