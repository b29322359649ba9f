"""Exchange moves between population members.

The acceptance algebra is written against a generic ``log_pi(i, x)``
callback (log target of chain ``i`` at state ``x``, up to a constant) so the
same functions drive both the mixture sampler and the exact finite-state
kernels in :mod:`poprj.population.exact`.
"""

from __future__ import annotations

import itertools
import math
from typing import Callable, Sequence

import numpy as np

from ..rjvanilla import MoveOutcome

__all__ = [
    "swap_log_ratio",
    "log_one_minus_accept",
    "dr_pair_sets",
    "dr_second_stage_log_ratio",
    "legal_constrained_pairs",
    "exchange_basic",
    "exchange_delayed_rejection",
    "constrained_exchange",
]

LogPi = Callable[[int, object], float]


def _swapped(states: Sequence, i: int, l: int) -> list:
    out = list(states)
    out[i], out[l] = out[l], out[i]
    return out


def swap_log_ratio(log_pi: LogPi, states: Sequence, i: int, l: int) -> float:
    """``log [pi_i(x_l) pi_l(x_i) / (pi_i(x_i) pi_l(x_l))]``."""
    return log_pi(i, states[l]) + log_pi(l, states[i]) - log_pi(i, states[i]) - log_pi(l, states[l])


def log_one_minus_accept(log_ratio: float) -> float:
    """``log(1 - min(1, exp(log_ratio)))``."""
    if log_ratio >= 0:
        return -math.inf
    return math.log(-math.expm1(log_ratio))


def dr_pair_sets(order: Sequence[int]) -> tuple[list[tuple[int, int]], list[tuple[int, int]]]:
    """Stage-one pairs (all unordered pairs) and stage-two pairs (ladder neighbours)."""
    order = list(order)
    return list(itertools.combinations(order, 2)), list(zip(order[:-1], order[1:]))


def dr_second_stage_log_ratio(log_pi: LogPi, states: Sequence, pair1, pair2) -> float:
    """Log acceptance ratio of the second-stage swap ``pair2`` after ``pair1`` was rejected.

    The pseudo move starts at the second-stage proposal, swaps ``pair1``
    there and is rejected with probability ``1 - rho_1``.  When the two
    pairs coincide the ratio is ``-inf``.
    """
    r1 = swap_log_ratio(log_pi, states, *pair1)
    second = _swapped(states, *pair2)
    r1_pseudo = swap_log_ratio(log_pi, second, *pair1)
    num = log_one_minus_accept(r1_pseudo)
    if num == -math.inf:
        return -math.inf
    return swap_log_ratio(log_pi, states, *pair2) + num - log_one_minus_accept(r1)


def legal_constrained_pairs(ks: Sequence[int], bands: Sequence, constrained: Sequence[int],
                            free: Sequence[int]) -> list[tuple[int, int]]:
    """Pairs ``(c, u)`` of a constrained and a free chain that may swap.

    ``bands[i]`` is ``(lo, hi)`` or ``None``; a swap is legal when each
    chain's ``k`` lies in the other's band.
    """
    def ok(k, band):
        return band is None or band[0] <= k <= band[1]

    return [(c, u) for c in constrained for u in free if ok(ks[u], bands[c]) and ok(ks[c], bands[u])]


def _accept(log_a: float, rng) -> bool:
    return log_a >= 0.0 or math.log(rng.random()) < log_a


def exchange_basic(pop, i: int, l: int, rng):
    """Propose swapping the states of chains ``i`` and ``l``.

    Returns
    -------
    (pop', MoveOutcome)
    """
    if i == l:
        raise ValueError("exchange needs two distinct chains")
    ks = pop.ks
    if not (pop.in_band(i, ks[l]) and pop.in_band(l, ks[i])):
        raise ValueError(f"swap of chains {i} and {l} would violate a dimension constraint")
    log_a = swap_log_ratio(pop.log_pi, pop.chains, i, l)
    if _accept(log_a, rng):
        return pop.with_chains(_swapped(pop.chains, i, l)), MoveOutcome("exchange", True, True, log_a, i)
    return pop, MoveOutcome("exchange", True, False, log_a, i)


def exchange_delayed_rejection(pop, rng):
    """Two-stage exchange among the unconstrained chains.

    Stage one swaps a uniformly chosen pair; if rejected, stage two swaps a
    uniformly chosen ladder-adjacent pair with the delayed-rejection ratio.

    Returns
    -------
    (pop', outcomes)
    """
    free = pop.free
    if len(free) < 2:
        return pop, []
    pairs1, pairs2 = dr_pair_sets(free)
    p1 = pairs1[int(rng.integers(len(pairs1)))]
    r1 = swap_log_ratio(pop.log_pi, pop.chains, *p1)
    if _accept(r1, rng):
        return pop.with_chains(_swapped(pop.chains, *p1)), [MoveOutcome("exchange_dr1", True, True, r1, p1[0])]
    out = [MoveOutcome("exchange_dr1", True, False, r1, p1[0])]
    p2 = pairs2[int(rng.integers(len(pairs2)))]
    r2 = dr_second_stage_log_ratio(pop.log_pi, pop.chains, p1, p2)
    if _accept(r2, rng):
        out.append(MoveOutcome("exchange_dr2", True, True, r2, p2[0]))
        return pop.with_chains(_swapped(pop.chains, *p2)), out
    out.append(MoveOutcome("exchange_dr2", True, False, r2, p2[0]))
    return pop, out


def constrained_exchange(pop, rng):
    """Swap a constrained chain with a free one, uniformly over legal pairs.

    The acceptance includes ``n_legal(now) / n_legal(after)`` so the pair
    law of the reverse move is accounted for.
    """
    ks = pop.ks
    legal = legal_constrained_pairs(ks, pop.bands, pop.constrained, pop.free)
    if not legal:
        return pop, MoveOutcome("exchange_constrained", False, False)
    c, u = legal[int(rng.integers(len(legal)))]
    new_ks = list(ks)
    new_ks[c], new_ks[u] = ks[u], ks[c]
    n_after = len(legal_constrained_pairs(new_ks, pop.bands, pop.constrained, pop.free))
    log_a = swap_log_ratio(pop.log_pi, pop.chains, c, u) + math.log(len(legal)) - math.log(n_after)
    if _accept(log_a, rng):
        return pop.with_chains(_swapped(pop.chains, c, u)), MoveOutcome("exchange_constrained", True, True, log_a, c)
    return pop, MoveOutcome("exchange_constrained", True, False, log_a, c)
