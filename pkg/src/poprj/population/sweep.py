"""One population sweep: mutation, crossover or snooker, exchanges."""

from __future__ import annotations

from dataclasses import dataclass

from .. import rjvanilla as rj
from .crossover import crossover_fixed_dim, crossover_variable_dim
from .exchange import constrained_exchange, exchange_basic, exchange_delayed_rejection
from .snooker import snooker_birth_death

__all__ = ["PopulationConfig", "population_sweep"]


@dataclass(frozen=True)
class PopulationConfig:
    """Driver switches.

    ``exchange_after_crossover`` adds a basic exchange between the chain of
    interest and its ladder neighbour whenever a crossover (of either kind)
    was selected.
    """

    exchange_after_crossover: bool = False


def _tag(outcome, chain):
    # mutation outcomes are fresh objects, so tagging in place is safe
    outcome.chain = chain
    return outcome


def population_sweep(pop, rng, config: PopulationConfig = PopulationConfig()):
    """Advance every population move once.

    1. mutate one chain (drawn from the mutation weights, uniform by default)
       with a vanilla reversible-jump sweep at its temperature and band;
    2. flip a fair coin between a crossover (variable-dimension with
       probability one half, otherwise fixed-dimension) and a snooker
       birth/death;
    3. run the delayed-rejection exchange, then the constrained exchange
       when constrained chains exist.

    A single-chain population reduces to step 1.

    Returns
    -------
    (pop', outcomes)
    """
    outcomes = []
    if pop.mutation_weights is None:
        i = int(rng.integers(pop.n))
    else:
        i = int(rng.choice(pop.n, p=pop.mutation_weights))
    state, outs = rj.rj_sweep(pop.chains[i], pop.contexts[i], pop.scales, rng)
    pop = pop.replace_chain(i, state)
    outcomes += [_tag(o, i) for o in outs]
    if pop.n == 1:
        return pop, outcomes

    if rng.random() < 0.5:
        move = crossover_variable_dim if rng.random() < 0.5 else crossover_fixed_dim
        pop, out = move(pop, rng)
        outcomes.append(out)
        if config.exchange_after_crossover and pop.n_free >= 2:
            pop, out = exchange_basic(pop, 0, 1, rng)
            outcomes.append(out)
    else:
        pop, out = snooker_birth_death(pop, rng)
        outcomes.append(out)

    pop, outs = exchange_delayed_rejection(pop, rng)
    outcomes += outs
    if pop.constrained:
        pop, out = constrained_exchange(pop, rng)
        outcomes.append(out)
    return pop, outcomes
