"""The population container: chains, temperatures, dimension bands."""

from __future__ import annotations

from dataclasses import dataclass, replace
from typing import Sequence

import numpy as np

from .. import mixture as mx
from ..rjvanilla import ChainContext, MoveScales
from .ladder import Ladder

__all__ = ["Population", "DEFAULT_BANDS", "DEFAULT_CONSTRAINED_ZETA"]

DEFAULT_BANDS = ((2, 4), (4, 6), (5, 7), (7, 9), (9, 11))
DEFAULT_CONSTRAINED_ZETA = 0.999


@dataclass
class Population:
    """``N`` tempered chains over one data set.

    Chains ``0 .. n_free - 1`` follow the ladder (chain 0 is the chain of
    interest at ``zeta = 1``); any further chains are constrained to a band
    of ``k`` values.  States are treated as immutable: moves build new
    :class:`~poprj.mixture.MixtureState` objects.
    """

    chains: list[mx.MixtureState]
    contexts: list[ChainContext]
    scales: MoveScales
    n_free: int
    mutation_weights: np.ndarray | None = None

    def __post_init__(self):
        if len(self.chains) != len(self.contexts):
            raise ValueError("one context per chain is required")
        if not 1 <= self.n_free <= len(self.chains):
            raise ValueError("need at least one unconstrained chain")
        if self.mutation_weights is not None:
            w = np.asarray(self.mutation_weights, dtype=float)
            if w.shape != (self.n,) or np.any(w < 0) or abs(w.sum() - 1.0) > 1e-12:
                raise ValueError("mutation weights must be a probability vector over chains")
            self.mutation_weights = w

    @classmethod
    def create(cls, data: mx.Dataset, hyper: mx.Hyperparams, ladder: Ladder | Sequence[float],
               chains: Sequence[mx.MixtureState], *, constrained: Sequence[tuple[float, tuple[int, int]]] = (),
               lik_power: float = 1.0, scales: MoveScales | None = None,
               mutation_weights=None) -> "Population":
        """Assemble a population.

        ``constrained`` lists ``(zeta, (k_lo, k_hi))`` for each constrained
        chain; ``chains`` holds the ladder chains followed by those.
        """
        zetas = ladder.zetas if isinstance(ladder, Ladder) else Ladder(np.asarray(ladder)).zetas
        if len(chains) != len(zetas) + len(constrained):
            raise ValueError("number of chains does not match ladder plus constrained chains")
        contexts = [ChainContext(data, hyper, float(z), lik_power) for z in zetas]
        contexts += [ChainContext(data, hyper, float(z), lik_power, k_lo=b[0], k_hi=b[1])
                     for z, b in constrained]
        pop = cls(list(chains), contexts, scales or MoveScales.default(data), len(zetas), mutation_weights)
        pop.validate()
        return pop

    @classmethod
    def initialise(cls, data, hyper, ladder, rng, *, constrained=(), lik_power=1.0, scales=None,
                   k_start: int = 1, mutation_weights=None) -> "Population":
        """Population with prior draws: free chains at ``k_start``, constrained at their lower bound."""
        n_free = len(ladder.zetas if isinstance(ladder, Ladder) else ladder)
        chains = [mx.random_state(hyper, k_start, rng) for _ in range(n_free)]
        chains += [mx.random_state(hyper, b[0], rng) for _, b in constrained]
        return cls.create(data, hyper, ladder, chains, constrained=constrained, lik_power=lik_power,
                          scales=scales, mutation_weights=mutation_weights)

    # -- views --------------------------------------------------------------

    @property
    def n(self) -> int:
        return len(self.chains)

    @property
    def zetas(self) -> np.ndarray:
        return np.array([c.zeta for c in self.contexts])

    @property
    def ks(self) -> list[int]:
        return [s.k for s in self.chains]

    @property
    def free(self) -> list[int]:
        return list(range(self.n_free))

    @property
    def constrained(self) -> list[int]:
        return list(range(self.n_free, self.n))

    @property
    def bands(self) -> list[tuple[int, int] | None]:
        return [None if i < self.n_free else (c.k_lo, c.k_hi) for i, c in enumerate(self.contexts)]

    @property
    def k_max(self) -> int:
        return self.contexts[0].hyper.k_max

    def in_band(self, i: int, k: int) -> bool:
        c = self.contexts[i]
        return c.k_lo <= k <= c.k_hi

    def log_pi(self, i: int, state: mx.MixtureState) -> float:
        """Tempered log likelihood of ``state`` under chain ``i``.

        Priors are shared by all chains, so this is all exchange ratios need.
        """
        ctx = self.contexts[i]
        return 0.0 if ctx.power == 0.0 else ctx.power * ctx.loglik(state)

    def log_target(self, i: int, state: mx.MixtureState | None = None) -> float:
        return self.contexts[i].log_target(self.chains[i] if state is None else state)

    def with_chains(self, chains) -> "Population":
        return replace(self, chains=list(chains))

    def replace_chain(self, i: int, state: mx.MixtureState) -> "Population":
        chains = list(self.chains)
        chains[i] = state
        return self.with_chains(chains)

    def validate(self) -> None:
        for i, s in enumerate(self.chains):
            s.validate(self.k_max)
            if not self.in_band(i, s.k):
                raise ValueError(f"chain {i} has k={s.k} outside its band")
