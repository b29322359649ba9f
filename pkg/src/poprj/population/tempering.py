"""Simulated tempering over a temperature grid, the single-chain comparator."""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .. import rjvanilla as rj
from ..rjvanilla import ChainContext, MoveOutcome
from .exchange import log_one_minus_accept

__all__ = ["StConfig", "st_contexts", "st_log_ratio", "simulated_tempering_sweep"]


@dataclass(frozen=True)
class StConfig:
    """Temperature grid (decreasing, starting at 1) and pseudo-prior masses.

    Masses default to ``p(zeta_i) proportional to 1/i``.
    """

    zetas: np.ndarray
    masses: np.ndarray | None = None

    def __post_init__(self):
        z = np.asarray(self.zetas, dtype=float).ravel()
        if z.size == 0 or z[0] != 1.0 or np.any(np.diff(z) >= 0) or z[-1] <= 0:
            raise ValueError("grid must start at 1 and strictly decrease to a positive value")
        m = 1.0 / np.arange(1, z.size + 1) if self.masses is None else np.asarray(self.masses, dtype=float)
        if m.shape != z.shape or np.any(m <= 0):
            raise ValueError("one positive mass per temperature is required")
        object.__setattr__(self, "zetas", z)
        object.__setattr__(self, "masses", m / m.sum())

    @property
    def log_masses(self) -> np.ndarray:
        return np.log(self.masses)

    def neighbours(self, idx: int) -> list[int]:
        return [j for j in (idx - 1, idx + 1) if 0 <= j < self.zetas.size]


def st_contexts(data, hyper, cfg: StConfig, lik_power: float = 1.0) -> list[ChainContext]:
    """One chain context per grid temperature."""
    return [ChainContext(data, hyper, float(z), lik_power) for z in cfg.zetas]


def st_log_ratio(cfg: StConfig, loglik_power: float, i: int, j: int) -> float:
    """Log ratio of the joint target at temperature ``j`` over ``i`` for a fixed state.

    ``loglik_power`` is the likelihood exponent times the log likelihood.
    """
    return (cfg.zetas[j] - cfg.zetas[i]) * loglik_power + cfg.log_masses[j] - cfg.log_masses[i]


def simulated_tempering_sweep(state, zeta_index: int, cfg: StConfig, contexts, scales, rng):
    """A vanilla sweep at the current temperature, then a two-stage temperature move.

    Stage one proposes any other grid temperature uniformly.  If rejected,
    stage two proposes a grid neighbour of the current temperature with the
    delayed-rejection correction for the pseudo move back to the stage-one
    proposal.

    Returns
    -------
    (state', zeta_index', outcomes)
    """
    ctx = contexts[zeta_index]
    state, outcomes = rj.rj_sweep(state, ctx, scales, rng)
    n = cfg.zetas.size
    if n == 1:
        return state, zeta_index, outcomes
    ell = ctx.lik_power * ctx.loglik(state) if ctx.lik_power > 0 else 0.0
    i = zeta_index
    others = [j for j in range(n) if j != i]
    j1 = others[int(rng.integers(n - 1))]
    r1 = st_log_ratio(cfg, ell, i, j1)
    if r1 >= 0 or math.log(rng.random()) < r1:
        outcomes.append(MoveOutcome("temperature_dr1", True, True, r1))
        return state, j1, outcomes
    outcomes.append(MoveOutcome("temperature_dr1", True, False, r1))
    nbrs = cfg.neighbours(i)
    j2 = nbrs[int(rng.integers(len(nbrs)))]
    if j2 == j1:
        r2 = -math.inf
    else:
        r2 = (st_log_ratio(cfg, ell, i, j2) + math.log(len(nbrs)) - math.log(len(cfg.neighbours(j2)))
              + log_one_minus_accept(st_log_ratio(cfg, ell, j2, j1)) - log_one_minus_accept(r1))
    if r2 >= 0 or math.log(rng.random()) < r2:
        outcomes.append(MoveOutcome("temperature_dr2", True, True, r2))
        return state, j2, outcomes
    outcomes.append(MoveOutcome("temperature_dr2", True, False, r2))
    return state, i, outcomes
