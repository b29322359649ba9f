"""Experiment pipelines: mixture samplers, variable-selection analyses, finite certificates.

Each pipeline is an ordinary function over library objects; the runner
adds configuration, traces and summaries on top.
"""

from __future__ import annotations

import dataclasses
import time
from dataclasses import dataclass
from pathlib import Path
from typing import Callable

import numpy as np

from .. import finite as F
from .. import mixture as mx
from .. import rjvanilla as rj
from ..population import (
    Ladder,
    Population,
    PopulationConfig,
    StConfig,
    ladder_geometric,
    ladder_tune_iba,
    pilot_mean_loglik,
    population_sweep,
    simulated_tempering_sweep,
    st_contexts,
)
from .diagnostics import EXCHANGE_KINDS
from .trace import MoveCounters

__all__ = [
    "three_clusters",
    "SYNTHETIC",
    "MixtureRun",
    "run_mixture_vanilla",
    "run_mixture_population",
    "run_mixture_st",
    "load_mixture_data",
    "build_hyper",
    "build_scales",
    "build_ladder",
    "build_population",
    "load_varsel_model",
    "varsel_run",
    "varsel_analyze",
    "prop1_canonical",
    "theorem1_canonical",
    "REFERENCE_PAIRS",
]

# ``(n0, epsilon) -> iterations`` pairs whose recomputation is reported by varsel-analyze
REFERENCE_PAIRS = (((20, 3.63e-3), 25326), ((1, 6.01e-4), 7660))


# ---------------------------------------------------------------------------
# Data, hyperparameters and population assembly
# ---------------------------------------------------------------------------


def three_clusters(n: int = 200, seed: int = 0) -> np.ndarray:
    """Two-dimensional points from three well separated Gaussian clusters."""
    rng = np.random.default_rng(seed)
    means = np.array([[0.0, 0.0], [4.0, 0.5], [1.5, 3.5]])
    sds = np.array([0.7, 0.9, 0.6])
    labels = rng.choice(3, size=n, p=[0.4, 0.35, 0.25])
    return means[labels] + sds[labels, None] * rng.standard_normal((n, 2))


SYNTHETIC: dict[str, Callable[..., np.ndarray]] = {"three_clusters": three_clusters}


def load_mixture_data(cfg) -> mx.Dataset:
    """Raw points from ``data_path`` or the named generator, then optional K-means/PCA reduction."""
    if cfg.data_path is not None:
        raw = np.loadtxt(cfg.data_path, delimiter=",", ndmin=2)
    else:
        if cfg.synthetic not in SYNTHETIC:
            raise ValueError(f"unknown synthetic data set {cfg.synthetic!r}")
        raw = SYNTHETIC[cfg.synthetic](cfg.n_points, cfg.data_seed)
    if cfg.preprocess_clusters is None and cfg.preprocess_dims is None:
        return mx.Dataset(raw)
    l = cfg.preprocess_clusters or raw.shape[0]
    q = cfg.preprocess_dims or raw.shape[1]
    return mx.preprocess(raw, l, q, np.random.default_rng(cfg.data_seed))


def build_hyper(cfg, data: mx.Dataset) -> mx.Hyperparams:
    h = mx.default_hyperparams(data, k_max=cfg.k_max, dof=cfg.dof)
    return dataclasses.replace(h, delta=cfg.delta) if cfg.delta != h.delta else h


def build_scales(cfg, data: mx.Dataset) -> rj.MoveScales:
    base = rj.MoveScales.default(data)
    known = {f.name for f in dataclasses.fields(rj.MoveScales)}
    unknown = set(cfg.scales) - known
    if unknown:
        raise ValueError(f"unknown move scales: {', '.join(sorted(unknown))}")
    return dataclasses.replace(base, **cfg.scales) if cfg.scales else base


def build_ladder(cfg, data, hyper, scales) -> Ladder:
    """Explicit temperatures, a geometric ladder, or one tuned from pilot runs."""
    if cfg.zetas is not None:
        return Ladder(np.asarray(cfg.zetas))
    if cfg.varsigma is not None:
        return ladder_geometric(cfg.n_chains, cfg.varsigma, cfg.varphi)
    if cfg.n_chains == 1:
        return Ladder(np.array([1.0]))
    pilot = pilot_mean_loglik(data, hyper, scales, cfg.pilot_sweeps, cfg.seed, k_start=cfg.k_start)
    return ladder_tune_iba(cfg.n_chains, pilot).ladder


def build_population(cfg, data, hyper, scales, rng) -> Population:
    ladder = build_ladder(cfg, data, hyper, scales)
    constrained = [(cfg.constrained_zeta, band) for band in cfg.bands]
    return Population.initialise(data, hyper, ladder, rng, constrained=constrained,
                                 lik_power=cfg.lik_power, scales=scales, k_start=cfg.k_start)


# ---------------------------------------------------------------------------
# Mixture samplers
# ---------------------------------------------------------------------------


@dataclass
class MixtureRun:
    """Recorded output of a mixture run (burn-in sweeps excluded).

    ``k`` is ``(sweeps, chains)``; ``exchange_hits`` flags sweeps with an
    accepted exchange; ``zeta_index`` is the temperature trace of a
    simulated-tempering run.  ``cpu_seconds`` is process time spent in the
    sampler, burn-in included, trace writing excluded.
    """

    k: np.ndarray
    counters: MoveCounters
    exchange_hits: np.ndarray
    cpu_seconds: float
    final: list
    zetas: np.ndarray
    zeta_index: np.ndarray | None = None


# called after every recorded sweep with (sweep, states, log_target(chain), counters)
SweepHook = Callable[[int, list, Callable[[int], float], MoveCounters], None]


def _drive(step, n_chains: int, sweeps: int, burn_in: int, on_sweep: SweepHook | None):
    counters = MoveCounters(n_chains)
    ks = np.empty((sweeps, n_chains), dtype=np.int64)
    hits = np.zeros(sweeps, dtype=bool)
    cpu = 0.0
    states = None
    for t in range(burn_in + sweeps):
        t0 = time.process_time()
        states, outs, default_chain, log_target = step()
        cpu += time.process_time() - t0
        if t < burn_in:
            continue
        u = t - burn_in
        counters.update(outs, default_chain)
        ks[u] = [s.k for s in states]
        hits[u] = any(o.kind in EXCHANGE_KINDS and o.accepted for o in outs)
        if on_sweep is not None:
            on_sweep(u, states, log_target, counters)
    return ks, counters, hits, cpu, states


def run_mixture_vanilla(data, hyper, scales, sweeps: int, rng, *, state=None, zeta: float = 1.0,
                        lik_power: float = 1.0, k_start: int = 1, burn_in: int = 0,
                        on_sweep: SweepHook | None = None) -> MixtureRun:
    """A single reversible-jump chain."""
    ctx = rj.ChainContext(data, hyper, zeta, lik_power)
    box = [state if state is not None else mx.random_state(hyper, k_start, rng)]

    def step():
        box[0], outs = rj.rj_sweep(box[0], ctx, scales, rng)
        return box, outs, 0, lambda i: ctx.log_target(box[0])

    ks, counters, hits, cpu, final = _drive(step, 1, sweeps, burn_in, on_sweep)
    return MixtureRun(ks, counters, hits, cpu, list(final), np.array([zeta]))


def run_mixture_population(pop: Population, sweeps: int, rng, *, config: PopulationConfig = PopulationConfig(),
                           burn_in: int = 0, on_sweep: SweepHook | None = None) -> MixtureRun:
    """A population run; every chain is recorded."""
    box = [pop]

    def step():
        box[0], outs = population_sweep(box[0], rng, config)
        p = box[0]
        return p.chains, outs, None, p.log_target

    ks, counters, hits, cpu, final = _drive(step, pop.n, sweeps, burn_in, on_sweep)
    return MixtureRun(ks, counters, hits, cpu, list(final), box[0].zetas, None)


def run_mixture_st(data, hyper, scales, st: StConfig, sweeps: int, rng, *, lik_power: float = 1.0,
                   k_start: int = 1, burn_in: int = 0, on_sweep: SweepHook | None = None) -> MixtureRun:
    """Simulated tempering; the trace log-target is the tempered target at the current temperature."""
    contexts = st_contexts(data, hyper, st, lik_power)
    box = [mx.random_state(hyper, k_start, rng)]
    idx = [0]
    trail = []

    def step():
        box[0], idx[0], outs = simulated_tempering_sweep(box[0], idx[0], st, contexts, scales, rng)
        trail.append(idx[0])
        return box, outs, 0, lambda i: contexts[idx[0]].log_target(box[0])

    ks, counters, hits, cpu, final = _drive(step, 1, sweeps, burn_in, on_sweep)
    return MixtureRun(ks, counters, hits, cpu, list(final), st.zetas, np.asarray(trail[burn_in:]))


# ---------------------------------------------------------------------------
# Variable selection
# ---------------------------------------------------------------------------


def load_varsel_model(name_or_path: str) -> F.VarselModel:
    """A packaged fixture by file name, or any CSV in the fixture layout."""
    p = Path(name_or_path)
    if p.exists():
        return F.load_varsel_csv(p)
    packaged = F.fixture_path(name_or_path)
    if not packaged.is_file():
        raise ValueError(f"no variable-selection data at {name_or_path!r}")
    return F.load_varsel_csv(packaged)


def varsel_run(model: F.VarselModel, zeta: float, sweeps: int, rng, burn_in: int = 0) -> dict:
    """Flip-chain run with its empirical model distribution against the exact posterior."""
    t0 = time.process_time()
    states, accepts = F.simulate_flip_chain(model, zeta, sweeps, rng, burn_in=burn_in, with_accepts=True)
    cpu = time.process_time() - t0
    exact = F.exact_posterior(model, zeta)
    empirical = np.bincount(states, minlength=exact.size) / states.size
    sizes = np.array([bin(int(s)).count("1") for s in range(exact.size)])
    return {
        "states": states,
        "accepts": accepts,
        "sizes": sizes[states],
        "empirical": empirical,
        "exact": exact,
        "tv_to_exact": F.tv_distance(empirical, exact),
        "cpu_seconds": cpu,
    }


def varsel_analyze(model: F.VarselModel, *, zeta: float = 1.0, hot_zeta: float = 0.01,
                   sweeps_each: int = 10, cpu_ratio: float = 50.0, n0_grid=(1, 10, 100, 1000),
                   delta: float = 0.01) -> dict:
    """Iteration bounds for the vanilla flip sampler and the two-chain population sampler.

    The vanilla bound minimises ``n0``-step iteration counts over ``n0_grid``
    and scales them by ``cpu_ratio`` (the cost of one population composite
    in vanilla sweeps).  The population bound uses the small-set constant of
    ``sweeps_each`` hot sweeps, an exchange, then ``sweeps_each`` sweeps.
    """
    K1 = F.build_flip_kernel(model, zeta, sweep=True)
    K2 = F.build_flip_kernel(model, hot_zeta, sweep=True)
    pi1, pi2 = K1.target, K2.target
    m_van, n0_van, eps_van = F.best_vanilla_bound(K1, n0_grid, delta=delta, cpu_ratio=cpu_ratio)
    pair = F.minorization_pair(K2.power(sweeps_each), 1)
    eps_star, phi, rho1 = F.population_minorization_constant(pair, pi1, pi2)
    m_pop = F.tv_bound_iterations(1, eps_star, delta)
    return {
        "epsilon": pair.epsilon,
        "phi": phi,
        "rho1": rho1,
        "epsilon_star": eps_star,
        "M_population": m_pop,
        "M_vanilla": m_van,
        "vanilla_n0": n0_van,
        "vanilla_epsilon": eps_van,
        "reference_pairs": [
            {"n0": n0, "epsilon": eps, "M": F.tv_bound_iterations(n0, eps, delta), "expected": want}
            for (n0, eps), want in REFERENCE_PAIRS
        ],
    }


# ---------------------------------------------------------------------------
# Finite certificates
# ---------------------------------------------------------------------------


def prop1_canonical(loglik=(0.0, 1.0, 2.0), logprior=(0.0, 0.0, 0.0), zeta2: float = 0.5,
                    mh_steps: int = 2, dps: int = 50, n_max: int = 50) -> list[F.Prop1Report]:
    """Contraction bound from every point-mass start on a two-chain tempered toy."""
    K1, K2, p1, p2 = F.tempered_pair_toy(list(loglik), list(logprior), zeta2, mh_steps, dps=dps)
    KM = np.kron(K1, K2)
    size = KM.shape[0]
    return [F.prop1_verify(KM, {(0, 1): 1.0}, [p1, p2], np.eye(size)[s], n_max) for s in range(size)]


def theorem1_canonical(loglik=(0.0, 1.5, 3.0, 0.5), logprior=(0.0, 0.2, -0.4, 0.1), zeta2: float = 0.2,
                       mh_steps: int = 1, sweeps_each: int = 1) -> F.Theorem1Report:
    """Small-set certificate of the mutate-exchange-mutate composite on a two-chain toy."""
    K1, K2, p1, p2 = F.tempered_pair_toy(list(loglik), list(logprior), zeta2, mh_steps)
    Kpop = F.build_population_pair_kernel(K1, K2, sweeps_each)
    pair = F.minorization_pair(K2.power(sweeps_each), 1)
    theta, nu_star = F.theorem1_nu_star(K1.power(sweeps_each), pair, p1, p2)
    return F.theorem1_verify(Kpop, theta, nu_star)
