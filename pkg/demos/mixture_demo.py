#!/usr/bin/env python3
"""Compare the single-chain, population and tempering samplers on one data set.

Each sampler runs from its config in ``demos/configs`` with a short sweep
budget. The script prints the posterior over the number of components,
the move acceptance rates for the target chain, and the effective sample
size of the ``k`` trace per CPU second.

Simulated tempering only moves between temperatures when the pseudo-prior
masses roughly cancel the normalising constants. The script estimates
them by thermodynamic integration, ``log Z(zeta) = -int_zeta^1 E_t[loglik] dt``
up to a constant, reading ``E_t[loglik]`` off a short population run on a
grid of temperatures.

Usage: ``python demos/mixture_demo.py [--sweeps N] [--out DIR]``
"""

from __future__ import annotations

import argparse
from pathlib import Path

import numpy as np

from poprj.harness import experiments as X
from poprj.harness import load_config, run
from poprj.population import Population
from poprj.rjvanilla import ChainContext
from poprj.statcore import rng_stream

HERE = Path(__file__).resolve().parent


def show(name: str, summary: dict) -> None:
    hist = summary["k_histogram"]
    ess = summary["ess"]["k"]["full"]
    cpu = summary["process_time_s"]
    print(f"\n{name}: {summary['sweeps']} sweeps, {cpu:.1f} s CPU, ladder {[round(z, 3) for z in summary['zetas']]}")
    print("  P(k):", "  ".join(f"{k}:{p:.3f}" for k, p in sorted(hist.items(), key=lambda kv: int(kv[0]))))
    rates = summary["acceptance"]["per_chain"].get("0", {})
    print("  chain-0 acceptance:", ", ".join(f"{kind} {r:.2f}" for kind, r in rates.items()))
    if ess is not None:
        print(f"  ESS(k) = {ess['value']:.1f} of {ess['n']} ({ess['flag'] or 'ok'}), "
              f"{ess['value'] / max(cpu, 1e-9):.1f} per CPU second")
    if summary.get("exchange_success_fraction") is not None:
        print(f"  sweeps with an accepted exchange: {summary['exchange_success_fraction']:.2f}")
    if "temperature_occupancy" in summary:
        print("  temperature occupancy:", [round(x, 3) for x in summary["temperature_occupancy"]])


def pseudo_prior_masses(cfg, n_grid: int = 8, sweeps: int = 800, burn_in: int = 200) -> tuple[float, ...]:
    """Masses proportional to ``1 / Z(zeta)`` from a population run over a temperature grid."""
    data = X.load_mixture_data(cfg)
    hyper, scales = X.build_hyper(cfg, data), X.build_scales(cfg, data)
    zetas = np.asarray(cfg.zetas)
    grid = np.linspace(1.0, zetas.min(), n_grid)
    rng = rng_stream(cfg.seed, 1)
    pop = Population.initialise(data, hyper, grid, rng, scales=scales, k_start=3)
    plain = ChainContext(data, hyper, 1.0)
    sums = np.zeros(n_grid)

    def collect(sweep, states, log_target, counters):
        sums[:] += [plain.loglik(s) for s in states]

    X.run_mixture_population(pop, sweeps, rng, burn_in=burn_in, on_sweep=collect)
    ell = sums / sweeps
    # grid runs from 1 down, so the cumulative trapezoid gives int_zeta^1 E_t[loglik] dt
    tail = np.concatenate([[0.0], np.cumsum(0.5 * (ell[1:] + ell[:-1]) * -np.diff(grid))])
    log_z = np.interp(zetas, grid[::-1], -tail[::-1])
    log_m = -log_z - (-log_z).max()
    return tuple(np.exp(log_m))


def main() -> None:
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--sweeps", type=int, default=500)
    ap.add_argument("--out", default="runs/demo")
    args = ap.parse_args()
    for name in ("vanilla", "population", "tempering"):
        cfg = load_config(HERE / "configs" / f"{name}.ini").with_overrides(
            sweeps=args.sweeps, burn_in=args.sweeps // 10, out=str(Path(args.out) / name))
        if name == "tempering":
            cfg = cfg.with_overrides(st_masses=pseudo_prior_masses(cfg))
        res = run(cfg)
        show(name, res.summary)
        print(f"  artifacts in {res.out_dir}")


if __name__ == "__main__":
    main()
