"""Run one configured experiment and write its artifacts.

Every run directory holds ``config.ini`` (the configuration text, verbatim),
``config.json`` (every resolved setting) and ``summary.json``; sampler kinds
add ``trace.csv`` and the proposition check adds ``series.csv``.  The summary
keys are documented in ``docs/summary.md``.
"""

from __future__ import annotations

import csv
import json
import logging
import math
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from ..finite import log_target_vector
from ..population import PopulationConfig, StConfig
from ..statcore import rng_stream
from . import experiments as X
from .config import RunConfig
from .diagnostics import acceptance_report, ess_report
from .trace import TraceRecord, TraceWriter

__all__ = ["EXIT_OK", "EXIT_CONFIG", "EXIT_NONFINITE", "NonFiniteTargetError", "RunResult", "run"]

log = logging.getLogger(__name__)

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_NONFINITE = 3


class NonFiniteTargetError(RuntimeError):
    """A chain's log-target evaluated to NaN."""

    def __init__(self, sweep: int, chain: int, state):
        super().__init__(f"log-target is NaN for chain {chain} at sweep {sweep}")
        self.sweep, self.chain, self.state = sweep, chain, state


@dataclass
class RunResult:
    status: int
    out_dir: Path
    summary: dict | None = None


def _default_out(cfg: RunConfig) -> Path:
    return Path("runs") / f"{cfg.kind}-seed{cfg.seed}"


def _jsonable(x):
    if isinstance(x, dict):
        return {str(k): _jsonable(v) for k, v in x.items()}
    if isinstance(x, (list, tuple)):
        return [_jsonable(v) for v in x]
    if isinstance(x, np.ndarray):
        return _jsonable(x.tolist())
    if isinstance(x, (np.integer,)):
        return int(x)
    if isinstance(x, (float, np.floating)):
        x = float(x)
        return x if math.isfinite(x) else None
    return x


def _dump_json(path: Path, obj) -> None:
    path.write_text(json.dumps(_jsonable(obj), indent=2, sort_keys=True) + "\n")


def _state_dump(state) -> dict:
    return {"k": state.k, "weights": state.weights, "means": state.means,
            "chols": state.chols, "psi": state.psi}


def _ess_block(series, cfg: RunConfig) -> dict:
    out = {"lag": cfg.ess_lag, "thin": cfg.thin}
    for name, s in (("full", series), ("thinned", series[::cfg.thin])):
        if s.size > cfg.ess_lag:
            r = ess_report(s, cfg.ess_lag)
            out[name] = {"value": r.value, "n": r.n, "flag": r.flag}
        else:
            out[name] = None
    return out


def _histogram(values) -> dict:
    vals, counts = np.unique(np.asarray(values), return_counts=True)
    return {int(v): c / counts.sum() for v, c in zip(vals, counts)}


# ---------------------------------------------------------------------------
# Mixture kinds
# ---------------------------------------------------------------------------


def _trace_hook(writer: TraceWriter, last_sweep: int):
    def hook(sweep, states, log_target, counters):
        if not writer.wants(sweep, force=sweep == last_sweep):
            return
        for i, s in enumerate(states):
            lt = log_target(i)
            if math.isnan(lt):
                raise NonFiniteTargetError(sweep, i, s)
            writer.write(TraceRecord(sweep, i, s.k, lt, counters.snapshot(i)))
    return hook


def _run_mixture(cfg: RunConfig, out: Path) -> dict:
    data = X.load_mixture_data(cfg)
    hyper = X.build_hyper(cfg, data)
    scales = X.build_scales(cfg, data)
    rng = rng_stream(cfg.seed)
    extra = {}
    with TraceWriter(out / "trace.csv", cfg.trace_stride) as writer:
        hook = _trace_hook(writer, cfg.sweeps - 1)
        common = dict(burn_in=cfg.burn_in, on_sweep=hook)
        if cfg.kind == "mixture-vanilla":
            run = X.run_mixture_vanilla(data, hyper, scales, cfg.sweeps, rng, lik_power=cfg.lik_power,
                                        k_start=cfg.k_start, **common)
        elif cfg.kind == "mixture-population":
            pop = X.build_population(cfg, data, hyper, scales, rng)
            pc = PopulationConfig(exchange_after_crossover=cfg.exchange_after_crossover)
            run = X.run_mixture_population(pop, cfg.sweeps, rng, config=pc, **common)
        else:
            ladder = X.build_ladder(cfg, data, hyper, scales)
            st = StConfig(ladder.zetas, None if cfg.st_masses is None else np.asarray(cfg.st_masses))
            run = X.run_mixture_st(data, hyper, scales, st, cfg.sweeps, rng, lik_power=cfg.lik_power,
                                   k_start=cfg.k_start, **common)
            occ = np.bincount(run.zeta_index, minlength=st.zetas.size) / run.zeta_index.size
            extra["temperature_occupancy"] = occ
    k0 = run.k[:, 0]
    # tempering visits every rung; only the zeta = 1 sweeps sample the posterior
    at_one = k0 if run.zeta_index is None else k0[run.zeta_index == 0]
    return {
        "process_time_s": run.cpu_seconds,
        "acceptance": acceptance_report(run.counters.as_mapping()),
        "exchange_success_fraction": float(run.exchange_hits.mean()) if run.k.shape[1] > 1 else None,
        "ess": {"k": _ess_block(k0.astype(float), cfg)},
        "k_histogram": _histogram(at_one) if at_one.size else {},
        "final_k": [s.k for s in run.final],
        "zetas": run.zetas,
        "data": {"n": data.n, "q": data.q},
        **extra,
    }


# ---------------------------------------------------------------------------
# Finite kinds
# ---------------------------------------------------------------------------


def _run_varsel(cfg: RunConfig, out: Path) -> dict:
    model = X.load_varsel_model(cfg.varsel_fixture)
    res = X.varsel_run(model, cfg.varsel_zeta, cfg.sweeps, rng_stream(cfg.seed), cfg.burn_in)
    logt = log_target_vector(model, cfg.varsel_zeta)
    proposed = accepted = 0
    with TraceWriter(out / "trace.csv", cfg.trace_stride) as writer:
        for t, (s, acc, size) in enumerate(zip(res["states"], res["accepts"], res["sizes"])):
            proposed += model.k_max
            accepted += int(acc)
            if writer.wants(t, force=t == cfg.sweeps - 1):
                writer.write(TraceRecord(t, 0, int(size), float(logt[s]), (("flip", proposed, accepted),)))
    return {
        "process_time_s": res["cpu_seconds"],
        "acceptance": acceptance_report({0: {"flip": (proposed, accepted)}}),
        "ess": {"k": _ess_block(res["sizes"].astype(float), cfg)},
        "k_histogram": _histogram(res["sizes"]),
        "constants": {"tv_to_exact": res["tv_to_exact"], "n_states": int(res["exact"].size)},
    }


def _run_varsel_analyze(cfg: RunConfig, out: Path) -> dict:
    model = X.load_varsel_model(cfg.varsel_fixture)
    c = X.varsel_analyze(model, zeta=cfg.varsel_zeta, hot_zeta=cfg.hot_zeta, sweeps_each=cfg.sweeps_each,
                         cpu_ratio=cfg.cpu_ratio, n0_grid=cfg.n0_grid, delta=cfg.tv_delta)
    c["population_faster"] = c["M_population"] < c["M_vanilla"]
    return {"constants": c}


def _run_prop1(cfg: RunConfig, out: Path) -> dict:
    reports = X.prop1_canonical(cfg.toy_loglik, cfg.toy_logprior, cfg.toy_zeta2, cfg.toy_mh_steps,
                                cfg.toy_dps, cfg.toy_n_max)
    with open(out / "series.csv", "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(("start", "n", "tv", "bound"))
        for s, r in enumerate(reports):
            for n, (a, b) in enumerate(zip(r.actual, r.bound), start=1):
                w.writerow((s, n, repr(float(a)), repr(float(b))))
    first = reports[0]
    return {"constants": {
        "epsilon": first.epsilon,
        "alpha": first.alpha,
        "factor": first.factor,
        "n_max": cfg.toy_n_max,
        "holds": all(r.holds for r in reports),
        "violations": {s: r.violations for s, r in enumerate(reports) if r.violations},
        "max_ratio": max(float(np.max(r.ratio)) for r in reports),
    }}


def _run_theorem1(cfg: RunConfig, out: Path) -> dict:
    rep = X.theorem1_canonical(cfg.toy_loglik, cfg.toy_logprior, cfg.toy_zeta2, cfg.toy_mh_steps,
                               cfg.sweeps_each)
    return {"constants": {"epsilon_star": rep.theta, "n_violations": rep.n_violations,
                          "min_slack": rep.min_slack, "argmin": list(rep.argmin), "holds": rep.holds}}


_DISPATCH = {
    "mixture-vanilla": _run_mixture,
    "mixture-population": _run_mixture,
    "mixture-st": _run_mixture,
    "varsel-run": _run_varsel,
    "varsel-analyze": _run_varsel_analyze,
    "prop1-verify": _run_prop1,
    "theorem1-verify": _run_theorem1,
}


def run(cfg: RunConfig) -> RunResult:
    """Execute ``cfg`` and write its artifacts; the result carries the exit status."""
    out = Path(cfg.out) if cfg.out else _default_out(cfg)
    out.mkdir(parents=True, exist_ok=True)
    (out / "config.ini").write_text(cfg.text)
    _dump_json(out / "config.json", cfg.resolved())
    try:
        body = _DISPATCH[cfg.kind](cfg, out)
    except NonFiniteTargetError as exc:
        log.error("%s; state written to %s", exc, out / "state_dump.json")
        _dump_json(out / "state_dump.json", {"sweep": exc.sweep, "chain": exc.chain,
                                             "state": _state_dump(exc.state)})
        return RunResult(EXIT_NONFINITE, out)
    summary = {"kind": cfg.kind, "seed": cfg.seed, "sweeps": cfg.sweeps, "burn_in": cfg.burn_in,
               "config": cfg.resolved(), **body}
    _dump_json(out / "summary.json", summary)
    log.info("wrote %s", out)
    return RunResult(EXIT_OK, out, _jsonable(summary))
