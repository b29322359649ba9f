"""Acceptance suite: one PASS/FAIL line per headline property.

Run under pytest (lines are echoed in the terminal summary) or directly with
``python tests/test_acceptance.py``.
"""

from __future__ import annotations

import math
import sys
import time

import numpy as np
import pytest
from scipy import stats

from poprj import finite as F
from poprj import mixture as mx
from poprj import rjvanilla as rj
from poprj.harness import experiments as X
from poprj.harness.config import RunConfig
from poprj.harness.diagnostics import efficiency_E, ess
from poprj.population import GaussianTemperedToy, Population, PopulationConfig, ladder_tune_iba
from poprj.population import exact as EX

RESULTS: list[str] = []


def _report(number: int, title: str, passed: bool, detail: str) -> None:
    line = f"[{number:2d}] {'PASS' if passed else 'FAIL'}  {title}: {detail}"
    RESULTS.append(line)
    print(line)


# ---------------------------------------------------------------------------
# checks; each returns (passed, detail)
# ---------------------------------------------------------------------------


def check_reference_iterations():
    got = [F.tv_bound_iterations(20, 3.63e-3, 0.01), F.tv_bound_iterations(1, 6.01e-4, 0.01)]
    return got == [25326, 7660], f"(20, 3.63e-3) -> {got[0]}, (1, 6.01e-4) -> {got[1]}; expected 25326, 7660"


def check_flip_chain_recovers_posterior():
    model = X.load_varsel_model("varsel_sparse.csv")
    t0 = time.perf_counter()
    res = X.varsel_run(model, 1.0, 100_000, np.random.default_rng(2024))
    dt = time.perf_counter() - t0
    tv = res["tv_to_exact"]
    return tv < 0.05 and dt < 60, f"TV to enumerated posterior {tv:.4f} (< 0.05) over 256 states in {dt:.1f} s"


def check_population_bound_beats_vanilla():
    model = X.load_varsel_model("varsel_bimodal.csv")
    c = X.varsel_analyze(model, zeta=1.0, hot_zeta=0.01, sweeps_each=10, cpu_ratio=50.0,
                         n0_grid=RunConfig(kind="varsel-analyze").n0_grid)
    ok = c["M_population"] < c["M_vanilla"]
    return ok, (f"eps {c['epsilon']:.4f}, phi {c['phi']:.4f}, rho1 {c['rho1']:.3f}, eps^2 phi {c['epsilon_star']:.4f}; "
                f"M_pop {c['M_population']} < M_vanilla {c['M_vanilla']} (n0 {c['vanilla_n0']}, CPU ratio 50)")


def check_small_set_certificate():
    t0 = time.perf_counter()
    rep = X.theorem1_canonical()
    dt = time.perf_counter() - t0
    return rep.n_violations == 0 and dt < 10, (
        f"{rep.n_violations} violations over all product states, theta {rep.theta:.4g}, "
        f"min slack {rep.min_slack:.3g}, {dt:.2f} s")


def check_contraction_bound():
    t0 = time.perf_counter()
    reps = X.prop1_canonical(n_max=50)
    dt = time.perf_counter() - t0
    n_bad = sum(bool(r.violations) for r in reps)
    worst = max(float(np.max(r.ratio)) for r in reps)
    eps, alpha = reps[0].epsilon, reps[0].alpha
    return n_bad == 0 and dt < 5, (
        f"{len(reps)} point-mass starts, n <= 50, eps {eps:.4f}, alpha {alpha:.4f}, worst TV/bound {worst:.3f}, "
        f"{n_bad} violating starts, {dt:.2f} s")


def check_exact_kernels():
    rng = np.random.default_rng(77)
    errs = {}
    # basic exchange, two chains on four states
    ell, prior = rng.normal(size=4) * 2, rng.normal(size=4)
    lp2 = lambda i, x, z=(1.0, 0.35): z[i] * ell[x] + prior[x]
    space = EX.product_space(range(4), 2)
    pi = EX.product_target(lp2, space)
    K = EX.exchange_basic_matrix(lp2, space, {(0, 1): 1.0})
    flow = pi[:, None] * K
    errs["exchange"] = max(np.abs(flow - flow.T).max(), np.abs(pi @ K - pi).max())
    # delayed-rejection exchange, three chains on three states
    ell3, prior3 = rng.normal(size=3) * 3, rng.normal(size=3)
    lp3 = lambda i, x, z=(1.0, 0.6, 0.2): z[i] * ell3[x] + prior3[x]
    space = EX.product_space(range(3), 3)
    pi = EX.product_target(lp3, space)
    K = EX.dr_exchange_matrix(lp3, space, 3)
    flow = pi[:, None] * K
    errs["dr_exchange"] = max(np.abs(flow - flow.T).max(), np.abs(pi @ K - pi).max())
    # both crossovers, two chains on the discretised mixture space
    a, b = rng.normal(size=(2, 2)), rng.normal(size=(2, 4))
    zetas = [1.0, 0.4]

    def lpm(i, s):
        return zetas[i] * sum(a[0, c] * w for c, w in s) + b[i, len(s)] + sum(a[1, c] * w * w for c, w in s)

    toy = EX.ToyMixtureSpace()
    space = EX.product_space(toy.states, 2)
    pi = EX.product_target(lpm, space)
    for kind in ("variable", "fixed"):
        K = EX.crossover_matrix(lpm, toy, space, zetas, kind)
        errs[f"crossover_{kind}"] = max(np.abs(pi @ K - pi).max(), np.abs(K.sum(axis=1) - 1).max())
    worst = max(errs.values())
    return worst < 1e-10, ", ".join(f"{k} {v:.1e}" for k, v in errs.items()) + " (< 1e-10)"


def check_prior_recovery(sweeps: int = 200_000, thin: int = 200):
    rng = np.random.default_rng(31)
    data = mx.Dataset(X.three_clusters(40, seed=4))
    hyper = mx.default_hyperparams(data, k_max=6)
    pop = Population.initialise(data, hyper, [1.0, 0.5, 0.25], rng, lik_power=0.0)
    t0 = time.perf_counter()
    run = X.run_mixture_population(pop, sweeps, rng)
    dt = time.perf_counter() - t0
    pooled = run.k[::thin].ravel()
    counts = np.bincount(pooled, minlength=7)[1:]
    p = stats.chisquare(counts).pvalue
    return p > 0.01 and dt < 300, (
        f"{sweeps} sweeps x 3 chains, thinned by {thin}: counts {counts.tolist()}, chi-square p = {p:.3f} "
        f"(> 0.01), {dt:.0f} s")


def check_split_combine_bijection(n_draws: int = 10_000):
    rng = np.random.default_rng(8)
    worst = 0.0
    contexts = {}
    for _ in range(n_draws):
        q = int(rng.integers(1, 4))
        k = int(rng.integers(1, 5))
        if q not in contexts:
            d = mx.Dataset(rng.standard_normal((8, q)))
            h = mx.default_hyperparams(d, k_max=6)
            contexts[q] = (h, rj.ChainContext(d, h, 0.5), rj.MoveScales.default(d))
        h, ctx, sc = contexts[q]
        s = mx.random_state(h, k, rng)
        j = int(rng.integers(k))
        u = rj.draw_split_variables(q, sc, rng)
        slots = rng.choice(k + 1, 2, replace=False)
        new, _ = rj.split_proposal(s, ctx, sc, j, u, (int(slots[0]), int(slots[1])))
        back, _, u_back = rj.combine_proposal(new, ctx, sc, (int(slots[0]), int(slots[1])), j)
        # combine reads the pair in slot order, so a descending split comes back mirrored
        if slots[0] > slots[1]:
            u = u.mirrored()
        err = max(np.abs(back.weights - s.weights).max(), np.abs(back.means - s.means).max(),
                  np.abs(back.chols - s.chols).max(), abs(u_back.u1 - u.u1),
                  np.abs(u_back.u_mean - u.u_mean).max(), np.abs(u_back.u_diag - u.u_diag).max(),
                  np.abs(u_back.u_offdiag - u.u_offdiag).max(initial=0.0))
        worst = max(worst, float(err))
    # one-dimensional Jacobian by central differences of the split map
    jac_err = 0.0
    for _ in range(200):
        w, mu, phi = rng.uniform(0.05, 0.95), rng.normal(), rng.uniform(0.2, 3.0)
        u1, um, ud = rng.uniform(0.05, 0.95), rng.normal() * 0.3, math.exp(rng.normal() * 0.3)

        def f(v):
            (w1, m1, c1), (w2, m2, c2) = rj.split_map(
                v[0], np.array([v[1]]), np.array([[v[2]]]),
                rj.SplitVariables(v[3], np.array([v[4]]), np.zeros(0), np.array([v[5]])))
            return np.array([w1, m1[0], c1[0, 0], w2, m2[0], c2[0, 0]])

        v0 = np.array([w, mu, phi, u1, um, ud])
        J = np.empty((6, 6))
        for i in range(6):
            dv = np.zeros(6)
            dv[i] = 1e-6 * max(1.0, abs(v0[i]))
            J[:, i] = (f(v0 + dv) - f(v0 - dv)) / (2 * dv[i])
        closed = 4 * w * phi / ud
        jac_err = max(jac_err, abs(abs(np.linalg.det(J)) / closed - 1),
                      abs(math.exp(rj.split_log_jacobian(w, np.array([[phi]]), np.array([ud]))) / closed - 1))
    return worst < 1e-12 and jac_err < 1e-6, (
        f"max round-trip error {worst:.2e} over {n_draws} draws (< 1e-12); "
        f"r = 1 |J| vs 4 w phi / u relative error {jac_err:.1e}")


def _efficiency_setup():
    cfg = RunConfig(kind="mixture-population", n_chains=8, seed=1, exchange_after_crossover=True)
    data = X.load_mixture_data(cfg)
    hyper = X.build_hyper(cfg, data)
    scales = X.build_scales(cfg, data)
    return cfg, data, hyper, scales


def check_efficiency(sweeps: int = 20_000, thin: int = 10):
    t_start = time.perf_counter()
    cfg, data, hyper, scales = _efficiency_setup()
    ladder = X.build_ladder(cfg, data, hyper, scales)
    rng = np.random.default_rng(101)
    pop = Population.initialise(data, hyper, ladder, rng, scales=scales)
    runs = {"population": X.run_mixture_population(pop, sweeps, rng,
                                                   config=PopulationConfig(exchange_after_crossover=True))}
    for name, seed in (("vanilla1", 102), ("vanilla2", 103)):
        runs[name] = X.run_mixture_vanilla(data, hyper, scales, sweeps, np.random.default_rng(seed))

    def triple(run, step):
        k = run.k[sweeps // 10::step, 0].astype(float)
        return ess(k, 10), k.size, run.cpu_seconds

    e_thin = efficiency_E(*(triple(runs[n], thin) for n in ("population", "vanilla1", "vanilla2")))
    e_full = efficiency_E(*(triple(runs[n], 1) for n in ("population", "vanilla1", "vanilla2")))
    dt = time.perf_counter() - t_start
    ms = {n: 1000 * r.cpu_seconds / sweeps for n, r in runs.items()}
    return e_thin >= 1.2 and dt < 900, (
        f"E = {e_thin:.2f} on traces thinned by {thin} (>= 1.2), E = {e_full:.2f} unthinned; "
        f"ms/sweep pop {ms['population']:.2f}, vanilla {ms['vanilla1']:.2f}/{ms['vanilla2']:.2f}; "
        f"N = {ladder.n}, {sweeps} sweeps each, {dt:.0f} s")


def check_ladder_tuner():
    toy = GaussianTemperedToy()
    res = ladder_tune_iba(8, toy.mean_loglik)
    acc = toy.swap_acceptance(res.ladder.zetas, 20_000, np.random.default_rng(3))
    ok = bool(np.all((acc >= 0.35) & (acc <= 0.65)))
    return ok, f"adjacent exchange acceptance {np.round(acc, 3).tolist()} within [0.35, 0.65]"


CHECKS = [
    (1, "reference iteration counts", check_reference_iterations),
    (2, "flip chain recovers exact posterior", check_flip_chain_recovers_posterior),
    (3, "population bound below CPU-rescaled vanilla bound", check_population_bound_beats_vanilla),
    (4, "population small-set certificate", check_small_set_certificate),
    (5, "exchange contraction bound", check_contraction_bound),
    (6, "exact exchange and crossover kernels", check_exact_kernels),
    (7, "prior recovery without likelihood", check_prior_recovery),
    (8, "split/combine bijection", check_split_combine_bijection),
    (9, "population efficiency against vanilla", check_efficiency),
    (10, "ladder tuner half acceptance", check_ladder_tuner),
]


@pytest.mark.parametrize("number,title,check", CHECKS, ids=[c[1].replace(" ", "_") for c in CHECKS])
def test_acceptance(number, title, check):
    passed, detail = check()
    _report(number, title, passed, detail)
    assert passed, detail


if __name__ == "__main__":
    failures = 0
    for number, title, check in CHECKS:
        passed, detail = check()
        _report(number, title, passed, detail)
        failures += not passed
    sys.exit(1 if failures else 0)
