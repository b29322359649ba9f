from __future__ import annotations

import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy import stats

from poprj import mixture as M
from poprj import rjvanilla as R


class ScriptedRng:
    """Stand-in random stream returning fixed innovations.

    ``uniform`` is returned by ``random()``; values close to one reject every
    move with a negative log acceptance.
    """

    def __init__(self, cauchy=0.0, normal=0.0, uniform=1.0 - 1e-15):
        self.cauchy, self.normal, self.uniform = cauchy, normal, uniform

    def standard_cauchy(self):
        return self.cauchy

    def standard_normal(self, size=None):
        return self.normal if size is None else np.full(size, self.normal)

    def random(self):
        return self.uniform


@pytest.fixture(scope="module")
def line():
    rng = np.random.default_rng(21)
    data = M.Dataset(np.concatenate([rng.normal(-2, 0.5, 15), rng.normal(1.5, 0.8, 15)])[:, None])
    h = M.default_hyperparams(data, k_max=5)
    return data, h


@pytest.fixture(scope="module")
def plane():
    rng = np.random.default_rng(22)
    data = M.Dataset(rng.standard_normal((30, 2)) * [1.0, 0.5])
    h = M.default_hyperparams(data, k_max=6)
    return data, h


def _target(data, h, s, zeta):
    return M.sampler_log_target(data, s, h, zeta)


class TestMoveProbs:
    @pytest.mark.parametrize("k,expected", [(1, (1.0, 0.0)), (3, (0.5, 0.5)), (5, (0.0, 1.0))])
    def test_edges(self, k, expected):
        assert R.move_probs(k, 1, 5) == expected

    def test_pinned(self):
        assert R.move_probs(2, 2, 2) == (0.0, 0.0)


class TestMoveScalesAndOutcome:
    def test_defaults_scale_with_range(self, plane):
        data, _ = plane
        sc = R.MoveScales.default(data)
        np.testing.assert_allclose(sc.cauchy_mean, data.ranges / 20)
        np.testing.assert_allclose(sc.split_sigma_mu, data.ranges / 10)
        assert (sc.cauchy_offdiag, sc.lognorm_diag_sigma, sc.logit_weight_sigma) == (0.05, 0.3, 0.5)
        assert (sc.split_gamma, sc.split_sigma_phi, sc.split_sigma_diag) == (2.0, 0.1, 0.3)

    def test_rejects_non_positive(self):
        with pytest.raises(ValueError):
            R.MoveScales(cauchy_offdiag=0.0)

    def test_accepted_implies_proposed(self):
        with pytest.raises(ValueError):
            R.MoveOutcome("mean", False, True)


class TestFixedMoves:
    def test_zero_innovation_always_accepted(self, plane):
        data, h = plane
        s = M.random_state(h, 3, np.random.default_rng(0))
        ctx = R.ChainContext(data, h, 0.6)
        out_state, outs = R.mh_fixed_updates(s, ctx, R.MoveScales.default(data), ScriptedRng())
        assert all(o.accepted for o in outs)
        assert len(outs) == 3 * (2 + 1 + 2) + 1
        np.testing.assert_allclose(out_state.means, s.means, atol=1e-14)
        np.testing.assert_allclose(out_state.chols, s.chols, atol=1e-14)
        np.testing.assert_allclose(out_state.weights, s.weights, atol=1e-14)

    def test_diagonal_multiplier_involution(self):
        phi = 0.731
        for u in (0.2, 1.0, 3.7):
            assert (phi * u) / u == pytest.approx(phi, rel=1e-15)

    @pytest.mark.parametrize("zeta", [1.0, 0.3])
    def test_ratio_matches_direct_evaluation(self, line, zeta):
        data, h = line
        s = M.MixtureState([1.0], [[0.4]], [[[1.1]]], [[0.7]])
        ctx = R.ChainContext(data, h, zeta)
        sc = R.MoveScales(cauchy_mean=0.5, lognorm_diag_sigma=0.3)
        rng = ScriptedRng(cauchy=0.8, normal=-1.2)
        _, outs = R.mh_fixed_updates(s, ctx, sc, rng)
        mean_move = M.MixtureState([1.0], [[0.4 + 0.5 * 0.8]], [[[1.1]]], [[0.7]])
        expect_mean = _target(data, h, mean_move, zeta) - _target(data, h, s, zeta)
        np.testing.assert_allclose(outs[0].log_hastings, expect_mean, rtol=1e-12, atol=1e-12)
        phi_new = 1.1 * math.exp(0.3 * -1.2)
        diag_move = M.MixtureState([1.0], [[0.4]], [[[phi_new]]], [[0.7]])
        expect_diag = _target(data, h, diag_move, zeta) - _target(data, h, s, zeta) + math.log(phi_new / 1.1)
        np.testing.assert_allclose(outs[1].log_hastings, expect_diag, rtol=1e-12, atol=1e-12)

    def test_weight_ratio_matches_direct_evaluation(self, line):
        data, h = line
        s = M.MixtureState([0.3, 0.7], [[-2.0], [1.5]], [[[0.5]], [[0.8]]], [[0.7]])
        ctx = R.ChainContext(data, h, 1.0)
        sc = R.MoveScales(logit_weight_sigma=0.5)
        rng = ScriptedRng(normal=0.9)
        _, outs = R.mh_fixed_updates(s, ctx, sc, rng)
        z = math.log(0.3 / 0.7) + 0.45
        w1 = 1 / (1 + math.exp(-z))
        new = M.MixtureState([w1, 1 - w1], s.means, s.chols, s.psi)
        expect = (_target(data, h, new, 1.0) - _target(data, h, s, 1.0)
                  + math.log(w1 * (1 - w1)) - math.log(0.3 * 0.7))
        np.testing.assert_allclose(outs[-1].log_hastings, expect, rtol=1e-12)

    def _log_accept(self, data, h, s, zeta, **innov):
        ctx = R.ChainContext(data, h, zeta)
        sc = R.MoveScales(cauchy_mean=1.0, lognorm_diag_sigma=1.0, logit_weight_sigma=1.0)
        _, outs = R.mh_fixed_updates(s, ctx, sc, ScriptedRng(**innov))
        return outs

    def test_detailed_balance_on_grid(self, line):
        # q = 1, k = 1 toy on a 5 x 5 grid of (mu, log phi); proposal masses
        # are symmetric in grid steps, so the grid mass of a state is the
        # Phi-coordinate target times phi (the cell width in log phi).
        data, h = line
        zeta = 0.5
        mus = np.linspace(-1.0, 1.0, 5)
        logphis = np.linspace(-0.6, 0.6, 5)
        states = [(m, lp) for m in mus for lp in logphis]
        S = len(states)

        def mk(m, lp):
            return M.MixtureState([1.0], [[m]], [[[math.exp(lp)]]], [[0.9]])

        log_mass = np.array([_target(data, h, mk(m, lp), zeta) + lp for m, lp in states])
        T = np.zeros((S, S))
        for a, (m, lp) in enumerate(states):
            for b, (m2, lp2) in enumerate(states):
                if a == b:
                    continue
                if lp2 == lp:
                    outs = self._log_accept(data, h, mk(m, lp), zeta, cauchy=m2 - m)
                    qmass = 0.1 / (1 + (m2 - m) ** 2)
                    T[a, b] = qmass * min(1.0, math.exp(outs[0].log_hastings))
                elif m2 == m:
                    outs = self._log_accept(data, h, mk(m, lp), zeta, normal=lp2 - lp, cauchy=0.0)
                    qmass = 0.1 * math.exp(-0.5 * (lp2 - lp) ** 2)
                    T[a, b] = qmass * min(1.0, math.exp(outs[1].log_hastings))
            T[a, a] = 1.0 - T[a].sum()
        assert T.min() >= 0
        pi = np.exp(log_mass - log_mass.max())
        flow = pi[:, None] * T
        np.testing.assert_allclose(flow, flow.T, atol=1e-10 * flow.max())

    def test_weight_move_detailed_balance_on_grid(self, line):
        data, h = line
        zs = np.linspace(-2.0, 2.0, 5)
        base = M.MixtureState([0.5, 0.5], [[-2.0], [1.5]], [[[0.5]], [[0.8]]], [[0.7]])

        def mk(z):
            w = 1 / (1 + math.exp(-z))
            return M.MixtureState([w, 1 - w], base.means, base.chols, base.psi)

        log_mass = np.array([_target(data, h, mk(z), 1.0) + math.log(mk(z).weights.prod()) for z in zs])
        T = np.zeros((5, 5))
        for a, z in enumerate(zs):
            for b, z2 in enumerate(zs):
                if a != b:
                    outs = self._log_accept(data, h, mk(z), 1.0, normal=z2 - z, cauchy=0.0)
                    T[a, b] = 0.2 * math.exp(-0.5 * (z2 - z) ** 2) * min(1.0, math.exp(outs[-1].log_hastings))
            T[a, a] = 1.0 - T[a].sum()
        pi = np.exp(log_mass - log_mass.max())
        flow = pi[:, None] * T
        np.testing.assert_allclose(flow, flow.T, atol=1e-10 * flow.max())

    def test_input_not_mutated(self, plane):
        data, h = plane
        s = M.random_state(h, 2, np.random.default_rng(1))
        before = s.copy()
        R.mh_fixed_updates(s, R.ChainContext(data, h), R.MoveScales.default(data), np.random.default_rng(2))
        assert s.same_as(before)


class TestGibbsPsi:
    def test_substitution_single_component(self):
        h = M.Hyperparams(xi=[0.0, 0.0], kappa=np.eye(2), g=1.0, h=np.eye(2), alpha_prime=3.0)
        s = M.MixtureState([1.0], [[0.0, 0.0]], [np.eye(2)], np.eye(2))
        dof, scale = R.psi_conditional(s, h)
        assert dof == 8.0
        np.testing.assert_allclose(scale, np.eye(2) / 4)

    def test_substitution_k_identity_components(self):
        h = M.Hyperparams(xi=[0.0, 0.0], kappa=np.eye(2), g=1.0, h=np.diag([1.0, 3.0]))
        s = M.MixtureState(np.ones(4) / 4, np.zeros((4, 2)), np.repeat(np.eye(2)[None], 4, 0), np.eye(2))
        _, scale = R.psi_conditional(s, h)
        np.testing.assert_allclose(scale, np.linalg.inv(2 * h.h + 8 * np.eye(2)), rtol=1e-13)

    def test_draw_mean(self):
        rng = np.random.default_rng(4)
        h = M.Hyperparams(xi=[0.0, 0.0], kappa=np.eye(2), g=1.0, h=np.eye(2))
        L = np.linalg.cholesky(np.array([[1.0, 0.4], [0.4, 2.0]]))
        s = M.MixtureState([0.5, 0.5], np.zeros((2, 2)), [L, np.eye(2)], np.eye(2))
        dof, scale = R.psi_conditional(s, h)
        draws = np.array([R.gibbs_psi(s, h, rng).psi for _ in range(20_000)])
        se = draws.std(axis=0, ddof=1) / math.sqrt(len(draws))
        assert np.all(np.abs(draws.mean(0) - dof * scale) < 4 * se)

    def test_other_fields_unchanged(self, plane):
        data, h = plane
        s = M.random_state(h, 3, np.random.default_rng(3))
        s2 = R.gibbs_psi(s, h, np.random.default_rng(4))
        np.testing.assert_array_equal(s2.means, s.means)
        np.testing.assert_array_equal(s2.chols, s.chols)
        np.testing.assert_array_equal(s2.weights, s.weights)
        assert not np.array_equal(s2.psi, s.psi)


class TestBirthDeath:
    def test_birth_then_death_restores_state(self, plane):
        data, h = plane
        rng = np.random.default_rng(5)
        ctx = R.ChainContext(data, h, 0.8)
        for _ in range(20):
            s = M.random_state(h, int(rng.integers(1, 6)), rng)
            pos = int(rng.integers(s.k + 1))
            new, la = R.birth_proposal(s, ctx, rng.beta(1, s.k), rng.standard_normal(2),
                                       np.linalg.cholesky(np.eye(2) * 0.5), pos)
            back, lb = R.death_proposal(new, ctx, pos)
            assert back.same_as(s, atol=1e-12)
            np.testing.assert_allclose(la, -lb, rtol=1e-10)

    def test_ratio_term_by_term(self, line):
        data, h = line
        zeta = 0.7
        s = M.MixtureState([1.0], [[-0.5]], [[[1.2]]], [[0.8]])
        w, mu, phi = 0.3, 1.1, 0.6
        ctx = R.ChainContext(data, h, zeta)
        new, log_a = R.birth_proposal(s, ctx, w, np.array([mu]), np.array([[phi]]), 1)
        # independent assembly: target in (mu, Phi) coordinates
        def target(weights, means, phis):
            ll = 0.0
            for y in data.points[:, 0]:
                ll_i = sum(wj * stats.t(df=4, loc=m, scale=p).pdf(y) for wj, m, p in zip(weights, means, phis))
                ll += math.log(ll_i)
            lp = -math.log(h.k_max) + math.lgamma(len(weights))
            lp += stats.wishart(df=2 * h.g, scale=1 / (2 * h.h[0, 0])).logpdf(0.8)
            for m, p in zip(means, phis):
                lp += stats.norm(h.xi[0], 1 / math.sqrt(h.kappa[0, 0])).logpdf(m)
                lp += stats.invwishart(df=2 * h.alpha_prime, scale=1.6).logpdf(p * p) + math.log(2 * p)
            return zeta * ll + lp

        prop_density = (stats.norm(h.xi[0], 1 / math.sqrt(h.kappa[0, 0])).logpdf(mu)
                        + stats.invwishart(df=2 * h.alpha_prime, scale=1.6).logpdf(phi * phi) + math.log(2 * phi))
        expect = (target([0.7, 0.3], [-0.5, mu], [1.2, phi]) - target([1.0], [-0.5], [1.2])
                  + math.log(0.5 / 1.0) + 0 * math.log(1 - w) - stats.beta(1, 1).logpdf(w) - prop_density)
        np.testing.assert_allclose(log_a, expect, rtol=1e-10)

    def test_never_proposed_outside_range(self, plane):
        data, h = plane
        ctx = R.ChainContext(data, h, 1.0, k_lo=2, k_hi=2)
        s = M.random_state(h, 2, np.random.default_rng(0))
        _, out = R.birth_death(s, ctx, np.random.default_rng(1))
        assert not out.proposed
        with pytest.raises(ValueError):
            R.birth_proposal(s, ctx, 0.5, np.zeros(2), np.eye(2), 0)


class TestSplitCombine:
    def test_r1_jacobian(self):
        w, phi, u = 0.37, 1.9, 0.64
        assert math.exp(R.split_log_jacobian(w, np.array([[phi]]), np.array([u]))) == pytest.approx(
            4 * w * phi / u, rel=1e-14)

    def test_jacobian_against_finite_differences(self):
        # map (w, mu, phi_off, phi_diag, u1, u_mu, u_off, u_diag) -> offspring, r = 2
        w, mu, L = 0.4, np.array([0.3, -0.2]), np.array([[1.2, 0.0], [0.5, 0.8]])
        u = R.SplitVariables(0.3, np.array([0.1, -0.4]), np.array([0.2]), np.array([1.3, 0.7]))

        def pack(w, mu, L, u):
            return np.concatenate([[w], mu, [L[1, 0]], np.diag(L), [u.u1], u.u_mean, u.u_offdiag, u.u_diag])

        def f(v):
            Lm = np.array([[v[4], 0.0], [v[3], v[5]]])
            uu = R.SplitVariables(v[6], v[7:9], v[9:10], v[10:12])
            (w1, m1, c1), (w2, m2, c2) = R.split_map(v[0], v[1:3], Lm, uu)
            return np.concatenate([[w1], m1, [c1[1, 0]], np.diag(c1), [w2], m2, [c2[1, 0]], np.diag(c2)])

        v0 = pack(w, mu, L, u)
        J = np.empty((12, 12))
        for i in range(12):
            dv = np.zeros(12)
            dv[i] = 1e-6
            J[:, i] = (f(v0 + dv) - f(v0 - dv)) / 2e-6
        np.testing.assert_allclose(R.split_log_jacobian(w, L, u.u_diag), math.log(abs(np.linalg.det(J))), rtol=1e-7)

    def test_symmetric_split_and_restore(self, plane):
        data, h = plane
        s = M.random_state(h, 2, np.random.default_rng(6))
        u = R.SplitVariables(0.5, np.zeros(2), np.zeros(1), np.ones(2))
        ctx = R.ChainContext(data, h, 1.0)
        new, log_a = R.split_proposal(s, ctx, R.MoveScales.default(data), 1, u, (1, 2))
        assert np.isfinite(log_a)
        np.testing.assert_allclose(new.weights[1:], [s.weights[1] / 2] * 2)
        np.testing.assert_array_equal(new.means[1], new.means[2])
        np.testing.assert_array_equal(new.chols[1], new.chols[2])
        back, _, _ = R.combine_proposal(new, ctx, R.MoveScales.default(data), (1, 2), 1)
        assert back.same_as(s, atol=1e-15)

    def test_pair_probs_enumeration(self):
        s = M.MixtureState(
            [0.2, 0.3, 0.5], [[0.0, 0.0], [1.0, 0.5], [-2.0, 1.0]],
            [np.eye(2), np.diag([0.5, 2.0]), np.array([[1.0, 0.0], [0.3, 0.7]])], np.eye(2))
        probs = R.combine_pair_probs(s)
        lam_inv = [np.linalg.inv(L @ L.T) for L in s.chols]
        raw = {}
        for a in range(3):
            for b in range(a + 1, 3):
                d = s.means[a] - s.means[b]
                raw[(a, b)] = 1 / (d @ lam_inv[a] @ d + d @ lam_inv[b] @ d)
        total = sum(raw.values())
        assert set(probs) == set(raw)
        for key in raw:
            np.testing.assert_allclose(probs[key], raw[key] / total, rtol=1e-12)
        np.testing.assert_allclose(sum(probs.values()), 1.0, atol=1e-15)

    def test_coincident_pair_takes_all_mass(self):
        s = M.MixtureState([0.2, 0.3, 0.5], [[0.0], [0.0], [3.0]], [[[1.0]], [[2.0]], [[1.0]]], [[1.0]])
        assert R.combine_pair_probs(s) == {(0, 1): 1.0, (0, 2): 0.0, (1, 2): 0.0}

    @settings(max_examples=60, deadline=None)
    @given(st.integers(0, 2**31), st.integers(1, 4), st.integers(1, 3))
    def test_round_trip_bijection(self, seed, k, q):
        rng = np.random.default_rng(seed)
        data = M.Dataset(rng.standard_normal((8, q)))
        h = M.default_hyperparams(data, k_max=6)
        ctx = R.ChainContext(data, h, 0.5)
        sc = R.MoveScales.default(data)
        s = M.random_state(h, k, rng)
        j = int(rng.integers(k))
        u = R.draw_split_variables(q, sc, rng)
        p = rng.choice(k + 1, 2, replace=False)
        new, la = R.split_proposal(s, ctx, sc, j, u, (int(p[0]), int(p[1])))
        new.validate(h.k_max)
        back, lb, _ = R.combine_proposal(new, ctx, sc, (int(p[0]), int(p[1])), j)
        assert back.same_as(s, atol=1e-12)
        np.testing.assert_allclose(la, -lb, rtol=1e-9, atol=1e-9)

    def test_split_ratio_term_by_term(self, line):
        data, h = line
        zeta = 0.6
        ctx = R.ChainContext(data, h, zeta)
        sc = R.MoveScales(split_gamma=2.0, split_sigma_mu=0.4, split_sigma_phi=0.1, split_sigma_diag=0.3)
        s = M.MixtureState([0.4, 0.6], [[-1.5], [1.0]], [[[0.7]], [[1.1]]], [[0.8]])
        u = R.SplitVariables(0.35, np.array([0.25]), np.zeros(0), np.array([1.2]))
        new, log_a = R.split_proposal(s, ctx, sc, 1, u, (2, 0))
        # first offspring (w 0.21, mu 1.25, phi 1.1/1.2) lands at slot 2, second at slot 0
        np.testing.assert_allclose(new.weights, [0.39, 0.4, 0.21])
        np.testing.assert_allclose(new.means[:, 0], [0.75, -1.5, 1.25])
        np.testing.assert_allclose(new.chols[:, 0, 0], [1.32, 0.7, 1.1 / 1.2])
        d = 0.5 ** 2 / 1.32**2 + 0.5 ** 2 / (1.1 / 1.2) ** 2
        others = [(0.75, 1.32, -1.5, 0.7), (-1.5, 0.7, 1.25, 1.1 / 1.2)]
        inv = [1 / d] + [1 / ((m1 - m2) ** 2 / p1**2 + (m1 - m2) ** 2 / p2**2) for m1, p1, m2, p2 in others]
        p_pair = inv[0] / sum(inv)
        log_q = (stats.beta(2, 2).logpdf(0.35) + stats.norm(0, 0.4).logpdf(0.25)
                 + stats.lognorm(s=0.3).logpdf(1.2))
        expect = (_target(data, h, new, zeta) - _target(data, h, s, zeta)
                  + math.log(0.5 * p_pair / 0.5) + math.log(2 * 3)
                  + math.log(4 * 0.6 * 1.1 / 1.2) - math.log(2) - log_q)
        np.testing.assert_allclose(log_a, expect, rtol=1e-10)


class TestSweep:
    def test_k_changes_by_at_most_one(self, plane):
        data, h = plane
        rng = np.random.default_rng(7)
        ctx = R.ChainContext(data, h, 1.0)
        sc = R.MoveScales.default(data)
        s = M.random_state(h, 3, rng)
        for _ in range(200):
            s2, _ = R.rj_sweep(s, ctx, sc, rng)
            assert abs(s2.k - s.k) <= 1
            np.testing.assert_allclose(s2.weights.sum(), 1.0, atol=1e-12)
            s2.validate(h.k_max)
            s = s2

    def test_trans_moves_disabled(self, plane):
        data, h = plane
        rng = np.random.default_rng(8)
        ctx = R.ChainContext(data, h, 1.0, trans_moves=False)
        s = M.random_state(h, 2, rng)
        for _ in range(50):
            s, outs = R.rj_sweep(s, ctx, R.MoveScales.default(data), rng)
            assert s.k == 2
            assert not {o.kind for o in outs} & {"birth", "death", "split", "combine"}

    def test_cached_densities_stay_consistent(self, plane):
        data, h = plane
        rng = np.random.default_rng(9)
        ctx = R.ChainContext(data, h, 1.0)
        s = M.random_state(h, 2, rng)
        for _ in range(100):
            s, _ = R.rj_sweep(s, ctx, R.MoveScales.default(data), rng)
        np.testing.assert_allclose(s.logf, M.component_log_densities(data, s.means, s.chols, h.dof), rtol=1e-12)

    def test_prior_recovery_of_k(self):
        rng = np.random.default_rng(10)
        data = M.Dataset(rng.standard_normal((20, 1)))
        h = M.default_hyperparams(data, k_max=4)
        ctx = R.ChainContext(data, h, 1.0, lik_power=0.0)
        sc = R.MoveScales.default(data)
        s = M.random_state(h, 1, rng)
        ks = []
        for i in range(30_000):
            s, _ = R.rj_sweep(s, ctx, sc, rng)
            if i % 10 == 0:
                ks.append(s.k)
        counts = np.bincount(ks, minlength=5)[1:]
        assert stats.chisquare(counts).pvalue > 0.01

    def test_reproducible_with_seeded_stream(self, plane):
        from poprj.statcore import rng_stream

        data, h = plane
        ctx = R.ChainContext(data, h, 1.0)
        runs = []
        for _ in range(2):
            rng = rng_stream(123, 4)
            s = M.random_state(h, 2, rng)
            for _ in range(20):
                s, _ = R.rj_sweep(s, ctx, R.MoveScales.default(data), rng)
            runs.append(s)
        assert runs[0].same_as(runs[1])
