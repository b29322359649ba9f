from __future__ import annotations

import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy import integrate, stats
from scipy.special import logsumexp

from poprj import finite as F


@pytest.fixture(scope="module")
def small_model():
    rng = np.random.default_rng(3)
    X = rng.standard_normal((30, 4))
    y = 0.5 + 0.8 * X[:, 1] + rng.standard_normal(30)
    return F.VarselModel(X, y)


def _random_kernel(rng, S, sparsity=0.0):
    P = rng.random((S, S)) * (rng.random((S, S)) >= sparsity)
    P[np.arange(S), rng.integers(0, S, S)] += 0.1
    return P / P.sum(axis=1, keepdims=True)


class TestMarginalLikelihood:
    def test_quadrature_oracle(self):
        # n = 1, null model, m = 0, V = I, a = b = 1
        y0 = 0.7
        model = F.VarselModel(np.zeros((1, 1)), np.array([y0]), prior_scale=1.0, a=1.0, b=1.0)

        def integrand(g0, s2):
            # N(y0; g0, s2) N(g0; 0, s2) IG(s2; 1, 1)
            return (math.exp(-0.5 * ((y0 - g0) ** 2 + g0**2) / s2) / (2 * math.pi * s2)
                    * math.exp(-1.0 / s2) / s2**2)

        val, _ = integrate.dblquad(integrand, 0.0, np.inf, -np.inf, np.inf, epsabs=1e-12)
        assert F.marginal_log_likelihood(model, [False]) == pytest.approx(math.log(val), rel=1e-7)

    def test_against_multivariate_t(self, small_model):
        # y | theta is multivariate t with 2a dof, location Zm, scale (b/a)(I + Z V Z')
        m = small_model
        theta = np.array([True, True, False, True])
        Z = m.design(theta)
        mean, V = m.prior_moments(int(theta.sum()))
        shape = (m.b / m.a) * (np.eye(m.n) + Z @ V @ Z.T)
        ref = stats.multivariate_t(Z @ mean, shape, df=2 * m.a).logpdf(m.y)
        assert F.marginal_log_likelihood(m, theta) == pytest.approx(ref, rel=1e-9)

    def test_row_permutation_with_zero_response(self, small_model):
        X = small_model.X
        m1 = F.VarselModel(X, np.zeros(X.shape[0]))
        perm = np.random.default_rng(0).permutation(X.shape[0])
        m2 = F.VarselModel(X[perm], np.zeros(X.shape[0]))
        for theta in F.enumerate_states(4)[[0, 5, 15]]:
            assert F.marginal_log_likelihood(m1, theta) == pytest.approx(
                F.marginal_log_likelihood(m2, theta), rel=1e-12)

    def test_normaliser_identity(self, small_model):
        logt = F.log_target_vector(small_model, 1.0)
        post = F.exact_posterior(small_model, 1.0)
        np.testing.assert_allclose(post, np.exp(logt - logsumexp(logt)), rtol=1e-12)

    def test_bad_theta(self, small_model):
        with pytest.raises(ValueError):
            F.marginal_log_likelihood(small_model, [True, False])


class TestPrior:
    def test_values(self):
        assert F.varsel_log_prior(np.zeros(8)) == pytest.approx(-math.log(9))
        theta = np.array([1, 1, 1, 1, 0, 0, 0, 0])
        assert F.varsel_log_prior(theta) == pytest.approx(-math.log(9) - math.log(70))

    def test_normalised(self):
        total = sum(math.exp(F.varsel_log_prior(t)) for t in F.enumerate_states(8))
        assert total == pytest.approx(1.0, abs=1e-12)


class TestExactPosterior:
    def test_zero_temperature_is_prior(self, small_model):
        prior = np.exp([F.varsel_log_prior(t) for t in F.enumerate_states(4)])
        np.testing.assert_allclose(F.exact_posterior(small_model, 0.0), prior, rtol=1e-12)

    def test_sums_to_one(self, small_model):
        assert F.exact_posterior(small_model, 0.3).sum() == pytest.approx(1.0, abs=1e-12)

    def test_enumeration_guard(self):
        with pytest.raises(ValueError):
            F.enumerate_states(21)

    def test_bimodal_fixture(self):
        stored = F.load_varsel_csv(F.fixture_path("varsel_bimodal.csv"))
        regen = F.synthetic_bimodal_model()
        np.testing.assert_array_equal(stored.X, regen.X)
        np.testing.assert_array_equal(stored.y, regen.y)
        post = F.exact_posterior(stored)
        assert post[0] == pytest.approx(0.55, abs=0.02)
        assert post[-1] == pytest.approx(0.33, abs=0.02)

    def test_sparse_fixture(self):
        stored = F.load_varsel_csv(F.fixture_path("varsel_sparse.csv"))
        regen = F.synthetic_sparse_model()
        np.testing.assert_array_equal(stored.X, regen.X)


class TestFlipKernel:
    def test_flat_likelihood_targets_prior(self):
        # zero covariates contribute nothing to the likelihood
        rng = np.random.default_rng(1)
        model = F.VarselModel(np.zeros((20, 4)), rng.standard_normal(20))
        K = F.build_flip_kernel(model, 0.7)
        prior = np.exp([F.varsel_log_prior(t) for t in F.enumerate_states(4)])
        np.testing.assert_allclose(K.stationary(), prior, atol=1e-10)

    def test_rows_and_stationarity(self, small_model):
        K = F.build_flip_kernel(small_model, 1.0)
        np.testing.assert_allclose(K.matrix.sum(axis=1), 1.0, atol=1e-12)
        post = F.exact_posterior(small_model)
        np.testing.assert_allclose(K.stationary(), post, atol=1e-10)
        flux = post[:, None] * K.matrix
        np.testing.assert_allclose(flux, flux.T, atol=1e-14)

    def test_sweep_kernel_stationary(self, small_model):
        K = F.build_flip_kernel(small_model, 0.2, sweep=True)
        np.testing.assert_allclose(K.target @ K.matrix, K.target, atol=1e-9)

    def test_zeta_guard(self, small_model):
        with pytest.raises(ValueError):
            F.build_flip_kernel(small_model, 0.0)

    def test_simulation_matches_exact(self):
        model = F.load_varsel_csv(F.fixture_path("varsel_sparse.csv"))
        states = F.simulate_flip_chain(model, 1.0, 100_000, np.random.default_rng(4))
        freq = np.bincount(states, minlength=256) / states.size
        assert F.tv_distance(freq, F.exact_posterior(model)) < 0.05


class TestMinorization:
    def test_identical_rows(self):
        row = np.array([0.2, 0.5, 0.3])
        pair = F.minorization_pair(F.FiniteKernel(np.tile(row, (3, 1))), 1)
        assert pair.epsilon == pytest.approx(1.0)
        np.testing.assert_allclose(pair.nu, row)

    def test_two_state(self):
        pair = F.minorization_pair(F.FiniteKernel([[0.9, 0.1], [0.2, 0.8]]), 1)
        assert pair.epsilon == pytest.approx(0.3)
        np.testing.assert_allclose(pair.nu, [2 / 3, 1 / 3])

    @settings(max_examples=50, deadline=None)
    @given(st.integers(2, 7), st.integers(1, 4), st.integers(0, 2**31 - 1))
    def test_certificate_reverifies(self, S, n, seed):
        K = F.FiniteKernel(_random_kernel(np.random.default_rng(seed), S, sparsity=0.3))
        assert F.minorization_pair(K, n).verify(K)

    def test_population_constant_equal_targets(self):
        pair = F.MinorizationPair(1, 0.4, np.array([0.5, 0.5]))
        eps_star, phi, rho1 = F.population_minorization_constant(pair, [0.3, 0.7], [0.3, 0.7])
        assert (rho1, phi) == pytest.approx((1.0, 1.0))
        assert eps_star == pytest.approx(0.16)

    def test_population_constant_two_state(self):
        pair = F.MinorizationPair(1, 0.5, np.array([0.5, 0.5]))
        eps_star, phi, rho1 = F.population_minorization_constant(pair, [0.9, 0.1], [0.5, 0.5])
        assert rho1 == pytest.approx(1.8)
        assert phi == pytest.approx(0.5 + 0.5 * (0.1 / 0.5) / 1.8)
        assert eps_star <= pair.epsilon**2

    def test_population_constant_support_mismatch(self):
        pair = F.MinorizationPair(1, 0.5, np.array([0.5, 0.5]))
        with pytest.raises(ValueError):
            F.population_minorization_constant(pair, [1.0, 0.0], [0.5, 0.5])


class TestTvBoundIterations:
    def test_printed_pairs(self):
        assert F.tv_bound_iterations(20, 3.63e-3, 0.01) == 25326
        assert F.tv_bound_iterations(1, 6.01e-4, 0.01) == 7660

    def test_near_perfect_step(self):
        assert F.tv_bound_iterations(1, 0.99, 0.01) == 1

    def test_guards(self):
        for eps in (0.0, 1.0):
            with pytest.raises(ValueError):
                F.tv_bound_iterations(1, eps, 0.01)

    @given(st.floats(1e-4, 0.9), st.floats(1e-4, 0.9), st.integers(1, 50), st.integers(1, 50))
    def test_monotone(self, e1, e2, n1, n2):
        lo, hi = sorted((e1, e2))
        a, b = sorted((n1, n2))
        assert F.tv_bound_iterations(a, hi) <= F.tv_bound_iterations(b, lo)


class TestPairKernel:
    def _targets(self):
        K1, K2, p1, p2 = F.tempered_pair_toy([0.0, 1.0, 2.5], [0.0, -0.3, 0.2], 0.4, 1)
        return K1, K2, p1, p2

    def test_equal_targets_swap_deterministically(self):
        p = np.array([0.2, 0.3, 0.5])
        E = F.exchange_kernel(p, p).matrix
        S = 3
        for a in range(S):
            for b in range(S):
                assert E[a * S + b, b * S + a] == pytest.approx(1.0)

    def test_stationary_product(self):
        K1, K2, p1, p2 = self._targets()
        Kp = F.build_population_pair_kernel(K1, K2, 2)
        np.testing.assert_allclose(Kp.stationary(), np.kron(p1, p2), atol=1e-9)

    def test_pure_exchange_reversible(self):
        K1, K2, p1, p2 = self._targets()
        Kp = F.build_population_pair_kernel(K1, K2, 0)
        flux = np.kron(p1, p2)[:, None] * Kp.matrix
        np.testing.assert_allclose(flux, flux.T, atol=1e-12)

    def test_size_guard(self):
        K = F.FiniteKernel(np.full((40, 40), 1 / 40), np.full(40, 1 / 40))
        with pytest.raises(ValueError):
            F.build_population_pair_kernel(K, K, 1)


class TestDobrushinAndMixing:
    def test_dobrushin(self):
        assert F.dobrushin(np.tile([0.3, 0.7], (2, 1))) == 0.0
        assert F.dobrushin(np.eye(3)) == 1.0
        assert F.dobrushin(np.array([[0.9, 0.1], [0.2, 0.8]])) == pytest.approx(0.7)

    def test_mixing_condition(self):
        assert F.mixing_condition_eps(np.tile([0.3, 0.7], (3, 1))) == pytest.approx(1.0)
        assert F.mixing_condition_eps(np.array([[1.0, 0.0], [0.5, 0.5]])) == 0.0

    @settings(max_examples=50, deadline=None)
    @given(st.integers(2, 6), st.integers(0, 2**31 - 1))
    def test_mixing_certificate(self, S, seed):
        P = _random_kernel(np.random.default_rng(seed), S)
        eps = F.mixing_condition_eps(P)
        assert np.all(P[:, None, :] >= eps * P[None, :, :] - 1e-15)
        # tight: some triple binds
        assert np.any(np.isclose(P[:, None, :], eps * P[None, :, :], rtol=1e-12, atol=0))


class TestProp1:
    def test_equal_targets_have_zero_alpha(self):
        K1, K2, p1, _ = F.tempered_pair_toy([0.0, 1.0, 2.0], [0.0, 0.0, 0.0], 1.0, 2)
        KM = np.kron(K1.matrix, K2.matrix)
        rep = F.prop1_verify(KM, {(0, 1): 1.0}, [p1, p1], np.eye(9)[0], 10)
        assert rep.alpha == pytest.approx(0.0, abs=1e-15)
        assert rep.factor == pytest.approx(2 * (1 - rep.epsilon))

    def test_factor_arithmetic(self):
        u = np.full(4, 0.25)
        KM = np.tile(u, (4, 1))
        KM[0] = [0.225, 0.275, 0.25, 0.25]
        p = np.array([0.5, 0.5])
        rep = F.prop1_verify(KM, {(0, 1): 1.0}, [p, p], np.eye(4)[0], 5)
        assert rep.epsilon == pytest.approx(0.9)
        assert rep.factor == pytest.approx(0.2)

    def test_condition_not_met(self):
        p = np.array([0.5, 0.5])
        with pytest.raises(F.ConditionNotMetError):
            F.prop1_verify(np.eye(4), {(0, 1): 1.0}, [p, p], np.eye(4)[0], 5)

    def test_canonical_toy_extended_precision(self):
        K1, K2, p1, p2 = F.tempered_pair_toy([0, 1, 2], [0, 0, 0], 0.5, 2, dps=50)
        KM = np.kron(K1, K2)
        for start in range(9):
            rep = F.prop1_verify(KM, {(0, 1): 1.0}, [p1, p2], np.eye(9)[start], 50)
            assert rep.holds
            assert rep.resolved_steps == 50

    def test_double_precision_resolution_limited(self):
        K1, K2, p1, p2 = F.tempered_pair_toy([0, 1, 2], [0, 0, 0], 0.5, 2)
        rep = F.prop1_verify(np.kron(K1.matrix, K2.matrix), {(0, 1): 1.0}, [p1, p2], np.eye(9)[0], 50)
        assert rep.holds
        assert rep.resolved_steps < 50

    def test_detects_violation(self):
        # a mixing-condition instance on which the printed bound fails at n = 1;
        # confirmed at 50 digits so the excess is not round-off
        ll = [3.27175632, 0.82785597, -1.11729613]
        lp = [-1.94426498, -1.3077532, 1.08683078]
        K1, K2, p1, p2 = F.tempered_pair_toy(ll, lp, 0.016344793837667064, 2, dps=50)
        rep = F.prop1_verify(np.kron(K1, K2), {(0, 1): 1.0}, [p1, p2], np.eye(9)[0], 5)
        assert 1 in rep.violations
        assert rep.ratio[0] > 2.0

    @pytest.mark.xfail(strict=True, reason="the contraction bound does not hold on every "
                       "instance satisfying the mixing condition; see decisions ledger")
    @settings(max_examples=40, deadline=None, derandomize=True)
    @given(st.integers(0, 2**31 - 1))
    def test_never_violated_on_mixing_instances(self, seed):
        rng = np.random.default_rng(seed)
        ll = rng.normal(0, rng.uniform(0.1, 4), 3)
        lp = rng.normal(0, 1, 3)
        K1, K2, p1, p2 = F.tempered_pair_toy(ll, lp, rng.uniform(0.01, 1), int(rng.integers(1, 4)))
        KM = np.kron(K1.matrix, K2.matrix)
        rep = F.prop1_verify(KM, {(0, 1): 1.0}, [p1, p2], np.eye(9)[0], 10)
        assert rep.holds


class TestTheorem1:
    def _toy(self):
        K1, K2, p1, p2 = F.tempered_pair_toy([0.0, 1.5, 3.0, 0.5], [0.0, 0.2, -0.4, 0.1], 0.2, 1)
        Kpop = F.build_population_pair_kernel(K1, K2, 1)
        pair = F.minorization_pair(K2, 1)
        theta, nu_star = F.theorem1_nu_star(K1, pair, p1, p2)
        return Kpop, theta, nu_star

    def test_zero_theta_vacuous(self):
        Kpop, _, nu_star = self._toy()
        assert F.theorem1_verify(Kpop, 0.0, nu_star).holds

    def test_certificate_holds(self):
        Kpop, theta, nu_star = self._toy()
        assert theta > 0
        assert nu_star.sum() == pytest.approx(1.0)
        rep = F.theorem1_verify(Kpop, theta, nu_star)
        assert rep.n_violations == 0
        assert rep.min_slack >= -1e-12

    def test_slack_argmin_is_exhaustive_minimum(self):
        Kpop, theta, nu_star = self._toy()
        rep = F.theorem1_verify(Kpop, theta, nu_star)
        slack = Kpop.matrix - theta * nu_star[None, :]
        assert rep.min_slack == pytest.approx(slack.min(), abs=0)
        assert slack[rep.argmin] == rep.min_slack

    def test_inflated_theta_fails(self):
        Kpop, theta, nu_star = self._toy()
        big = 1.01 * float(np.min(Kpop.matrix.min(axis=0) / np.maximum(nu_star, 1e-300)))
        assert not F.theorem1_verify(Kpop, max(big, 2 * theta), nu_star).holds
