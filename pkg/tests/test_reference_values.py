"""Reference values for each operation, one block per module.

Values come from closed forms, independent re-derivations in this file, or
published benchmark constants; statistical checks use fixed seeds.
"""

import math

import numpy as np
import pytest
from scipy.stats import multivariate_normal, norm

from target_shapley import (
    ExperimentConfig,
    GaussianLinearOptimalDensity,
    GaussianLinearSpec,
    gaussian_linear,
    gl_failure_probability,
    gl_target_closed_sobol,
    gl_target_ev,
    gl_target_shapley,
    run,
)
from target_shapley.aggregation import (
    StandardizationMap,
    box_stats,
    fit_standardization,
    indicator_variance,
    permutation_aggregate,
    subset_aggregate,
)
from target_shapley.benchmarks import FailureProblem, cantilever_beam, cantilever_phi, fire_spread, rate_of_spread
from target_shapley.distributions import GaussianMixtureModel, GaussianModel, proper_subsets
from target_shapley.indices import (
    t_ev_dmc_given_model,
    t_ev_dmc_is_given_model,
    t_ev_dmc_is_knn,
    t_ev_dmc_knn,
    t_ve_pf_given_model,
    t_ve_pf_is_given_model,
    t_ve_pf_is_knn,
    t_ve_pf_knn,
)
from target_shapley.knn import SubspaceKNN, brute_force_neighbours
from target_shapley.rare_event import (
    CEConfig,
    WeightedFailureSample,
    cross_entropy_fit,
    is_failure_probability,
    is_pt_squared_unbiased,
    mc_failure_probability,
    variance_of_mean_unbiased,
)

P_DEFAULT_LITERATURE = 4.897e-3
CANTILEVER_REFERENCE = np.array([0.146, 0.001, 0.103, 0.282, 0.254, 0.214])


def within_3se(values, ref):
    values = np.asarray(values, dtype=float)
    se = values.std(ddof=1) / math.sqrt(len(values))
    return abs(values.mean() - ref) <= 3 * se


def default_cov():
    c = np.eye(3)
    c[1, 2] = c[2, 1] = -0.3
    return c


def linear_problem(beta, cov, t, mean=None):
    beta = np.asarray(beta, dtype=float)
    mean = np.zeros(len(beta)) if mean is None else mean
    return gaussian_linear(GaussianLinearSpec(beta, mean, cov, t))


# --------------------------------------------------------------------------
# distributions
# --------------------------------------------------------------------------


class TestGaussianConditionals:
    def test_identity_covariance_unchanged(self, rng):
        m = GaussianModel([1.0, -2.0, 0.5], np.eye(3))
        c = m.conditional((0, 2), np.array([7.0]))
        np.testing.assert_array_equal(c.mean, [1.0, 0.5])
        np.testing.assert_array_equal(c.cov, np.eye(2))

    def test_bivariate_textbook(self):
        rho = 0.7
        m = GaussianModel([1.0, 2.0], [[1.0, rho], [rho, 1.0]])
        c = m.conditional((0,), np.array([3.0]))
        assert c.mean[0] == pytest.approx(1.0 + rho * (3.0 - 2.0))
        assert c.cov[0, 0] == pytest.approx(1 - rho**2)

    def test_three_dim_schur(self):
        cov = default_cov()
        m = GaussianModel(np.zeros(3), cov)
        c = m.conditional((1,), np.array([0.0, 1.0]))
        # independent route: precision matrix block
        prec = np.linalg.inv(cov)
        var = 1 / prec[1, 1]
        mean = -var * (prec[1, 0] * 0.0 + prec[1, 2] * 1.0)
        assert c.mean[0] == pytest.approx(-0.3) == pytest.approx(mean)
        assert c.cov[0, 0] == pytest.approx(0.91) == pytest.approx(var)

    def test_single_component_mixture(self):
        g = GaussianModel([0.0, 1.0], [[1.0, 0.4], [0.4, 2.0]])
        mix = GaussianMixtureModel([1.0], [g])
        a = g.conditional((1,), np.array([0.3]))
        b = mix.conditional((1,), np.array([0.3]))
        np.testing.assert_allclose(b.components[0].mean, a.mean)
        np.testing.assert_allclose(b.components[0].cov, a.cov)

    def test_far_components_posterior(self):
        c1 = GaussianModel([0.0, 0.0], np.eye(2))
        c2 = GaussianModel([50.0, 50.0], np.eye(2))
        mix = GaussianMixtureModel([0.5, 0.5], [c1, c2])
        cond = mix.conditional((1,), np.array([0.0]))
        assert cond.weights[0] >= 1 - 1e-6

    def test_mixture_conditional_integrates(self):
        from scipy.integrate import quad

        c1 = GaussianModel([0.0, 0.0], [[1.0, 0.6], [0.6, 1.0]])
        c2 = GaussianModel([2.0, -1.0], [[0.5, -0.2], [-0.2, 1.5]])
        cond = GaussianMixtureModel([0.4, 0.6], [c1, c2]).conditional((1,), np.array([1.0]))
        val, _ = quad(lambda b: float(np.exp(cond.logpdf(np.array([[b]])))[0]), -30, 30)
        assert val == pytest.approx(1.0, abs=1e-8)


class TestMarginalDensity:
    def test_full_set_is_joint(self):
        m = GaussianModel([0.0, 1.0], [[1.0, 0.3], [0.3, 1.0]])
        x = np.array([[0.2, 0.4]])
        assert m.marginal_logpdf((0, 1), x)[0] == m.logpdf(x)[0]

    def test_standard_normal_constant(self):
        m = GaussianModel([0.0, 0.0], np.eye(2))
        assert math.exp(m.marginal_logpdf((0,), np.array([[0.0]]))[0]) == pytest.approx(0.398942, abs=1e-6)

    def test_default_pair(self):
        m = GaussianModel(np.zeros(3), default_cov())
        dens = math.exp(m.marginal_logpdf((1, 2), np.array([[0.0, 0.0]]))[0])
        assert dens == pytest.approx(1 / (2 * math.pi * math.sqrt(0.91)))


class TestSampling:
    def test_determinism(self):
        m = GaussianModel(np.zeros(3), default_cov())
        a = m.sample(50, np.random.default_rng(3))
        b = m.sample(50, np.random.default_rng(3))
        np.testing.assert_array_equal(a, b)

    def test_clt_bound(self):
        x = GaussianModel(np.zeros(3), np.eye(3)).sample(100_000, np.random.default_rng(4))
        assert np.all(np.abs(x.mean(axis=0)) < 4 / math.sqrt(100_000))

    def test_cantilever_correlation(self):
        x = cantilever_beam().input_model.sample(100_000, np.random.default_rng(5))
        assert np.corrcoef(x[:, 3], x[:, 4])[0, 1] == pytest.approx(-0.55, abs=0.02)


# --------------------------------------------------------------------------
# benchmark models
# --------------------------------------------------------------------------


class TestGaussianLinear:
    def test_mc_literature_value(self):
        r = mc_failure_probability(gaussian_linear(), 1_000_000, np.random.default_rng(6))
        assert abs(r.estimate - 4.9e-3) <= 3 * r.standard_error + 0.05e-3

    def test_limit_threshold(self, rng):
        p = gaussian_linear().with_threshold(-np.inf)
        r = mc_failure_probability(p, 1000, rng)
        assert r.estimate == 1.0

    def test_projection(self):
        p = linear_problem([1.0, 0.0], np.eye(2), 0.5)
        x = np.array([[1.0, -100.0], [1.0, 100.0]])
        np.testing.assert_array_equal(p.evaluate(x), [1.0, 1.0])


class TestCantilever:
    def test_mc_literature_value(self):
        r = mc_failure_probability(cantilever_beam(), 1_000_000, np.random.default_rng(7))
        # published figure is given to two significant digits
        assert abs(r.estimate - 1.5e-2) <= 3 * r.standard_error + 0.05e-2

    def test_inverse_proportional_to_modulus(self, rng):
        x = cantilever_beam().input_model.sample(10, rng)
        y = x.copy()
        y[:, 2] *= 2
        np.testing.assert_allclose(cantilever_phi(y), cantilever_phi(x) / 2, rtol=1e-14)


def rate_straight_line(delta, sigma, h, rho_p, m_l, m_d, s_t, u, tan_phi, p):
    """Scalar transcription of the spread equations (metric in, cm/s out)."""
    ft = 1 / 30.48
    delta = delta * ft
    sigma = sigma * 30.48
    h = h * 1.8
    rho_p = rho_p * 62.428
    u = u * 1000 / 0.3048 / 60
    w0 = 4.8 / 4.8824 * 1 / (1 + math.exp((15 - delta) / 3.5))
    gmax = sigma**1.5 / (495 + 0.0594 * sigma**1.5)
    bop = 3.348 * sigma ** (-0.8189)
    a = 133 * sigma ** (-0.7913)
    th = (301.4 - 305.87 * (m_l - m_d) + 2260 * m_d) / (2260 * m_l)
    th = min(1.0, max(0.0, th))
    mum = math.exp(-7.3 * p * m_d - (7.3 * th + 2.13) * (1 - p) * m_l)
    mus = 0.174 * s_t ** (-0.19)
    c = 7.47 * math.exp(-0.133 * sigma**0.55)
    b = 0.02526 * sigma**0.54
    e = 0.715 * math.exp(-3.59e-4 * sigma)
    wn = w0 * (1 - s_t)
    rhob = w0 / delta
    eps = math.exp(-138 / sigma)
    qig = 130.87 + 1054.43 * m_d
    beta = rhob / rho_p
    gam = gmax * (beta / bop) ** a * math.exp(a * (1 - beta / bop))
    xi = math.exp((0.792 + 0.681 * sigma**0.5) * (beta + 0.1)) / (192 + 0.2595 * sigma)
    phiw = c * u**b * (beta / bop) ** (-e)
    phis = 5.275 * beta ** (-0.3) * tan_phi**2
    ir = gam * wn * h * mum * mus
    r = ir * xi * (1 + phiw + phis) / (rhob * eps * qig)
    return r * 30.48 / 60


FIRE_POINT = (
    math.exp(2.19), math.exp(3.31), math.exp(8.48), math.exp(-0.592),
    1.18, 0.19, 0.049, 6.9 * math.exp(1.0174), 0.38, math.exp(-2.19),
)


class TestFireSpread:
    def test_two_transcriptions_agree(self):
        ref = rate_straight_line(*FIRE_POINT)
        assert rate_of_spread(np.array([FIRE_POINT]))[0] == pytest.approx(ref, rel=1e-5)

    def test_no_wind_no_slope(self):
        x = np.array(FIRE_POINT)
        x[7] = 0.0
        x[8] = 0.0
        base = rate_of_spread(x[None, :])[0]
        # with no wind and no slope the spread factor is 1: R = I_R xi / (rho_b eps Q_ig)
        with_factor_one = rate_straight_line(*x)
        assert base == pytest.approx(with_factor_one, rel=1e-5)
        windy = x.copy()
        windy[7] = 1.0
        assert rate_of_spread(windy[None, :])[0] > base

    def test_positive_on_probe(self):
        p = fire_spread()
        r = rate_of_spread(p.input_model.sample(100_000, np.random.default_rng(8)))
        assert np.all(r > 0) and np.all(np.isfinite(r))

    @pytest.mark.slow
    def test_mc_literature_value(self):
        # faithful check of the published reference at N = 1e7
        r = mc_failure_probability(fire_spread(), 10_000_000, np.random.default_rng(9))
        assert abs(r.estimate - 1.4e-4) <= 3 * r.standard_error


# --------------------------------------------------------------------------
# rare-event estimators
# --------------------------------------------------------------------------


class TestRareEvent:
    def test_certain_failure(self, rng):
        p = gaussian_linear().with_threshold(-np.inf)
        r = mc_failure_probability(p, 500, rng)
        assert (r.estimate, r.standard_error) == (1.0, 0.0)

    def test_is_with_input_density_is_mc(self, rng):
        p = gaussian_linear().with_threshold(2.0)
        x = p.input_model.sample(5000, rng)
        s = WeightedFailureSample.from_points(p, p.input_model, x)
        assert is_failure_probability(s) == np.mean(p.indicator(x))

    def test_optimal_density_zero_variance(self, rng):
        spec = GaussianLinearSpec([1.0, 1.0], [0.0, 0.0], np.eye(2), 3.3)
        g = GaussianLinearOptimalDensity(spec)
        s = WeightedFailureSample.draw(gaussian_linear(spec), g, 2000, rng)
        np.testing.assert_allclose(s.weights, g.p, rtol=1e-12)
        assert variance_of_mean_unbiased(s.weights) == pytest.approx(0.0, abs=1e-18)

    def test_one_dimensional_is(self, rng):
        p = linear_problem([1.0], np.eye(1), 2.0)
        g = GaussianModel([2.0], [[1.0]])
        est = [is_failure_probability(WeightedFailureSample.draw(p, g, 1000, rng)) for _ in range(200)]
        assert within_3se(est, norm.sf(2.0))

    def test_pt_squared_trivial(self, rng):
        class S:
            weights = np.ones(10)

        assert is_pt_squared_unbiased(S) == 1.0
        S.weights = np.zeros(10)
        assert is_pt_squared_unbiased(S) == 0.0

    def test_pt_squared_unbiased(self, rng):
        p = linear_problem([1.0], np.eye(1), 2.0)
        g = GaussianModel([2.0], [[1.0]])
        est = [is_pt_squared_unbiased(WeightedFailureSample.draw(p, g, 100, rng)) for _ in range(10_000)]
        assert within_3se(est, norm.sf(2.0) ** 2)

    def test_variance_of_mean(self, rng):
        assert variance_of_mean_unbiased(np.full(7, 3.0)) == 0.0
        assert variance_of_mean_unbiased([0.0, 1.0]) == 0.25
        est = [variance_of_mean_unbiased(rng.random(50) < 0.3) for _ in range(10_000)]
        assert within_3se(est, 0.3 * 0.7 / 50)


class TestCrossEntropy:
    def test_easy_threshold_one_level(self, rng):
        # threshold at the median of beta^T X
        p = gaussian_linear().with_threshold(0.0)
        res = cross_entropy_fit(p, CEConfig(samples_per_level=20_000), rng, final_size=0)
        assert res.n_levels == 1
        mean, _ = res.density.moments()
        # E[X | S > 0] = Sigma beta / q * E[S | S > 0] with S ~ N(0, q), q = 2.4
        q = 2.4
        expect = default_cov().sum(axis=1) / q * math.sqrt(q) * norm.pdf(0) / 0.5
        np.testing.assert_allclose(mean, expect, atol=0.03)

    def test_single_gaussian_default_problem(self):
        rng = np.random.default_rng(10)
        n = 20_000
        res = cross_entropy_fit(gaussian_linear(), CEConfig(), rng, final_size=n)
        p = is_failure_probability(res.sample)
        se = math.sqrt(variance_of_mean_unbiased(res.sample.weights))
        assert abs(p - P_DEFAULT_LITERATURE) <= 3 * se
        budget = res.n_calls
        cv_is = se / p
        cv_mc = math.sqrt((1 - p) / (p * budget))
        assert cv_is < cv_mc

    def test_fire_mixture(self):
        rng = np.random.default_rng(11)
        cfg = CEConfig(family="gaussian-mixture", n_components=2, samples_per_level=5000)
        res = cross_entropy_fit(fire_spread(), cfg, rng, final_size=10_000)
        p = is_failure_probability(res.sample)
        assert abs(p - 1.4e-4) <= 0.2 * 1.4e-4


# --------------------------------------------------------------------------
# neighbour search
# --------------------------------------------------------------------------


class TestNeighbours:
    def test_single_point(self):
        assert SubspaceKNN(np.zeros((1, 2)), (0,)).query([0], 1).tolist() == [[0]]

    def test_full_set_is_plain_knn(self, rng):
        pts = rng.normal(size=(200, 3))
        from scipy.spatial import distance_matrix

        dm = distance_matrix(pts, pts)
        got = SubspaceKNN(pts, (0, 1, 2)).query(np.arange(200), 4)
        np.testing.assert_array_equal(got, np.argsort(dm, axis=1, kind="stable")[:, :4])

    def test_tie_break_line(self):
        pts = np.array([[0.0], [1.0], [2.0], [3.0]])
        assert SubspaceKNN(pts, (0,)).query([1], 3).tolist() == [[1, 0, 2]]

    def test_k_equals_n(self, rng):
        pts = rng.normal(size=(30, 2))
        out = SubspaceKNN(pts, (1,)).query(np.arange(30), 30)
        assert all(sorted(r) == list(range(30)) for r in out.tolist())

    def test_duplicates_first(self):
        pts = np.array([[5.0], [1.0], [1.0], [3.0]])
        assert SubspaceKNN(pts, (0,)).query([2], 2).tolist() == [[2, 1]]
        assert SubspaceKNN(pts, (0,)).query([1], 2).tolist() == [[1, 2]]

    def test_against_brute_force(self, rng):
        pts = rng.normal(size=(1000, 4))
        rows = rng.choice(1000, size=50, replace=False)
        np.testing.assert_array_equal(
            SubspaceKNN(pts, (0, 2, 3)).query(rows, 5), brute_force_neighbours(pts, (0, 2, 3), rows, 5)
        )


# --------------------------------------------------------------------------
# conditional-index estimators
# --------------------------------------------------------------------------


def only_on(coords, t=0.0, d=3):
    """Problem whose limit state depends on ``coords`` only, independent inputs."""
    beta = np.zeros(d)
    beta[list(coords)] = 1.0
    return linear_problem(beta, np.eye(d), t)


class TestDoubleMC:
    def test_depends_only_on_complement(self, rng):
        assert t_ev_dmc_given_model(only_on([1, 2]), (0,), 500, 3, rng).value == 0.0

    def test_depends_only_on_u(self, rng):
        prob = only_on([0], t=1.0)
        p = norm.sf(1.0)
        est = [t_ev_dmc_given_model(prob, (0,), 200, 3, rng).value for _ in range(300)]
        assert within_3se(est, p * (1 - p))

    def test_default_problem_first_input(self):
        rng = np.random.default_rng(12)
        prob = gaussian_linear()
        est = [t_ev_dmc_given_model(prob, (0,), 2000, 3, rng).value for _ in range(500)]
        assert within_3se(est, gl_target_ev(GaussianLinearSpec.default(), (0,)))

    def test_is_reduction_offset(self, gl3):
        # with g = f the IS form equals the plain one shifted by p_hat - mean(psi)
        u = (1,)
        plain = t_ev_dmc_given_model(gl3, u, 300, 3, np.random.default_rng(0))
        rng = np.random.default_rng(0)
        f = gl3.input_model
        x_rest = f.sample_marginal((0, 2), 300, rng)
        x_u = f.sample_conditional(u, x_rest, 3, rng)
        x = np.empty((300, 3, 3))
        x[:, :, [1]] = x_u
        x[:, :, [0, 2]] = x_rest[:, None, :]
        psi = gl3.indicator(x.reshape(-1, 3))
        is_ = t_ev_dmc_is_given_model(gl3, f, u, 300, 3, 0.004, np.random.default_rng(0))
        assert is_.value - plain.value == pytest.approx(0.004 - psi.mean(), abs=1e-15)

    def test_no_failure_is_zero(self, rng):
        prob = gaussian_linear().with_threshold(1e9)
        g = GaussianModel(np.zeros(3), default_cov())
        assert t_ev_dmc_is_given_model(prob, g, (0,), 100, 3, 0.0, rng).value == 0.0

    def test_is_default_problem_third_input(self):
        rng = np.random.default_rng(13)
        prob = gaussian_linear()
        g = cross_entropy_fit(prob, CEConfig(), rng, final_size=0).density
        ref = gl_target_ev(GaussianLinearSpec.default(), (2,))
        est_is, est_plain = [], []
        for _ in range(500):
            pilot = WeightedFailureSample.draw(prob, g, 1000, rng)
            est_is.append(t_ev_dmc_is_given_model(prob, g, (2,), 100, 3, float(pilot.weights.mean()), rng).value)
            est_plain.append(t_ev_dmc_given_model(prob, (2,), 100, 3, rng).value)
        assert within_3se(est_is, ref)
        assert np.var(est_is) < np.var(est_plain)

    def test_knn_degenerate_geometry(self, rng):
        # all points share x_{-u}: every neighbourhood is the whole cloud
        prob = gaussian_linear().with_threshold(0.5)
        g = GaussianModel([0.5, 0.5, 0.5], default_cov())
        pts = np.zeros((4, 3))
        pts[:, 0] = rng.normal(size=4) * 2
        s = WeightedFailureSample.from_points(prob, g, pts)
        out = t_ev_dmc_is_knn(s, (0,), 5, 4, rng, pt_is=0.3)
        w = s.weights
        r = np.exp(g.marginal_logpdf((1, 2), np.zeros((1, 2))) - prob.input_model.marginal_logpdf((1, 2), np.zeros((1, 2))))[0]
        wbar, w2 = w.mean(), (w * w).mean()
        expect = 0.3 - (wbar**2 * r - (w2 - wbar**2) / 3 * r)
        assert out.value == pytest.approx(expect, rel=1e-12)
        plain = t_ev_dmc_knn(s, (0,), 5, 4, rng)
        assert plain.value == pytest.approx(np.var(s.indicators, ddof=1), rel=1e-12)


class TestPickFreeze:
    def test_certain_failure(self, rng):
        prob = gaussian_linear().with_threshold(-np.inf)
        assert t_ve_pf_given_model(prob, (0,), 100, 1.0, rng).value == 0.0

    def test_ignored_input(self):
        rng = np.random.default_rng(14)
        prob = only_on([1, 2], t=1.0)
        p = gl_failure_probability(GaussianLinearSpec([0.0, 1.0, 1.0], np.zeros(3), np.eye(3), 1.0))
        est = [t_ve_pf_given_model(prob, (0,), 500, p * p, rng).value for _ in range(400)]
        assert within_3se(est, 0.0)

    def test_default_problem_pair(self):
        rng = np.random.default_rng(15)
        prob = gaussian_linear()
        spec = GaussianLinearSpec.default()
        p = gl_failure_probability(spec)
        est = [t_ve_pf_given_model(prob, (0, 1), 5000, p * p, rng).value for _ in range(500)]
        assert within_3se(est, gl_target_closed_sobol(spec, (0, 1)))

    def test_is_reduction_bit_exact(self, gl3):
        for u in proper_subsets(3):
            a = t_ve_pf_given_model(gl3, u, 300, 2e-5, np.random.default_rng(1))
            b = t_ve_pf_is_given_model(gl3, gl3.input_model, u, 300, 2e-5, np.random.default_rng(1))
            assert a.value == b.value

    def test_is_default_problem_second_input(self):
        rng = np.random.default_rng(16)
        prob = gaussian_linear()
        spec = GaussianLinearSpec.default()
        g = cross_entropy_fit(prob, CEConfig(), rng, final_size=0).density
        est = []
        for _ in range(500):
            pilot = WeightedFailureSample.draw(prob, g, 1000, rng)
            est.append(t_ve_pf_is_given_model(prob, g, (1,), 200, is_pt_squared_unbiased(pilot), rng).value)
        assert within_3se(est, gl_target_closed_sobol(spec, (1,)))

    def test_knn_reduction_bit_exact(self, gl3, rng):
        s = WeightedFailureSample.draw(gl3.with_threshold(2.0), gl3.input_model, 3000, rng)
        for u in proper_subsets(3):
            a = t_ve_pf_knn(s, u, 500, np.random.default_rng(2))
            b = t_ve_pf_is_knn(s, u, 500, np.random.default_rng(2))
            assert a.value == b.value

    def test_knn_all_safe(self, gl3, rng):
        g = GaussianModel(np.zeros(3), default_cov())
        s = WeightedFailureSample.draw(gl3.with_threshold(1e9), g, 200, rng)
        assert t_ve_pf_is_knn(s, (0,), 50, rng).value == 0.0


# --------------------------------------------------------------------------
# Shapley aggregation
# --------------------------------------------------------------------------


class TestAggregationAxioms:
    def test_symmetry(self):
        assert subset_aggregate({(0,): 0.3, (1,): 0.3}, 2, 1.0).tolist() == [0.5, 0.5]

    def test_dummy(self):
        costs = {(0,): 0.8, (1,): 0.0}
        np.testing.assert_array_equal(subset_aggregate(costs, 2, 0.8), [1.0, 0.0])

    def test_oracle_sums_to_one(self):
        assert gl_target_shapley(GaussianLinearSpec.default()).sum() == pytest.approx(1.0, abs=1e-8)

    def test_six_permutations(self, rng):
        costs = {u: float(rng.random()) for u in proper_subsets(3)}
        perms = [(0, 1, 2), (0, 2, 1), (1, 0, 2), (1, 2, 0), (2, 0, 1), (2, 1, 0)]
        np.testing.assert_array_equal(permutation_aggregate(costs, 3, 6, 1.0, permutations=perms),
                                      subset_aggregate(costs, 3, 1.0))

    def test_single_input(self):
        assert subset_aggregate({}, 1, 0.2).tolist() == [1.0]
        assert permutation_aggregate({}, 1, 3, 0.2).tolist() == [1.0]

    def test_random_permutations_vs_subset(self):
        oracle = gl_target_shapley(GaussianLinearSpec.default())
        common = dict(method="pf-is-given-model", n_rep=200, seed=17)
        perm = run(ExperimentConfig(aggregation="permutation", m=50, **common)).effects
        sub = run(ExperimentConfig(**common)).effects
        for i in range(3):
            assert within_3se(perm[:, i], oracle[i])
        assert np.all(perm.var(axis=0) >= sub.var(axis=0))


class TestNormaliser:
    def test_plugin_values(self):
        assert indicator_variance(0.0) == 0.0
        assert indicator_variance(0.5) == 0.25
        assert indicator_variance(P_DEFAULT_LITERATURE) == pytest.approx(P_DEFAULT_LITERATURE * (1 - P_DEFAULT_LITERATURE))


class TestStandardisation:
    def test_identity_on_standard_sample(self, rng):
        x = rng.normal(size=(100_000, 3))
        smap = fit_standardization(None, x, mode="empirical")
        assert np.all(np.abs(smap.shift) < 0.02) and np.all(np.abs(smap.scale - 1) < 0.02)

    def test_oracle_invariance_under_rescaling(self):
        base = GaussianLinearSpec.default()
        c, i = 7.5, 1
        scale = np.ones(3)
        scale[i] = c
        beta = base.beta.copy()
        beta[i] /= c
        spec = GaussianLinearSpec(beta, base.mean * scale, base.cov * np.outer(scale, scale), base.t)
        np.testing.assert_allclose(gl_target_shapley(spec), gl_target_shapley(base), atol=1e-10)

    def test_preprocessing_helps_cantilever(self):
        # the scale gap between E and the other inputs hurts plain given-data runs most
        dist = {}
        for pre in (True, False):
            rec = run(ExperimentConfig(problem="cantilever-beam", method="pf-knn", aux="none", n_rep=50, seed=18,
                                       preprocess=pre))
            dist[pre] = np.abs(np.nanmedian(rec.effects, axis=0) - CANTILEVER_REFERENCE).sum()
        assert dist[True] < dist[False]


# --------------------------------------------------------------------------
# oracles
# --------------------------------------------------------------------------


class TestOracles:
    def test_median_threshold(self):
        spec = GaussianLinearSpec([1.0, 2.0], [1.0, 1.0], np.eye(2), 3.0)
        assert gl_failure_probability(spec) == 0.5

    def test_default_literature_value(self):
        assert gl_failure_probability(GaussianLinearSpec.default()) == pytest.approx(4.9e-3, abs=0.05e-3)

    def test_one_dimensional(self):
        spec = GaussianLinearSpec([1.0], [0.0], [[1.0]], 2.0)
        assert gl_failure_probability(spec) == pytest.approx(0.022750, abs=5e-7)

    def test_complement_unused(self):
        spec = GaussianLinearSpec([1.0, 0.0], [0.0, 0.0], [[1.0, 0.5], [0.5, 1.0]], 1.0)
        p = gl_failure_probability(spec)
        assert gl_target_closed_sobol(spec, (0,)) == p * (1 - p)

    def test_dummy_input(self):
        spec = GaussianLinearSpec([1.0, 0.0], [0.0, 0.0], np.eye(2), 1.0)
        assert gl_target_closed_sobol(spec, (1,)) == 0.0

    def test_brute_force_double_mc(self):
        # X_1 is independent of (X_2, X_3): P(F | x_1) = Phi((x_1 - 4)/sqrt(1.4))
        rng = np.random.default_rng(19)
        x1 = rng.standard_normal(10_000_000)
        q = norm.cdf((x1 - 4) / math.sqrt(1.4))
        p = norm.sf(4 / math.sqrt(2.4))
        vals = q * q
        se = vals.std(ddof=1) / math.sqrt(len(vals))
        assert abs(vals.mean() - p * p - gl_target_closed_sobol(GaussianLinearSpec.default(), (0,))) <= 3 * se

    def test_exchangeable_pair(self):
        spec = GaussianLinearSpec([1.0, 1.0], [0.0, 0.0], np.eye(2), 1.5)
        np.testing.assert_allclose(gl_target_shapley(spec), [0.5, 0.5], atol=1e-12)

    def test_dummy_vector(self):
        spec = GaussianLinearSpec([1.0, 0.0, 0.0, 0.0], np.zeros(4), np.eye(4), 1.0)
        np.testing.assert_allclose(gl_target_shapley(spec), [1, 0, 0, 0], atol=1e-12)


# --------------------------------------------------------------------------
# harness
# --------------------------------------------------------------------------


class TestHarnessReference:
    def test_single_replication_byte_identical(self):
        cfg = dict(method="dmc-is-knn", n_rep=1, seed=20)
        a = run(ExperimentConfig(**cfg)).to_json(include_timing=False)
        b = run(ExperimentConfig(**cfg)).to_json(include_timing=False)
        assert a == b

    def test_cantilever_mixture(self):
        rec = run(ExperimentConfig(problem="cantilever-beam", method="pf-is-knn", aux="ce-gm", n_rep=30, seed=21))
        med = np.nanmedian(rec.effects, axis=0)
        assert np.abs(med - CANTILEVER_REFERENCE).max() <= 0.06
        assert set(np.argsort(med)[-3:]) == {3, 4, 5}


class TestBoxStats:
    def test_single_value(self):
        s = box_stats([0.3])
        assert s["q1"] == s["median"] == s["q3"] == 0.3

    def test_constant(self):
        s = box_stats(np.full(20, 0.2))
        assert s["q3"] - s["q1"] == 0.0
        assert s["whisker_low"] == s["whisker_high"] == 0.2

    def test_matches_statistics_module(self):
        import statistics

        rec = run(ExperimentConfig(method="pf-is-knn", n_rep=200, seed=22))
        for i, name in enumerate(rec.names):
            col = rec.effects[:, i].tolist()
            q1, q2, q3 = statistics.quantiles(col, n=4, method="inclusive")
            s = rec.to_dict()["summary"][name]
            assert (s["q1"], s["median"], s["q3"]) == pytest.approx((q1, q2, q3), rel=1e-12)
