import numpy as np
import pytest
from scipy import stats

from hdlda.diagnostics import ks_2samp_statistic, ks_critical_value, ks_statistic
from hdlda.model import PopulationModel, ProblemDims
from hdlda.rng import RngStream
from hdlda.stochastic import (
    DHatParams,
    McSample,
    ThetaScalarParams,
    brute_force_d_hat,
    brute_force_theta,
    brute_force_xi,
    delta_sq_noncentrality,
    sample_d_hat,
    sample_theta_scalar,
    sample_theta_vector,
    simulate_training,
)

KS_2E4 = 0.019  # two-sample 1% critical value at 2e4 + 2e4, rounded up


def random_model(seed, p, scale=1.0):
    rng = np.random.default_rng(seed)
    a = rng.standard_normal((p, p))
    sigma = a @ a.T / p + np.eye(p)
    return PopulationModel(scale * rng.uniform(-1, 1, p), scale * rng.uniform(-1, 1, p), sigma)


def model_with_delta(p, delta):
    mu1 = np.zeros(p)
    mu1[0] = delta
    return PopulationModel(mu1, np.zeros(p), np.eye(p))


class TestThetaScalar:
    def test_params_from_model(self):
        model = random_model(0, 4)
        l = np.array([1.0, -1.0, 0.5, 0.0])
        params = ThetaScalarParams.from_model(model, l, ProblemDims(4, 10, 10))
        d = model.mean_diff
        sinv = np.linalg.inv(model.sigma)
        assert params.eta == pytest.approx(l @ sinv @ d)
        assert params.l_quad == pytest.approx(l @ sinv @ l)
        assert params.delta_sq == pytest.approx(d @ sinv @ d)

    def test_symmetric_under_equal_means(self):
        dims = ProblemDims(5, 20, 20)
        params = ThetaScalarParams(0.0, 2.0, 0.0, dims)
        x = sample_theta_scalar(RngStream(1), params, 100_000)
        assert abs(x.mean()) < 4 * x.std() / np.sqrt(x.size)

    def test_matches_raw_data(self):
        dims = ProblemDims(5, 25, 25)
        model = random_model(1, 5)
        l = np.ones(5)
        params = ThetaScalarParams.from_model(model, l, dims)
        rep = sample_theta_scalar(RngStream(2), params, 20_000)
        raw = brute_force_theta(RngStream(3), model, l, dims, 20_000)
        assert ks_2samp_statistic(rep, raw) < KS_2E4

    def test_p_equal_one_matches_raw_data(self):
        dims = ProblemDims(1, 6, 9)
        model = PopulationModel([1.0], [0.0], [[2.0]])
        params = ThetaScalarParams.from_model(model, [1.0], dims)
        rep = sample_theta_scalar(RngStream(4), params, 20_000)
        raw = brute_force_theta(RngStream(5), model, [1.0], dims, 20_000)
        assert ks_2samp_statistic(rep, raw) < KS_2E4

    def test_large_sample_location(self):
        dims = ProblemDims(5, 10_000, 10_000)
        model = random_model(2, 5)
        params = ThetaScalarParams.from_model(model, np.ones(5), dims)
        x = sample_theta_scalar(RngStream(6), params, 20_000)
        target = params.eta / (1 - dims.c)
        assert abs(x.mean() - target) < 4 * x.std() / np.sqrt(x.size)

    def test_deterministic_and_scalar(self):
        params = ThetaScalarParams(0.3, 1.0, 0.5, ProblemDims(4, 10, 10))
        a = sample_theta_scalar(RngStream(7), params, 50)
        b = sample_theta_scalar(RngStream(7), params, 50)
        np.testing.assert_array_equal(a, b)
        assert isinstance(sample_theta_scalar(RngStream(7), params), float)

    def test_substreams_uncorrelated(self):
        # The three driving variables come from disjoint substreams.
        s = RngStream(8)
        dims = ProblemDims(5, 20, 20)
        xi = s.substream(0).generator.chisquare(dims.xi_dof, 100_000)
        z0 = s.substream(1).generator.standard_normal(100_000)
        u = s.substream(2).substream(0).generator.chisquare(4, 100_000)
        for a, b in ((xi, z0), (xi, u), (z0, u)):
            assert abs(np.corrcoef(a, b)[0, 1]) < 0.01

    def test_rejects_bad_params(self):
        with pytest.raises(ValueError):
            ThetaScalarParams(0.0, 0.0, 0.0, ProblemDims(2, 5, 5))
        with pytest.raises(ValueError):
            ThetaScalarParams(0.0, 1.0, -1.0, ProblemDims(2, 5, 5))


class TestThetaVector:
    def test_single_row_matches_scalar(self):
        dims = ProblemDims(6, 20, 30)
        model = random_model(3, 6)
        l = np.arange(1.0, 7.0)
        vec = sample_theta_vector(RngStream(9), model, l[None, :], dims, 20_000)[:, 0]
        sc = sample_theta_scalar(RngStream(10), ThetaScalarParams.from_model(model, l, dims), 20_000)
        assert ks_2samp_statistic(vec, sc) < KS_2E4

    def test_symmetric_under_equal_means(self):
        dims = ProblemDims(4, 15, 15)
        model = PopulationModel(np.zeros(4), np.zeros(4), np.eye(4))
        x = sample_theta_vector(RngStream(11), model, np.eye(4)[:2], dims, 50_000)
        assert np.all(np.abs(x.mean(axis=0)) < 4 * x.std(axis=0) / np.sqrt(x.shape[0]))

    def test_matches_raw_data(self):
        dims = ProblemDims(6, 20, 30)
        model = random_model(4, 6)
        l_mat = np.array([[1.0, 0, -1, 0, 0, 0], [0, 1, 1, 1, 0, 0]])
        rep = sample_theta_vector(RngStream(12), model, l_mat, dims, 20_000)
        raw = []
        for xbar1, xbar2, s_pl in simulate_training(RngStream(13), model, dims, 20_000):
            a_hat = np.linalg.solve(s_pl, (xbar1 - xbar2)[..., None])[..., 0]
            raw.append(a_hat @ l_mat.T)
        raw = np.concatenate(raw)
        for k in range(2):
            assert ks_2samp_statistic(rep[:, k], raw[:, k]) < KS_2E4

    def test_shape_and_rank_checks(self):
        dims = ProblemDims(3, 10, 10)
        model = random_model(5, 3)
        assert sample_theta_vector(RngStream(0), model, np.eye(3)[:2], dims).shape == (2,)
        with pytest.raises(ValueError):
            sample_theta_vector(RngStream(0), model, np.array([[1.0, 0, 0], [2.0, 0, 0]]), dims)
        with pytest.raises(ValueError):
            sample_theta_vector(RngStream(0), model, np.eye(3), dims)


class TestDHat:
    def test_mirror_symmetry(self):
        dims = ProblemDims(10, 30, 30)
        g1 = sample_d_hat(RngStream(14), DHatParams(0.0, dims, 1), 100_000)
        g2 = sample_d_hat(RngStream(15), DHatParams(0.0, dims, 2), 100_000)
        a, b = np.mean(g1 > 0), np.mean(g2 < 0)
        se = np.sqrt(a * (1 - a) / 100_000 + b * (1 - b) / 100_000)
        assert abs(a - b) < 2.5 * se
        assert a == pytest.approx(0.5, abs=4 * np.sqrt(0.25 / 100_000))

    @pytest.mark.parametrize("group", [1, 2])
    def test_matches_raw_data(self, group):
        dims = ProblemDims(10, 50, 50)
        rep = sample_d_hat(RngStream(16), DHatParams(2.0, dims, group), 20_000)
        raw = brute_force_d_hat(RngStream(17), model_with_delta(10, 2.0), dims, group, 20_000)
        assert ks_2samp_statistic(rep, raw) < KS_2E4

    def test_unbalanced_matches_raw_data(self):
        dims = ProblemDims(8, 12, 40)
        for group in (1, 2):
            rep = sample_d_hat(RngStream(18), DHatParams(1.5, dims, group), 20_000)
            raw = brute_force_d_hat(RngStream(19), model_with_delta(8, 1.5), dims, group, 20_000)
            assert ks_2samp_statistic(rep, raw) < KS_2E4

    def test_p_equal_one(self):
        dims = ProblemDims(1, 8, 8)
        rep = sample_d_hat(RngStream(20), DHatParams(1.0, dims, 1), 20_000)
        raw = brute_force_d_hat(RngStream(21), model_with_delta(1, 1.0), dims, 1, 20_000)
        assert ks_2samp_statistic(rep, raw) < KS_2E4

    def test_leading_term_moment(self):
        # E[d_hat xi / (n - 2)] for group 1, from the representation's terms.
        dims = ProblemDims(10, 30, 50)
        delta = 1.5
        s = RngStream(22)
        d = sample_d_hat(s, DHatParams(delta, dims, 1), 400_000)
        xi = s.substream(0).generator.chisquare(dims.xi_dof, 400_000)
        y = d * xi / (dims.n - 2)
        lam, n1 = dims.lam, dims.n1
        expected = (lam * n1 - 2) / (2 * lam * n1) * (lam * (dims.p - 1) + delta**2 + lam) + delta**2 / (lam * n1)
        assert abs(y.mean() - expected) < 4 * y.std() / np.sqrt(y.size)

    def test_large_separation(self):
        dims = ProblemDims(5, 50, 50)
        d = sample_d_hat(RngStream(23), DHatParams(10.0, dims, 1), 20_000)
        assert np.mean(d > 0) > 0.99

    def test_validation(self):
        dims = ProblemDims(2, 5, 5)
        with pytest.raises(ValueError):
            DHatParams(-1.0, dims)
        with pytest.raises(ValueError):
            DHatParams(1.0, dims, 3)


class TestRawData:
    def test_equal_means_symmetric(self):
        dims = ProblemDims(3, 10, 10)
        model = PopulationModel(np.zeros(3), np.zeros(3), np.eye(3))
        x = brute_force_theta(RngStream(24), model, np.ones(3), dims, 20_000)
        assert abs(x.mean()) < 4 * x.std() / np.sqrt(x.size)

    def test_centering_small_p(self):
        dims = ProblemDims(2, 250, 250)
        model = random_model(6, 2)
        l = np.array([1.0, 2.0])
        x = brute_force_theta(RngStream(25), model, l, dims, 10_000)
        eta = l @ model.coefficients
        assert abs(x.mean() - eta / (1 - dims.c)) < 4 * x.std() / np.sqrt(x.size)

    def test_xi_marginal(self):
        dims = ProblemDims(5, 20, 20)
        xi = brute_force_xi(RngStream(26), random_model(7, 5), dims, 10_000)
        assert ks_statistic(xi, lambda v: stats.chi2.cdf(v, dims.xi_dof)) < 0.02

    def test_chunk_sizes_sum(self):
        dims = ProblemDims(50, 100, 100)
        model = PopulationModel(np.zeros(50), np.zeros(50), np.eye(50))
        total = sum(c[0].shape[0] for c in simulate_training(RngStream(0), model, dims, 450))
        assert total == 450

    def test_deterministic(self):
        dims = ProblemDims(3, 8, 8)
        model = random_model(8, 3)
        a = brute_force_d_hat(RngStream(27), model, dims, 2, 100)
        b = brute_force_d_hat(RngStream(27), model, dims, 2, 100)
        np.testing.assert_array_equal(a, b)


@pytest.mark.parametrize("n1,n2", [(3, 5), (10, 10), (25, 475), (7, 1)])
@pytest.mark.parametrize("group", [1, 2])
def test_noncentrality_forms_agree(n1, n2, group):
    a, b = delta_sq_noncentrality(n1, n2, group)
    assert a == pytest.approx(b, rel=1e-14)


def test_mc_sample_validation():
    with pytest.raises(ValueError):
        McSample(np.array([1.0, np.inf]), "theta_rep")
    assert len(McSample(np.zeros(4), "dhat_rep")) == 4


def test_ks_critical_value_constant():
    assert ks_critical_value(20_000, 20_000) == pytest.approx(0.0163, abs=1e-4)
