import numpy as np
import pytest

from hdlda.asymptotics import (
    CoefficientLimitParams,
    sigma_gamma_sq,
    standardize_theta,
    score_limit,
    rescaled_score,
    unstandardize_theta,
)
from hdlda.model import ProblemDims
from hdlda.rng import RngStream
from hdlda.stochastic import DHatParams, McSample, ThetaScalarParams, sample_d_hat


class TestSigmaGamma:
    def test_positive_gamma(self):
        assert sigma_gamma_sq(CoefficientLimitParams(0.0, 1.0, 4.0, 0.0, 0.5, 4.0)) == pytest.approx(4.0)

    def test_gamma_zero_adds_sample_term(self):
        assert sigma_gamma_sq(CoefficientLimitParams(1.0, 1.0, 1.0, 0.5, 0.0, 4.0)) == pytest.approx(48.0)

    def test_increasing_in_c(self):
        cs = np.linspace(0, 0.99, 50)
        v = [sigma_gamma_sq(CoefficientLimitParams(0.5, 2.0, 3.0, c, 0.0, 4.0)) for c in cs]
        assert np.all(np.diff(v) > 0)

    def test_cauchy_schwarz_guard(self):
        with pytest.raises(ValueError):
            CoefficientLimitParams(3.0, 1.0, 1.0, 0.1, 0.0, 4.0)

    @pytest.mark.parametrize("c,gamma", [(1.0, 0.0), (-0.1, 0.0), (0.2, -1.0)])
    def test_domain(self, c, gamma):
        with pytest.raises(ValueError):
            CoefficientLimitParams(0.0, 1.0, 1.0, c, gamma, 4.0)

    def test_from_theta(self):
        dims = ProblemDims(10, 20, 30)
        t = CoefficientLimitParams.from_theta(ThetaScalarParams(1.0, 2.0, 0.5, dims), 0.0)
        assert t.c == dims.c and t.lambda_n == pytest.approx(dims.lam * dims.n)
        assert t.delta_sq == pytest.approx(0.5 + 0.5)


class TestStandardize:
    def _params(self):
        return CoefficientLimitParams(1.0, 2.0, 3.0, 0.25, 0.0, 4.0)

    def test_centre_maps_to_zero(self):
        params = self._params()
        draws = McSample(np.full(5, params.eta / (1 - params.c)), "theta_rep")
        np.testing.assert_allclose(standardize_theta(draws, params, 100).draws, 0.0, atol=1e-15)

    def test_round_trip(self):
        params = self._params()
        x = np.random.default_rng(0).standard_normal(20)
        draws = McSample(x, "theta_oracle")
        back = unstandardize_theta(standardize_theta(draws, params, 80), params, 80)
        np.testing.assert_allclose(back.draws, x, atol=1e-12)
        assert "standardized" not in back.meta

    def test_rejects_other_kinds(self):
        with pytest.raises(ValueError):
            standardize_theta(McSample(np.zeros(3), "dhat_rep"), self._params(), 10)


class TestScoreLimit:
    def test_balanced_mean_zero(self):
        for gamma in (0.0, 0.5, 1.0, 2.0):
            for group in (1, 2):
                assert score_limit(gamma, 0.3, 2.0, 2.0, 1.0, group).mean == 0.0

    def test_worked_value(self):
        lim = score_limit(0.5, 0.5, 2.0, 2.0, 1.0, 1)
        assert lim.variance == pytest.approx(8.0) and lim.mean == 0.0

    def test_gamma_one_uses_both_terms(self):
        c, d2 = 0.4, 1.7
        lim = score_limit(1.0, c, 2.0, 2.0, d2, 2)
        assert lim.variance == pytest.approx(c / (2 * (1 - c) ** 3) * d2**2 + d2 / (1 - c) ** 3)

    def test_unbalanced_means_opposite(self):
        a = score_limit(0.0, 0.3, 4.0, 4.0 / 3.0, 1.0, 1)
        b = score_limit(0.0, 0.3, 4.0, 4.0 / 3.0, 1.0, 2)
        assert a.mean > 0 and b.mean > 0  # (b1-2) > 0 and -(b2-2) > 0

    def test_validation(self):
        with pytest.raises(ValueError):
            score_limit(0.5, 0.3, 3.0, 3.0, 1.0, 1)
        with pytest.raises(ValueError):
            score_limit(0.5, 0.3, 2.0, 2.0, 0.0, 1)
        with pytest.raises(ValueError):
            score_limit(0.5, 0.3, 2.0, 2.0, 1.0, 3)

    def _moments(self, p, draws=200_000):
        gamma, d2 = 0.5, 1.0
        dims = ProblemDims(p, p, p)
        delta = float(np.sqrt(d2 * p**gamma))
        d = sample_d_hat(RngStream(p), DHatParams(delta, dims, 1), draws)
        z = rescaled_score(d, delta, dims, gamma, 1)
        lim = score_limit(gamma, dims.c, 2.0, 2.0, d2, 1)
        return z.mean(), z.var(), lim, draws

    def test_finite_sample_convergence(self):
        # Relative variance gap shrinks like p^(-1/2); at p = 8000 it is
        # about 3%, at p = 500 about 12%.
        m_big, v_big, lim, n = self._moments(8000)
        m_small, v_small, _, _ = self._moments(500)
        assert abs(m_big - lim.mean) < 4 * np.sqrt(v_big / n)
        assert abs(v_big / lim.variance - 1) < 0.05
        assert abs(v_big / lim.variance - 1) < abs(v_small / lim.variance - 1)
