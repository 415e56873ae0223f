import numpy as np
import pytest
from numpy.testing import assert_allclose
from scipy import stats

from ewps.errors import DomainError
from ewps.schemas.fit import FitOptions
from ewps.schemas.params import EwpsParams, RegressionData, RegressionParams
from ewps.schemas.series import PowerSeriesSpec
from ewps.services.diagnostics import (
    CDF_CLIP,
    _ad_p_value,
    ad_normality,
    fitted_cdf,
    qq_pairs,
    quantile_residuals,
)
from ewps.services.ewps_dist import cdf
from ewps.services.fit import fit_mle, fit_weibull
from ewps.services.simulation import simulate_data

from tests.conftest import make_data, strength_design

GEOMETRIC = PowerSeriesSpec.of("geometric")
POISSON = PowerSeriesSpec.of("poisson")


class TestQQ:
    def test_pairs(self):
        pairs = qq_pairs([0.3, -1.2, 2.0, 0.0])
        assert [p.observed for p in pairs] == [-1.2, 0.0, 0.3, 2.0]
        theoretical = [p.theoretical for p in pairs]
        assert theoretical[0] == pytest.approx(stats.norm.ppf(0.125))
        assert theoretical[0] == pytest.approx(-theoretical[-1])


class TestAndersonDarling:
    def test_statistic_adjustment(self):
        values = np.random.default_rng(0).normal(size=50)
        statistic, _ = ad_normality(values)
        raw = stats.anderson(values, dist="norm").statistic
        assert statistic == pytest.approx(raw * (1 + 0.75 / 50 + 2.25 / 50**2))

    def test_rejects_skewed_sample(self):
        _, p_value = ad_normality(np.random.default_rng(1).exponential(size=200))
        assert p_value < 0.01

    def test_p_value_decreases(self):
        grid = np.linspace(0.05, 3.0, 60)
        values = [_ad_p_value(a) for a in grid]
        assert all(0.0 <= v <= 1.0 for v in values)
        assert all(later <= earlier + 1e-12 for earlier, later in zip(values, values[1:]))

    def test_needs_enough_values(self):
        with pytest.raises(DomainError):
            ad_normality([0.1, 0.2, 0.3])

    def test_constant_values(self):
        with pytest.raises(DomainError):
            ad_normality(np.ones(20))


class TestQuantileResiduals:
    def test_fitted_cdf_uses_each_scale(self, weibull_data):
        fit = fit_weibull(weibull_data)
        lam = np.exp(weibull_data.X @ fit.params.beta_array)
        expected = [
            cdf(EwpsParams(lam=li, alpha=fit.params.alpha, theta=0.0, spec=fit.params.spec), yi)
            for li, yi in zip(lam, weibull_data.y)
        ]
        assert_allclose(fitted_cdf(fit, weibull_data), expected, rtol=1e-12, atol=1e-15)

    def test_residuals_of_true_model(self, weibull_data):
        fit = fit_weibull(weibull_data)
        result = quantile_residuals(fit, weibull_data)
        assert result.n == weibull_data.n
        assert result.n_clipped == 0
        assert all(CDF_CLIP < u < 1 - CDF_CLIP for u in result.cdf_values)
        assert abs(np.mean(result.residuals)) < 0.2
        assert np.std(result.residuals) == pytest.approx(1.0, abs=0.15)
        assert len(result.qq_pairs) == weibull_data.n
        assert 0.0 <= result.ad_p_value <= 1.0

    def test_covariate_count_must_match(self, weibull_data, coconut_data):
        fit = fit_weibull(weibull_data)
        with pytest.raises(DomainError):
            quantile_residuals(fit, coconut_data)

    def test_small_sample_skips_normality_check(self):
        data = RegressionData.intercept_only([0.4, 1.1, 0.8, 2.3, 1.6, 0.9])
        result = quantile_residuals(fit_weibull(data), data)
        assert result.n == 6
        assert np.all(np.isfinite(result.residuals))
        assert result.ad_statistic is None
        assert result.ad_p_value is None


def _rejects(fit, data) -> bool:
    return quantile_residuals(fit, data).ad_p_value < 0.05


@pytest.mark.slow
class TestNormalityCalibration:
    OPTIONS = FitOptions(theta_grid_step=0.05, theta_refine_step=0.01)

    def test_correct_model_rarely_rejected(self):
        truth = RegressionParams(beta=(0.1, -0.011, -0.59), alpha=5.05, theta=0.9455, spec=GEOMETRIC)
        rejections = 0
        for rep in range(50):
            data = simulate_data(truth, strength_design(225, seed=500 + rep), seed=500 + rep)
            rejections += _rejects(fit_mle(data, GEOMETRIC, self.OPTIONS), data)
        assert rejections / 50 <= 0.15

    def test_misspecified_model_shows_in_residuals(self):
        weibull_skew, ewp_skew = [], []
        weibull_rejections = ewp_rejections = 0
        for rep in range(30):
            data = make_data((0.5, -0.2), 1.37, -10.0, POISSON, 500, seed=700 + rep)
            as_weibull = fit_weibull(data)
            as_ewp = fit_mle(data, POISSON, self.OPTIONS)
            weibull_skew.append(abs(stats.skew(quantile_residuals(as_weibull, data).residuals)))
            ewp_skew.append(abs(stats.skew(quantile_residuals(as_ewp, data).residuals)))
            weibull_rejections += _rejects(as_weibull, data)
            ewp_rejections += _rejects(as_ewp, data)
        assert np.median(weibull_skew) > np.median(ewp_skew)
        assert weibull_rejections > ewp_rejections
