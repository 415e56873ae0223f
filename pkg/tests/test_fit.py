import math

import numpy as np
import pytest
from numpy.testing import assert_allclose
from scipy import stats

from ewps.errors import CovarianceError, DomainError, NestingError
from ewps.schemas.fit import FitOptions, FitResult
from ewps.schemas.params import EwpsParams, RegressionData, RegressionParams
from ewps.schemas.series import PowerSeriesSpec
from ewps.services import fit as fit_module
from ewps.services.ewps_dist import cdf, quantile, quantile_factor
from ewps.services.fit import (
    aic,
    aic_from,
    check_design,
    coefficient_table,
    compare_models,
    fit_mle,
    fit_weibull,
    fitted_distribution,
    lr_test,
    profile_theta,
    quantile_factor_derivative,
    quantile_fit,
    quantile_intercept,
    search_bounds,
    summarize,
    wald_intervals,
    wald_test,
)
from ewps.services.likelihood import observed_info, score

from tests.conftest import make_data

GEOMETRIC = PowerSeriesSpec.of("geometric")
POISSON = PowerSeriesSpec.of("poisson")


@pytest.fixture(scope="module")
def intercept_data():
    y = 3.0 * np.random.default_rng(4).weibull(2.0, 400)
    return RegressionData.intercept_only(y)


class TestOptions:
    def test_refine_must_be_finer(self):
        with pytest.raises(ValueError):
            FitOptions(theta_grid_step=0.01, theta_refine_step=0.01)

    def test_from_settings_overrides(self):
        options = FitOptions.from_settings(profile_drop=5.0, theta_grid_step=None)
        assert options.profile_drop == 5.0
        assert options.theta_grid_step == 0.01


class TestDesign:
    def test_too_few_observations(self):
        data = RegressionData(y=[1.0, 2.0], X=np.ones((2, 2)) + np.eye(2))
        with pytest.raises(DomainError):
            check_design(data)

    def test_rank_deficient(self):
        x = np.linspace(0.0, 1.0, 10)
        data = RegressionData(y=np.ones(10), X=np.column_stack([x, 2 * x]))
        with pytest.raises(DomainError):
            check_design(data)


class TestWeibullFit:
    def test_matches_scipy(self, intercept_data):
        fit = fit_weibull(intercept_data)
        shape, _, scale = stats.weibull_min.fit(intercept_data.y, floc=0)
        assert fit.converged
        assert fit.params.alpha == pytest.approx(shape, rel=1e-3)
        assert math.exp(fit.params.beta[0]) == pytest.approx(scale, rel=1e-3)

    def test_recovers_coefficients(self, weibull_data):
        fit = fit_weibull(weibull_data)
        assert fit.theta_fixed
        assert fit.label == "Weibull"
        assert fit.names == ["intercept", "x", "alpha"]
        assert_allclose(fit.params.beta, [1.0, 0.5], atol=0.1)
        assert fit.params.alpha == pytest.approx(2.0, abs=0.3)

    def test_score_vanishes(self, weibull_data):
        fit = fit_weibull(weibull_data)
        assert_allclose(score(fit.params, weibull_data)[:3], 0.0, atol=1e-6)

    def test_aic(self, weibull_data):
        fit = fit_weibull(weibull_data)
        assert fit.n_params == 3
        assert fit.aic == pytest.approx(6.0 - 2.0 * fit.loglik)
        assert aic(fit) == pytest.approx(fit.aic)


@pytest.mark.slow
class TestMle:
    @pytest.fixture(scope="class")
    def fitted(self, geometric_data_class):
        options = FitOptions(theta_grid_step=0.05, theta_refine_step=0.01)
        return fit_mle(geometric_data_class, GEOMETRIC, options), fit_weibull(geometric_data_class, options)

    @pytest.fixture(scope="class")
    def geometric_data_class(self):
        return make_data((0.5, -0.4), 3.0, 0.8, GEOMETRIC, 400, seed=5)

    def test_improves_on_weibull(self, fitted):
        fit, null = fitted
        assert fit.loglik >= null.loglik - 1e-8
        statistic, p_value = lr_test(fit, null.loglik)
        assert statistic >= 0.0
        assert 0.0 <= p_value <= 1.0

    def test_at_least_profile_maximum(self, fitted):
        fit, _ = fitted
        best = max(p.loglik for p in fit.profile if p.loglik is not None)
        assert fit.loglik >= best - 1e-8
        assert any(p.theta == 0.0 for p in fit.profile)

    def test_interior_maximum(self, fitted, geometric_data_class):
        fit, _ = fitted
        assert fit.converged
        assert not fit.boundary_flag
        assert_allclose(score(fit.params, geometric_data_class), 0.0, atol=1e-6)
        assert fit.names == ["intercept", "x", "alpha", "theta"]
        assert len(fit.standard_errors) == 4
        assert abs(fit.params.theta - 0.8) <= 4 * fit.standard_errors[-1]

    def test_information_positive_definite(self, fitted, geometric_data_class):
        fit, _ = fitted
        np.linalg.cholesky(observed_info(fit.params, geometric_data_class))

    def test_profile_at_estimate(self, fitted, geometric_data_class):
        fit, _ = fitted
        options = FitOptions(theta_grid_step=0.05, theta_refine_step=0.01)
        point = profile_theta(geometric_data_class, GEOMETRIC, [fit.params.theta], options, threads=1)[0]
        assert point.loglik == pytest.approx(fit.loglik, abs=1e-6)

    def test_coconut_fixture(self, coconut_data, fast_options):
        fit = fit_mle(coconut_data, GEOMETRIC, fast_options)
        null = fit_weibull(coconut_data, fast_options)
        assert fit.loglik > null.loglik
        assert fit.params.theta > 0.0
        assert fit.aic == pytest.approx(2.0 * 5 - 2.0 * fit.loglik)

    def test_compare_models(self, weibull_data, fast_options):
        rows = compare_models(weibull_data, [GEOMETRIC, POISSON], fast_options)
        assert [row.label for row in rows] == ["Weibull", "EWG", "EWP"]
        assert rows[0].lr_statistic is None
        assert all(row.lr_statistic >= 0 for row in rows[1:])


class TestSearchBounds:
    def test_finite_domain(self):
        lo, hi = search_bounds(GEOMETRIC, FitOptions())
        assert lo == pytest.approx(-1.0 + 2e-4)
        assert hi == pytest.approx(1.0 - 2e-4)

    def test_infinite_domain(self):
        assert search_bounds(PowerSeriesSpec.of("poisson"), FitOptions(theta_search_limit=50.0)) == (-50.0, 50.0)

    def test_half_infinite_domain(self):
        lo, hi = search_bounds(PowerSeriesSpec.of("geometric", extended=True), FitOptions())
        assert lo == -100.0
        assert hi == pytest.approx(1.0 - 1e-4)


class TestProfile:
    def test_zero_matches_weibull(self, weibull_data, fast_options):
        points = profile_theta(weibull_data, GEOMETRIC, [-0.3, 0.0, 0.3], fast_options, threads=1)
        assert [p.theta for p in points] == [-0.3, 0.0, 0.3]
        assert points[1].loglik == pytest.approx(fit_weibull(weibull_data, fast_options).loglik, abs=1e-8)

    def test_threads_agree(self, weibull_data, fast_options):
        grid = list(np.linspace(-0.6, 0.6, 7))
        one = profile_theta(weibull_data, GEOMETRIC, grid, fast_options, threads=1)
        many = profile_theta(weibull_data, GEOMETRIC, grid, fast_options, threads=3)
        assert_allclose([p.loglik for p in one], [p.loglik for p in many], rtol=1e-9)

    def test_outside_domain(self, weibull_data):
        with pytest.raises(DomainError):
            profile_theta(weibull_data, GEOMETRIC, [0.5, 1.0])

    def test_empty_grid(self, weibull_data):
        assert profile_theta(weibull_data, GEOMETRIC, []) == []


class TestTests:
    def test_lr(self):
        statistic, p_value = lr_test(-10.0, -12.0)
        assert statistic == pytest.approx(4.0)
        assert p_value == pytest.approx(stats.chi2.sf(4.0, 1))

    def test_lr_clamps_rounding(self):
        assert lr_test(-10.0, -10.0 + 1e-10)[0] == 0.0

    def test_lr_not_nested(self):
        with pytest.raises(NestingError):
            lr_test(-12.0, -10.0)

    def test_aic_from(self):
        assert aic_from(-10.0, 3) == pytest.approx(26.0)

    def test_wald(self, weibull_data):
        fit = fit_weibull(weibull_data)
        intervals = wald_intervals(fit, 0.9)
        for (name, low, high), value in zip(intervals, fit.estimates):
            assert low < value < high
        with pytest.raises(DomainError):
            wald_test(fit)
        statistic, _ = wald_test(fit, index=0)
        assert statistic == pytest.approx((fit.estimates[0] / fit.standard_errors[0]) ** 2)

    def test_coefficient_table_and_summary(self, weibull_data):
        fit = fit_weibull(weibull_data)
        rows = coefficient_table(fit)
        assert [row.name for row in rows] == fit.names
        assert rows[0].z == pytest.approx(rows[0].value / rows[0].se)
        summary = summarize(fit)
        assert summary.label == "Weibull"
        assert summary.lr_statistic is None

    def test_missing_covariance(self, weibull_data):
        fit = fit_weibull(weibull_data).model_copy(update={"covariance": None})
        with pytest.raises(CovarianceError):
            wald_intervals(fit)


class TestQuantiles:
    def test_weibull_delta_method(self, intercept_data):
        fit = fit_weibull(intercept_data)
        xi = 0.9
        estimate = quantile_fit(fit, xi, [1.0])
        lam, alpha = math.exp(fit.params.beta[0]), fit.params.alpha
        b = -math.log(1.0 - xi)
        assert estimate.point == pytest.approx(lam * b ** (1.0 / alpha))
        gradient = np.array([lam * b ** (1 / alpha), -lam * b ** (1 / alpha) * math.log(b) / alpha**2])
        assert estimate.variance == pytest.approx(gradient @ fit.covariance_matrix @ gradient, rel=1e-10)
        assert estimate.ci_low < estimate.point < estimate.ci_high

    def test_point_matches_fitted_distribution(self, weibull_data):
        fit = fit_weibull(weibull_data)
        row = [1.0, 0.4]
        assert quantile_fit(fit, 0.5, row).point == pytest.approx(quantile(fitted_distribution(fit, row), 0.5))

    def test_intercept_form(self, intercept_data):
        fit = fit_weibull(intercept_data)
        assert math.exp(quantile_intercept(fit, 0.3)) == pytest.approx(quantile_fit(fit, 0.3, [1.0]).point)

    def test_factor_derivative(self):
        h = 1e-4
        numeric = (quantile_factor(GEOMETRIC, 0.5 + h, 0.7) - quantile_factor(GEOMETRIC, 0.5 - h, 0.7)) / (2 * h)
        assert quantile_factor_derivative(GEOMETRIC, 0.5, 0.7) == pytest.approx(numeric, rel=1e-6)
        # one-sided next to the upper endpoint
        assert math.isfinite(quantile_factor_derivative(GEOMETRIC, 1.0 - 5e-7, 0.7))

    def test_rejects_bad_input(self, intercept_data):
        fit = fit_weibull(intercept_data)
        with pytest.raises(DomainError):
            quantile_fit(fit, 1.0, [1.0])
        with pytest.raises(DomainError):
            quantile_fit(fit, 0.5, [1.0, 2.0])

    def test_fitted_distribution(self, intercept_data):
        fit = fit_weibull(intercept_data)
        dist = fitted_distribution(fit, [1.0])
        assert isinstance(dist, EwpsParams)
        assert dist.lam == pytest.approx(math.exp(fit.params.beta[0]))

    def test_monotone_in_xi(self, weibull_data):
        fit = fit_weibull(weibull_data)
        points = [quantile_fit(fit, xi, [1.0, 0.5]).point for xi in (0.05, 0.25, 0.5, 0.75, 0.95)]
        assert all(low < high for low, high in zip(points, points[1:]))


def _hand_fit(theta: float, spec: PowerSeriesSpec) -> FitResult:
    params = RegressionParams(beta=(0.2, 0.3), alpha=1.5, theta=theta, spec=spec)
    cov = np.diag([0.01, 0.02, 0.03, 0.004])
    cov[0, 1] = cov[1, 0] = -0.005
    cov[2, 3] = cov[3, 2] = 0.002
    return FitResult(
        params=params,
        loglik=-40.0,
        aic=88.0,
        names=["intercept", "x", "alpha", "theta"],
        n=50,
        covariance=cov.tolist(),
        standard_errors=np.sqrt(np.diag(cov)).tolist(),
    )


class TestQuantilesWithTheta:
    def test_delta_method_includes_theta(self):
        fit = _hand_fit(0.5, GEOMETRIC)
        x = np.array([1.0, 0.7])
        xi = 0.8
        lam = math.exp(x @ fit.params.beta_array)
        alpha = fit.params.alpha
        b = quantile_factor(GEOMETRIC, 0.5, xi)
        b_prime = quantile_factor_derivative(GEOMETRIC, 0.5, xi)
        gradient = np.concatenate(
            [
                lam * b ** (1 / alpha) * x,
                [-lam * b ** (1 / alpha) * math.log(b) / alpha**2],
                [lam * b_prime * b ** (1 / alpha - 1) / alpha],
            ]
        )
        estimate = quantile_fit(fit, xi, x)
        assert estimate.point == pytest.approx(lam * b ** (1 / alpha), rel=1e-12)
        assert estimate.variance == pytest.approx(gradient @ fit.covariance_matrix @ gradient, rel=1e-10)

    def test_point_inverts_fitted_cdf(self):
        fit = _hand_fit(-0.6, GEOMETRIC)
        row = [1.0, -0.4]
        dist = fitted_distribution(fit, row)
        for xi in (0.1, 0.5, 0.95):
            assert float(cdf(dist, quantile_fit(fit, xi, row).point)) == pytest.approx(xi, abs=1e-8)

    def test_monotone_in_xi(self):
        fit = _hand_fit(0.5, GEOMETRIC)
        points = [quantile_fit(fit, xi, [1.0, 0.2]).point for xi in np.linspace(0.02, 0.98, 25)]
        assert all(low < high for low, high in zip(points, points[1:]))

    def test_band_widens_with_level(self):
        fit = _hand_fit(0.5, GEOMETRIC)
        narrow = quantile_fit(fit, 0.5, [1.0, 0.2], level=0.8)
        wide = quantile_fit(fit, 0.5, [1.0, 0.2], level=0.99)
        assert wide.ci_low < narrow.ci_low < narrow.point < narrow.ci_high < wide.ci_high


class TestWaldArithmetic:
    def test_interval(self):
        params = RegressionParams(beta=(1.0,), alpha=2.0, theta=0.0, spec=POISSON)
        fit = FitResult(
            params=params,
            loglik=-5.0,
            aic=14.0,
            names=["intercept", "alpha"],
            n=10,
            covariance=[[0.01, 0.0], [0.0, 0.04]],
            theta_fixed=True,
        )
        name, low, high = wald_intervals(fit, 0.95)[0]
        assert name == "intercept"
        assert low == pytest.approx(0.804, abs=5e-4)
        assert high == pytest.approx(1.196, abs=5e-4)


@pytest.mark.slow
class TestRecovery:
    def test_poisson_negative_theta(self):
        data = make_data((0.5, -0.2), 1.37, -10.0, POISSON, 2000, seed=13)
        fit = fit_mle(data, POISSON, FitOptions(theta_grid_step=0.05, theta_refine_step=0.005))
        assert fit.converged
        for estimate, value, se in zip(fit.estimates, (0.5, -0.2, 1.37, -10.0), fit.standard_errors):
            assert abs(estimate - value) <= 4 * se

    def test_weibull_data_gives_theta_near_zero(self):
        data = make_data((0.5, -0.2), 2.0, 0.0, POISSON, 2000, seed=17)
        fit = fit_mle(data, GEOMETRIC, FitOptions(theta_grid_step=0.05, theta_refine_step=0.005))
        assert fit.standard_errors is not None
        assert abs(fit.params.theta) <= 4 * fit.standard_errors[-1]
        for estimate, value, se in zip(fit.estimates[:3], (0.5, -0.2, 2.0), fit.standard_errors):
            assert abs(estimate - value) <= 4 * se


class TestCoarseScan:
    @staticmethod
    def _bimodal(theta: float) -> float:
        # local mode at 0.1, higher mode at 0.78 beyond a deep trough
        return max(-200.0 * (theta - 0.1) ** 2, 5.0 - 200.0 * (theta - 0.78) ** 2)

    def test_finds_distant_mode(self, monkeypatch, weibull_data):
        def fake_point(data, spec, theta, warm, options):
            params = RegressionParams(beta=warm.beta, alpha=warm.alpha, theta=theta, spec=spec)
            return fit_module._Inner(params, self._bimodal(theta), True, 0)

        monkeypatch.setattr(fit_module, "_profile_point", fake_point)
        options = FitOptions()
        origin = fit_module._Inner(RegressionParams(beta=(0.0, 0.0), alpha=1.0, theta=0.0, spec=GEOMETRIC), 0.0, True, 0)
        _, hi = search_bounds(GEOMETRIC, options)
        walked, hit = fit_module._walk(weibull_data, GEOMETRIC, origin, +1, hi, options)
        assert not hit
        assert max(theta for theta, _ in walked) < 0.4

        points, hit = fit_module._extend(weibull_data, GEOMETRIC, origin, walked, hit, +1, hi, options)
        assert hit
        theta_best, best = max(points, key=lambda item: item[1].loglik)
        assert theta_best == pytest.approx(0.78, abs=1e-9)
        assert best.loglik == pytest.approx(5.0, abs=1e-12)

    def test_reached_bound_is_left_alone(self, weibull_data):
        origin = fit_module._Inner(RegressionParams(beta=(0.0, 0.0), alpha=1.0, theta=0.0, spec=GEOMETRIC), 0.0, True, 0)
        walked = [(0.5, origin)]
        assert fit_module._extend(weibull_data, GEOMETRIC, origin, walked, True, +1, 0.9, FitOptions()) == (walked, True)
