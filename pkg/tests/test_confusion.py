"""Tests for confusion matrices, Gershgorin reports and inversion."""

import numpy as np
import pytest
from numpy.testing import assert_allclose
from pydantic import ValidationError
from scipy import stats

from assaybounds.bounds import classification_error
from assaybounds.confusion import (
    ConfusionMatrix,
    check_properties,
    confusion_matrix,
    empirical_confusion,
    gershgorin,
    invert,
)
from assaybounds.densities import ClassModel, Empirical, GridDensity, UniformInterval, sample
from assaybounds.errors import ConfigError, PropertyViolation, UnsupportedOperation
from assaybounds.partitions import Bayes, CutPoints1D, Predicate, RatioThreshold
from assaybounds.settings import IntegrationSettings

PHI1 = stats.norm.cdf(1.0)


class TestConfusionMatrix:
    def test_three_uniforms(self, three_uniforms, uniforms_p):
        matrix = confusion_matrix(three_uniforms, CutPoints1D(cuts=[0.9, 1.7]))
        assert_allclose(matrix.P, uniforms_p, atol=1e-12)
        assert matrix.method == "closed-form"
        assert not matrix.is_symmetric()

    def test_gaussian_pair_at_unit_threshold(self, gaussian_pair):
        matrix = confusion_matrix(gaussian_pair, RatioThreshold(t=1.0))
        assert_allclose(matrix.P, [[PHI1, 1 - PHI1], [1 - PHI1, PHI1]], atol=1e-10)
        assert matrix.is_symmetric()

    def test_columns_sum_to_one(self, weibull_pair):
        matrix = confusion_matrix(weibull_pair, RatioThreshold(t=1.5))
        assert_allclose(matrix.P.sum(axis=0), 1.0, atol=matrix.column_tolerance)

    def test_quadrature_agrees_with_closed_form(self, weibull_pair):
        part = RatioThreshold(t=1.5)
        closed = confusion_matrix(weibull_pair, part)
        quad = confusion_matrix(weibull_pair, part, IntegrationSettings(method="quadrature"))
        assert quad.method == "quadrature"
        assert_allclose(quad.P, closed.P, atol=1e-8)

    def test_monte_carlo_agrees(self, three_uniforms, uniforms_p):
        settings = IntegrationSettings(method="monte-carlo", mc_samples=200_000, seed=5)
        matrix = confusion_matrix(three_uniforms, CutPoints1D(cuts=[0.9, 1.7]), settings)
        assert matrix.method == "monte-carlo"
        assert_allclose(matrix.P, uniforms_p, atol=2 * matrix.column_tolerance)

    def test_monte_carlo_is_reproducible(self, gaussian2d_pair):
        settings = IntegrationSettings(method="monte-carlo", mc_samples=20_000, seed=9)
        first = confusion_matrix(gaussian2d_pair, RatioThreshold(t=1.0), settings)
        second = confusion_matrix(gaussian2d_pair, RatioThreshold(t=1.0), settings.model_copy(update={"threads": 1}))
        assert first.entries == second.entries

    def test_gaussian2d_semi_analytic_matches_monte_carlo(self, gaussian2d_pair):
        exact = confusion_matrix(gaussian2d_pair, RatioThreshold(t=0.9428))
        sampled = confusion_matrix(gaussian2d_pair, RatioThreshold(t=0.9428),
                                   IntegrationSettings(method="monte-carlo", mc_samples=400_000))
        assert exact.method == "quadrature"
        assert_allclose(exact.P, sampled.P, atol=5e-3)

    def test_bayes_in_2d_uses_ratio_form(self, gaussian2d_pair):
        bayes = confusion_matrix(gaussian2d_pair, Bayes(q=[0.5, 0.5]))
        ratio = confusion_matrix(gaussian2d_pair, RatioThreshold(t=1.0))
        assert_allclose(bayes.P, ratio.P, atol=1e-9)

    def test_predicate_falls_back_to_scan(self, gaussian_pair):
        matrix = confusion_matrix(gaussian_pair, Predicate(assign_fn=lambda r: int(r[0] > 0.0)))
        assert_allclose(matrix.P[0, 0], PHI1, atol=1e-9)

    def test_closed_form_refused_for_grid(self):
        axis = np.linspace(0.0, 2.0, 5).tolist()
        model = ClassModel.of(GridDensity(axes=[axis], values=[0.0, 0.5, 1.0, 0.5, 0.0]),
                              UniformInterval(lo=0.0, hi=2.0))
        with pytest.raises(UnsupportedOperation):
            confusion_matrix(model, CutPoints1D(cuts=[1.0]), IntegrationSettings(method="closed-form"))

    def test_rejects_non_stochastic_columns(self):
        with pytest.raises(ValidationError, match="column 1"):
            ConfusionMatrix(entries=[[0.9, 0.3], [0.1, 0.8]])


class TestEmpiricalConfusion:
    def test_column_fractions(self, three_uniforms):
        labeled = [[0.1, 0.5], [0.5, 1.0, 1.8, 1.2], [2.0, 2.4]]
        matrix = empirical_confusion(labeled, CutPoints1D(cuts=[0.9, 1.7]), three_uniforms)
        assert_allclose(matrix.P[:, 1], [0.25, 0.5, 0.25])
        assert matrix.method == "empirical"
        assert matrix.column_tolerance == pytest.approx(3.0 / (2.0 * np.sqrt(2.0)))

    def test_empty_class_is_named(self, three_uniforms):
        with pytest.raises(ConfigError, match="class 2 \\(C\\)"):
            empirical_confusion([[0.1], [1.2], []], CutPoints1D(cuts=[0.9, 1.7]), three_uniforms)

    def test_empirical_densities_sampled(self):
        model = ClassModel.of(Empirical(points=[0.1, 0.2, 0.3]), Empirical(points=[1.1, 1.2]))
        matrix = empirical_confusion([[0.1, 0.2, 0.3], [1.1, 1.2]], CutPoints1D(cuts=[0.5]), model)
        assert_allclose(matrix.P, np.eye(2))

    def test_error_shrinks_as_root_m(self, gaussian_pair):
        part = RatioThreshold(t=1.0)
        exact = confusion_matrix(gaussian_pair, part).P
        sizes = [100, 1_000, 10_000]
        errors = []
        for m in sizes:
            per_seed = [
                np.abs(empirical_confusion([sample(d, 50 * rep + k, m) for k, d in enumerate(gaussian_pair.densities)],
                                           part, gaussian_pair).P - exact).max()
                for rep in range(30)
            ]
            errors.append(np.mean(per_seed))
        slope = np.polyfit(np.log(sizes), np.log(errors), 1)[0]
        assert slope == pytest.approx(-0.5, abs=0.15)


class TestGershgorin:
    def test_radii_and_argmax(self, uniforms_p):
        report = gershgorin(uniforms_p)
        assert_allclose(report.radii, [0.1, 0.2, 0.2])
        assert report.rho_max == pytest.approx(0.2)
        assert report.argmax_column == 1
        assert report.diagonally_dominant

    def test_not_dominant(self):
        assert not gershgorin([[0.5, 0.2], [0.5, 0.8]]).diagonally_dominant

    @pytest.mark.parametrize("c", [2, 3, 5, 8])
    def test_spectral_radius_within_rho(self, make_dominant, c):
        for _ in range(20):
            p = make_dominant(c)
            report = gershgorin(p)
            assert gershgorin(p).spectral_radius_i_minus_p <= 2 * report.rho_max + 1e-12


class TestInvert:
    def test_known_inverse(self):
        assert_allclose(invert([[0.9, 0.2], [0.1, 0.8]]), [[8 / 7, -2 / 7], [-1 / 7, 9 / 7]], atol=1e-12)

    def test_requires_dominance(self):
        with pytest.raises(PropertyViolation, match="not diagonally dominant"):
            invert([[0.5, 0.4], [0.5, 0.6]])

    def test_force_skips_the_check(self):
        p = np.array([[0.5, 0.4], [0.5, 0.6]])
        assert_allclose(invert(p, force=True) @ p, np.eye(2), atol=1e-12)

    @pytest.mark.parametrize("c", [2, 4, 10])
    def test_residual(self, make_dominant, c):
        p = make_dominant(c)
        assert_allclose(p @ invert(p), np.eye(c), atol=1e-12)


class TestProperties:
    @pytest.mark.parametrize("c", [2, 3, 4, 6, 10])
    def test_all_hold_for_dominant_matrices(self, make_dominant, c):
        for _ in range(25):
            report = check_properties(make_dominant(c))
            assert report.all_hold, report

    def test_uniform_example(self, uniforms_p):
        report = check_properties(uniforms_p)
        assert report.all_hold
        assert report.inverse_norm_bound == pytest.approx(3 / 0.6**2)
        assert report.inv_two_norm_sq <= report.inverse_norm_bound

    @pytest.mark.parametrize("c", range(2, 9))
    def test_thousand_random_matrices(self, make_dominant, rng, c):
        for _ in range(1000):
            p = make_dominant(c)
            report = check_properties(p)
            assert report.all_hold, report
            assert gershgorin(p).spectral_radius_i_minus_p <= 2 * report.rho_max + 1e-12
            assert classification_error(p, rng.dirichlet(np.ones(c))) <= report.rho_max + 1e-12

    def test_failure_is_reported(self):
        report = check_properties([[0.4, 0.1], [0.6, 0.9]])
        assert not report.diagonally_dominant
        assert not report.disks_exclude_zero
        assert not report.all_hold
