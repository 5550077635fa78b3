"""Tests for equal-diagonal balancing and the one-dimensional cut-point search."""

import numpy as np
import pytest
from numpy.testing import assert_allclose
from scipy import stats

from assaybounds.densities import ClassModel, Gaussian1D
from assaybounds.errors import ConfigError, PropertyViolation, SolverError
from assaybounds.multiclass import (
    balance_prevalence,
    equalize_diagonal_1d,
    optimize_cutpoints_1d,
    verify_balance_optimality,
)
from assaybounds.waterlevel import solve_water_level


@pytest.fixture(scope="module")
def balanced():
    model = ClassModel.of(Gaussian1D(mean=-2.0, sd=1.0), Gaussian1D(mean=0.0, sd=1.0), Gaussian1D(mean=2.0, sd=1.0))
    return model, balance_prevalence(model)


class TestBalancePrevalence:
    def test_three_gaussians(self, balanced):
        _, result = balanced
        assert result.converged
        assert result.residual <= 1e-6
        assert_allclose(result.q_star.q, [0.280, 0.441, 0.280], atol=5e-3)
        assert result.rho_star == pytest.approx(0.220, abs=5e-3)

    def test_symmetric_model_gives_symmetric_prevalence(self, balanced):
        _, result = balanced
        assert result.q_star.q[0] == pytest.approx(result.q_star.q[2], abs=1e-4)

    def test_diagonal_is_equal(self, balanced):
        _, result = balanced
        diag = np.diag(result.P_star.P)
        assert diag.max() - diag.min() <= 1e-6
        assert result.rho_star == pytest.approx(1.0 - diag.min())

    def test_two_class_balance_matches_water_level(self, gaussian_pair):
        result = balance_prevalence(gaussian_pair)
        assert_allclose(result.q_star.q, [0.5, 0.5], atol=1e-6)

    def test_degenerate_class_is_named(self):
        model = ClassModel.of(Gaussian1D(mean=0.0, sd=1.0), Gaussian1D(mean=0.0, sd=1.0), Gaussian1D(mean=3.0, sd=1.0))
        with pytest.raises(PropertyViolation, match="class 1 \\(C2\\)"):
            balance_prevalence(model)

    def test_rejects_zero_start(self, three_gaussians):
        with pytest.raises(ConfigError, match="positive prevalence"):
            balance_prevalence(three_gaussians, q_init=[0.5, 0.5, 0.0])

    @pytest.mark.filterwarnings("error::RuntimeWarning")
    def test_degenerate_uniforms_fail_without_warnings(self, three_uniforms):
        with pytest.raises(PropertyViolation, match="degenerate Bayes partition: class 1 \\(B\\)"):
            balance_prevalence(three_uniforms)


class TestVerifyOptimality:
    def test_random_bayes_partitions_do_not_beat_optimum(self, balanced):
        model, result = balanced
        verdict = verify_balance_optimality(result, model, trials=20, seed=0)
        assert verdict.passed
        assert verdict.failures == []
        assert verdict.worst_margin >= -1e-4

    def test_unconverged_result_refused(self, balanced):
        model, result = balanced
        stalled = result.model_copy(update={"converged": False})
        with pytest.raises(SolverError, match="did not converge"):
            verify_balance_optimality(stalled, model, trials=1)


class TestCutPoints:
    @pytest.mark.parametrize("init", [None, [1.2, 1.6], [0.8, 1.7]])
    def test_three_uniforms_optimum(self, three_uniforms, uniforms_p, init):
        result = optimize_cutpoints_1d(three_uniforms, init_cuts=init)
        assert_allclose(result.cuts, [0.9, 1.7], atol=1e-6)
        assert result.rho_max == pytest.approx(0.2, abs=1e-9)
        assert_allclose(result.P.P, uniforms_p, atol=1e-9)

    def test_equalize_diagonal(self, three_uniforms):
        result = equalize_diagonal_1d(three_uniforms, [0.9, 1.7])
        assert_allclose(result.cuts, [0.8, 1.7], atol=1e-6)
        assert_allclose(np.diag(result.P.P), [0.8, 0.8, 0.8], atol=1e-9)
        assert result.trace == pytest.approx(2.4, abs=1e-9)
        assert result.rho_max == pytest.approx(0.2, abs=1e-9)

    def test_symmetric_gaussians(self, three_gaussians):
        result = optimize_cutpoints_1d(three_gaussians, init_cuts=[-0.5, 0.5])
        assert result.cuts[0] == pytest.approx(-result.cuts[1], abs=2e-4)

    def test_two_classes_match_water_level(self, weibull_pair):
        level = solve_water_level(weibull_pair)
        result = optimize_cutpoints_1d(weibull_pair)
        assert result.rho_max == pytest.approx(level.rho_star, abs=1e-4)
        assert result.cuts == pytest.approx(level.boundary_points, abs=1e-3)

    def test_unit_gaussians_cut_at_zero(self, gaussian_pair):
        result = optimize_cutpoints_1d(gaussian_pair)
        assert result.cuts == pytest.approx([0.0], abs=1e-4)
        assert result.rho_max == pytest.approx(1.0 - stats.norm.cdf(1.0), abs=1e-6)

    def test_init_cuts_validated(self, three_uniforms):
        with pytest.raises(ConfigError, match="strictly increasing"):
            optimize_cutpoints_1d(three_uniforms, init_cuts=[1.7, 0.9])

    def test_needs_one_dimension(self, gaussian2d_pair):
        with pytest.raises(ConfigError, match="one-dimensional"):
            optimize_cutpoints_1d(gaussian2d_pair)
