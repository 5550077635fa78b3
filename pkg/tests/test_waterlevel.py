"""Tests for the two-class water-level solver."""

import math

import numpy as np
import pytest
from numpy.testing import assert_allclose
from scipy import optimize, stats

from assaybounds.confusion import confusion_matrix
from assaybounds.densities import ClassModel, Gaussian1D, UniformInterval
from assaybounds.errors import ConfigError
from assaybounds.waterlevel import level_measures, solve_water_level, sweep_levels


def weibull_oracle() -> tuple[float, float, float]:
    """t*, rho* and the cut for shape-2 Weibulls with scales 1 and 2.

    With a = exp(-x^2 / 4) the balance 1 - exp(-x^2) = exp(-x^2 / 4) reads
    a^4 + a - 1 = 0, and t = 4 a^3.
    """
    a = optimize.brentq(lambda a: a**4 + a - 1.0, 0.5, 1.0, xtol=1e-15)
    return 4.0 * a**3, 1.0 - a, math.sqrt(-4.0 * math.log(a))


class TestLevelMeasures:
    def test_gaussians_at_unit_threshold(self, gaussian_pair):
        point = level_measures(gaussian_pair, 1.0)
        assert point.mu1 == pytest.approx(stats.norm.cdf(1.0), abs=1e-9)
        assert point.delta == pytest.approx(0.0, abs=1e-9)
        assert point.mu_b1 == pytest.approx(0.0, abs=1e-12)

    def test_delta_decreases_in_t(self, weibull_pair):
        points = sweep_levels(weibull_pair, np.geomspace(0.1, 10.0, 25))
        deltas = [p.delta for p in points]
        assert all(b <= a + 1e-12 for a, b in zip(deltas, deltas[1:]))
        assert deltas[0] > 0 > deltas[-1]

    def test_sweep_preserves_order(self, weibull_pair):
        grid = [0.5, 1.0, 2.0, 4.0]
        assert [p.t for p in sweep_levels(weibull_pair, grid)] == grid

    def test_sweep_rejects_unsorted_grid(self, weibull_pair):
        with pytest.raises(ConfigError, match="t_grid"):
            sweep_levels(weibull_pair, [2.0, 1.0])

    def test_rejects_negative_threshold(self, weibull_pair):
        with pytest.raises(ConfigError):
            level_measures(weibull_pair, -1.0)

    def test_needs_two_classes(self, three_uniforms):
        with pytest.raises(ConfigError, match="exactly 2 classes"):
            level_measures(three_uniforms, 1.0)


class TestSolveWaterLevel:
    def test_weibull_pair(self, weibull_pair):
        t_star, rho_star, cut = weibull_oracle()
        result = solve_water_level(weibull_pair)
        assert result.t_star == pytest.approx(t_star, rel=1e-6)
        assert result.rho_star == pytest.approx(rho_star, abs=1e-7)
        assert result.rho_star == pytest.approx(0.275508, abs=1e-6)
        assert_allclose(result.boundary_points, [cut], atol=1e-6)
        assert not result.atom_case
        assert result.method == "closed-form"

    def test_equal_diagonal_at_optimum(self, weibull_pair):
        result = solve_water_level(weibull_pair)
        matrix = confusion_matrix(weibull_pair, result.partition)
        assert matrix.P[0, 0] == pytest.approx(matrix.P[1, 1], abs=1e-7)

    def test_symmetric_gaussians(self, gaussian_pair):
        result = solve_water_level(gaussian_pair)
        assert result.t_star == pytest.approx(1.0, abs=1e-6)
        assert result.rho_star == pytest.approx(1.0 - stats.norm.cdf(1.0), abs=1e-8)

    def test_optimum_beats_other_thresholds(self, weibull_pair):
        result = solve_water_level(weibull_pair)
        for point in sweep_levels(weibull_pair, [0.5, 1.0, 1.4, 1.7, 3.0]):
            assert point.rho_max_at_t >= result.rho_star - 1e-9

    @pytest.mark.parametrize("factor", [0.99, 1.01])
    def test_nudging_the_optimum_does_not_help(self, weibull_pair, factor):
        result = solve_water_level(weibull_pair)
        assert level_measures(weibull_pair, result.t_star * factor).rho_max_at_t >= result.rho_star - 1e-12

    def test_optimum_beats_random_thresholds(self, weibull_pair, rng):
        result = solve_water_level(weibull_pair)
        grid = np.sort(np.exp(rng.uniform(math.log(0.05), math.log(20.0), 50)))
        assert min(p.rho_max_at_t for p in sweep_levels(weibull_pair, grid)) >= result.rho_star - 1e-9

    def test_identical_densities(self):
        model = ClassModel.of(Gaussian1D(mean=0.0, sd=1.0), Gaussian1D(mean=0.0, sd=1.0))
        assert solve_water_level(model).rho_star == pytest.approx(0.5, abs=1e-6)

    def test_flat_ratio_set_is_split(self):
        model = ClassModel.of(UniformInterval(lo=0.0, hi=1.0), UniformInterval(lo=0.5, hi=1.5))
        result = solve_water_level(model)
        assert result.atom_case
        assert result.t_star == pytest.approx(1.0)
        assert result.rho_star == pytest.approx(0.25, abs=1e-9)
        assert result.partition.boundary_cut == pytest.approx(0.75, abs=1e-9)
        assert result.mu1_total == pytest.approx(result.mu2_total, abs=1e-9)

    def test_gaussian2d_pair(self, gaussian2d_pair):
        result = solve_water_level(gaussian2d_pair)
        assert result.t_star == pytest.approx(0.9428, abs=2e-3)
        assert result.method == "quadrature"
        assert result.mu1_star == pytest.approx(result.mu2_star, abs=1e-6)

    def test_warm_start_reaches_same_level(self, weibull_pair):
        cold = solve_water_level(weibull_pair)
        warm = solve_water_level(weibull_pair, t_init=1.4)
        assert warm.t_star == pytest.approx(cold.t_star, rel=1e-6)
