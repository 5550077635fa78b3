"""Tests for rho_max under additive Gaussian measurement noise."""

import math

import numpy as np
import pytest
from numpy.testing import assert_allclose
from scipy import stats

from assaybounds.densities import ClassModel, NoiseSpec, PiecewiseUniform, SmoothedPiecewiseUniform, UniformInterval
from assaybounds.errors import ConfigError
from assaybounds.noise import (
    convolve_model,
    exploratory_multiclass_sweep,
    fixed_partition_noise,
    rho_star_vs_noise,
)
from assaybounds.partitions import CutPoints1D


@pytest.fixture
def split_model():
    """Class 0 straddles the cut at 1.0; class 1 sits far to the right."""
    return ClassModel.of(
        PiecewiseUniform(segments=[(0.0, 0.6, 1.0), (1.0, 1.4, 1.0)]),
        UniformInterval(lo=10.0, hi=11.0),
    )


class TestFixedPartition:
    def test_noise_free(self, split_model):
        assert fixed_partition_noise(split_model, CutPoints1D(cuts=[1.0]), 0.0) == pytest.approx(0.4)

    def test_noise_can_lower_rho(self, split_model):
        # mass of the (1, 1.4) segment smeared below the cut: sd * phi(0) * height
        expected = 0.4 - 0.05 / math.sqrt(2.0 * math.pi)
        rho = fixed_partition_noise(split_model, CutPoints1D(cuts=[1.0]), 0.0025)
        assert rho == pytest.approx(expected, abs=1e-6)
        assert rho == pytest.approx(0.38005, abs=1e-5)


class TestOptimalUnderNoise:
    def test_gaussians_closed_form(self, gaussian_pair):
        grid = [0.0, 0.5, 1.0, 2.0]
        sweep = rho_star_vs_noise(gaussian_pair, NoiseSpec(), grid)
        assert sweep.monotone
        for point, varsigma2 in zip(sweep.points, grid):
            assert point.rho_star == pytest.approx(1.0 - stats.norm.cdf(1.0 / math.sqrt(1.0 + varsigma2)), abs=1e-7)
        assert sweep.points[2].rho_star == pytest.approx(0.239750, abs=1e-6)

    def test_gaussians_on_a_fine_grid(self, gaussian_pair):
        grid = np.arange(17) * 0.25
        sweep = rho_star_vs_noise(gaussian_pair, NoiseSpec(), grid)
        assert sweep.monotone
        expected = 1.0 - stats.norm.cdf(1.0 / np.sqrt(1.0 + grid))
        assert_allclose([p.rho_star for p in sweep.points], expected, atol=1e-5)

    def test_heavy_noise_approaches_one_half(self, gaussian_pair):
        rho = rho_star_vs_noise(gaussian_pair, NoiseSpec(), [1e4]).points[0].rho_star
        assert rho == pytest.approx(0.49601, abs=1e-5)
        assert rho == pytest.approx(0.5, abs=5e-3)

    def test_weibull_rho_star_grows(self, weibull_pair):
        sweep = rho_star_vs_noise(weibull_pair, NoiseSpec(), [0.0, 0.05, 0.2])
        assert sweep.monotone
        assert sweep.violation_index is None
        assert sweep.points[0].rho_star == pytest.approx(0.275508, abs=1e-6)

    def test_fixed_partition_reported(self, gaussian_pair):
        sweep = rho_star_vs_noise(gaussian_pair, NoiseSpec(), [0.0, 1.0], fixed_partition=CutPoints1D(cuts=[0.0]))
        for point in sweep.points:
            assert point.rho_fixed == pytest.approx(point.rho_star, abs=1e-7)

    def test_warm_start_agrees(self, weibull_pair):
        grid = [0.0, 0.1]
        cold = rho_star_vs_noise(weibull_pair, NoiseSpec(), grid)
        warm = rho_star_vs_noise(weibull_pair, NoiseSpec(), grid, warm_start=True)
        for a, b in zip(cold.points, warm.points):
            assert a.rho_star == pytest.approx(b.rho_star, abs=1e-7)

    def test_grid_must_be_sorted(self, gaussian_pair):
        with pytest.raises(ConfigError, match="sorted"):
            rho_star_vs_noise(gaussian_pair, NoiseSpec(), [1.0, 0.5])

    def test_needs_two_classes(self, three_uniforms):
        with pytest.raises(ConfigError, match="exactly 2 classes"):
            rho_star_vs_noise(three_uniforms, NoiseSpec(), [0.0])


class TestMulticlass:
    def test_convolve_model_keeps_labels(self, three_uniforms):
        noisy = convolve_model(three_uniforms, NoiseSpec.from_variance(0.01))
        assert noisy.labels == three_uniforms.labels
        assert all(isinstance(d, SmoothedPiecewiseUniform) for d in noisy.densities)

    @pytest.mark.parametrize("model", ["gaussian_pair", "three_uniforms"])
    def test_noise_variances_add(self, model, request):
        model = request.getfixturevalue(model)
        twice = convolve_model(convolve_model(model, NoiseSpec.from_variance(0.3)), NoiseSpec.from_variance(0.2))
        once = convolve_model(model, NoiseSpec.from_variance(0.5))
        xs = np.linspace(-4.0, 5.0, 181).reshape(-1, 1)
        for a, b in zip(twice.densities, once.densities):
            assert_allclose(a.pdf(xs), b.pdf(xs), atol=1e-12)

    def test_exploratory_sweep(self, three_gaussians):
        points = exploratory_multiclass_sweep(three_gaussians, NoiseSpec(), [0.0, 1.0])
        assert len(points) == 2
        assert points[0].rho_star == pytest.approx(0.220, abs=5e-3)
        assert points[1].rho_star > points[0].rho_star
