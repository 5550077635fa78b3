"""Shared models and matrices for the test suite."""

import json

import numpy as np
import pytest

from assaybounds.densities import ClassModel, Gaussian1D, GaussianND, UniformInterval, Weibull


@pytest.fixture
def rng():
    return np.random.default_rng(42)


@pytest.fixture
def weibull_pair():
    """Shape-2 Weibulls with scales 1 and 2; the ratio is monotone."""
    return ClassModel.of(Weibull(shape=2.0, scale=1.0), Weibull(shape=2.0, scale=2.0), labels=["low", "high"])


@pytest.fixture
def gaussian_pair():
    return ClassModel.of(Gaussian1D(mean=-1.0, sd=1.0), Gaussian1D(mean=1.0, sd=1.0))


@pytest.fixture
def gaussian2d_pair():
    return ClassModel.of(
        GaussianND(mean=[0.0, 0.0], covariance=[[1.0, 0.0], [0.0, 1.0]]),
        GaussianND(mean=[0.0, 2.0], covariance=[[4.0, 0.0], [0.0, 1.0]]),
    )


@pytest.fixture
def three_uniforms():
    return ClassModel.of(
        UniformInterval(lo=0.0, hi=1.0), UniformInterval(lo=0.9, hi=1.9), UniformInterval(lo=1.5, hi=2.5),
        labels=["A", "B", "C"],
    )


@pytest.fixture
def three_gaussians():
    return ClassModel.of(Gaussian1D(mean=-2.0, sd=1.0), Gaussian1D(mean=0.0, sd=1.0), Gaussian1D(mean=2.0, sd=1.0))


@pytest.fixture
def uniforms_p():
    """Confusion matrix of the three uniforms cut at 0.9 and 1.7."""
    return np.array([[0.9, 0.0, 0.0], [0.1, 0.8, 0.2], [0.0, 0.2, 0.8]])


def random_dominant(rng: np.random.Generator, c: int) -> np.ndarray:
    """Column-stochastic matrix with every diagonal entry in (0.55, 0.95)."""
    p = np.zeros((c, c))
    for k in range(c):
        diag = rng.uniform(0.55, 0.95)
        rest = rng.dirichlet(np.ones(c - 1)) * (1.0 - diag)
        p[:, k] = np.insert(rest, k, diag)
    return p


@pytest.fixture
def make_dominant(rng):
    return lambda c: random_dominant(rng, c)


@pytest.fixture
def write_config(tmp_path):
    """Write a config document and return its path as a string."""

    def write(document: dict, name: str = "experiment.json") -> str:
        path = tmp_path / name
        path.write_text(json.dumps(document))
        return str(path)

    return write
