"""Optimal and fixed-partition performance under additive Gaussian noise."""

import logging
import math
from typing import Any

from pydantic import BaseModel, ConfigDict

from assaybounds.confusion import confusion_matrix, gershgorin
from assaybounds.densities import ClassModel, LabeledDensity, NoiseSpec, convolve_gaussian
from assaybounds.errors import AssayError, ConfigError, SolverError
from assaybounds.multiclass import balance_prevalence
from assaybounds.parallel import thread_map
from assaybounds.partitions import AnyPartition
from assaybounds.settings import IntegrationSettings, resolve
from assaybounds.waterlevel import solve_water_level

logger = logging.getLogger(__name__)

MONOTONE_TOL = 1e-5


# --- Pydantic Models ---
class NoiseSweepPoint(BaseModel):
    model_config = ConfigDict(frozen=True)

    varsigma2: float
    rho_star: float
    t_star: float | None = None
    rho_fixed: float | None = None
    degenerate: bool = False


class NoiseSweep(BaseModel):
    model_config = ConfigDict(frozen=True)

    points: list[NoiseSweepPoint]
    monotone: bool
    violation_index: int | None = None


# --- Helper Functions ---
def convolve_model(model: ClassModel, noise: NoiseSpec, settings: IntegrationSettings | None = None) -> ClassModel:
    """The class model of the noisy measurement r + eta."""
    return ClassModel(classes=[
        LabeledDensity(label=entry.label, density=convolve_gaussian(entry.density, noise, settings))
        for entry in model.classes
    ])


def _check_grid(varsigma2_grid: Any) -> list[float]:
    grid = [float(v) for v in varsigma2_grid]
    if not grid or any(v < 0 or not math.isfinite(v) for v in grid) or any(b < a for a, b in zip(grid, grid[1:])):
        raise ConfigError(f"varsigma2 grid: must be non-empty, non-negative and sorted, got {grid}")
    return grid


# --- Operations ---
def fixed_partition_noise(model: ClassModel, part: AnyPartition, varsigma2: float,
                          shape: list[list[float]] | None = None,
                          settings: IntegrationSettings | None = None) -> float:
    """rho_max of the original partition applied to noisy measurements."""
    noisy = convolve_model(model, NoiseSpec.from_variance(varsigma2, shape), settings)
    return gershgorin(confusion_matrix(noisy, part, settings)).rho_max


def rho_star_vs_noise(model: ClassModel, noise_shape: NoiseSpec, varsigma2_grid: Any,
                      fixed_partition: AnyPartition | None = None, warm_start: bool = False,
                      settings: IntegrationSettings | None = None) -> NoiseSweep:
    """Water-level optimum of the convolved pair at every noise variance in the grid."""
    settings = resolve(settings)
    grid = _check_grid(varsigma2_grid)
    if model.c != 2:
        raise ConfigError(f"noise sweep needs exactly 2 classes, model has {model.c}")

    def point(varsigma2: float, t_init: float = 1.0) -> NoiseSweepPoint:
        noise = NoiseSpec.from_variance(varsigma2, noise_shape.shape)
        noisy = convolve_model(model, noise, settings)
        try:
            result = solve_water_level(noisy, settings=settings, t_init=t_init)
            rho_fixed = None
            if fixed_partition is not None:
                rho_fixed = gershgorin(confusion_matrix(noisy, fixed_partition, settings)).rho_max
        except AssayError as exc:
            raise SolverError(f"water level failed at varsigma2={varsigma2!r}: {exc.detail}") from exc
        return NoiseSweepPoint(varsigma2=varsigma2, rho_star=result.rho_star, t_star=result.t_star,
                               rho_fixed=rho_fixed, degenerate=result.rho_star >= 0.5)

    if warm_start:
        points, t_init = [], 1.0
        for varsigma2 in grid:
            points.append(point(varsigma2, t_init))
            t_init = points[-1].t_star
    else:
        points = thread_map(point, grid, settings.threads)

    violation = next((i + 1 for i, (a, b) in enumerate(zip(points, points[1:]))
                      if b.rho_star < a.rho_star - MONOTONE_TOL), None)
    if violation is not None:
        logger.warning("rho_star decreases at varsigma2=%g", grid[violation])
    return NoiseSweep(points=points, monotone=violation is None, violation_index=violation)


def exploratory_multiclass_sweep(model: ClassModel, noise_shape: NoiseSpec, varsigma2_grid: Any,
                                 settings: IntegrationSettings | None = None) -> list[NoiseSweepPoint]:
    """Equal-diagonal optimum of the convolved classes per noise level; no monotonicity is asserted."""
    settings = resolve(settings)
    points = []
    for varsigma2 in _check_grid(varsigma2_grid):
        noisy = convolve_model(model, NoiseSpec.from_variance(varsigma2, noise_shape.shape), settings)
        result = balance_prevalence(noisy, settings=settings)
        if not result.converged:
            logger.warning("balance did not converge at varsigma2=%g (residual %.3g)", varsigma2, result.residual)
        points.append(NoiseSweepPoint(varsigma2=varsigma2, rho_star=result.rho_star,
                                      degenerate=result.rho_star >= 0.5))
    return points
