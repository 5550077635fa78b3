"""Confusion matrices, their Gershgorin geometry, and inversion."""

import logging
import math
from collections.abc import Sequence
from functools import cached_property
from typing import Any, Literal

import numpy as np
from pydantic import BaseModel, ConfigDict, Field, model_validator

from assaybounds import integrate
from assaybounds.densities import ClassModel, as_points
from assaybounds.errors import ConfigError, PropertyViolation, SolverError
from assaybounds.partitions import (
    AnyPartition,
    Bayes,
    CutPoints1D,
    RatioThreshold,
    assign_many,
    check_compatible,
)
from assaybounds.settings import MAX_DENSE_CLASSES, IntegrationSettings, resolve

logger = logging.getLogger(__name__)

# --- Configuration ---
SYMMETRY_TOL = 1e-8
RESIDUAL_TOL = 1e-12

Method = Literal["closed-form", "quadrature", "monte-carlo", "empirical", "given"]


# --- Pydantic Models ---
class ConfusionMatrix(BaseModel):
    """P[j][k] = probability that a class-k sample is assigned to class j.

    Columns sum to one within ``column_tolerance``.
    """

    model_config = ConfigDict(frozen=True)

    entries: list[list[float]]
    column_tolerance: float = Field(1e-12, ge=0)
    method: Method = "given"

    @model_validator(mode="after")
    def _check(self):
        p = np.asarray(self.entries, dtype=float)
        if p.ndim != 2 or p.shape[0] != p.shape[1] or p.shape[0] < 2:
            raise ValueError(f"confusion matrix: expected a square matrix of size >= 2, got shape {p.shape}")
        slack = self.column_tolerance + 1e-12
        if np.any(p < -slack) or np.any(p > 1 + slack) or not np.all(np.isfinite(p)):
            raise ValueError("confusion matrix: entries must lie in [0, 1]")
        drift = np.abs(p.sum(axis=0) - 1.0)
        if np.any(drift > slack):
            k = int(np.argmax(drift))
            raise ValueError(f"confusion matrix: column {k} sums to {p[:, k].sum()!r}, not 1")
        return self

    @classmethod
    def from_array(cls, p: Any, column_tolerance: float = 1e-12, method: Method = "given") -> "ConfusionMatrix":
        p = np.clip(np.asarray(p, dtype=float), 0.0, 1.0)
        return cls(entries=p.tolist(), column_tolerance=column_tolerance, method=method)

    @cached_property
    def P(self) -> np.ndarray:
        return np.asarray(self.entries, dtype=float)

    @property
    def c(self) -> int:
        return len(self.entries)

    def is_symmetric(self, tol: float | None = None) -> bool:
        tol = max(self.column_tolerance, SYMMETRY_TOL) if tol is None else tol
        return bool(np.abs(self.P - self.P.T).max() <= tol)


class GershgorinReport(BaseModel):
    model_config = ConfigDict(frozen=True)

    radii: list[float]
    rho_max: float
    argmax_column: int
    diagonally_dominant: bool
    spectral_radius_i_minus_p: float
    min_abs_eigenvalue: float
    inv_two_norm_sq: float


class PropertyReport(BaseModel):
    """Which of the structural properties of a confusion matrix hold."""

    model_config = ConfigDict(frozen=True)

    left_stochastic: bool
    diagonally_dominant: bool
    disks_exclude_zero: bool
    invertible: bool
    eigenvalues_in_disk: bool
    inverse_norm_bounded: bool
    rho_max: float
    inv_two_norm_sq: float
    inverse_norm_bound: float
    eigenvalues: list[tuple[float, float]]

    @property
    def all_hold(self) -> bool:
        return all((self.left_stochastic, self.diagonally_dominant, self.disks_exclude_zero,
                    self.invertible, self.eigenvalues_in_disk, self.inverse_norm_bounded))


# --- Helper Functions ---
def as_matrix(P: ConfusionMatrix | Any) -> np.ndarray:
    p = P.P if isinstance(P, ConfusionMatrix) else np.asarray(P, dtype=float)
    if p.ndim != 2 or p.shape[0] != p.shape[1]:
        raise ConfigError(f"confusion matrix: expected a square matrix, got shape {p.shape}")
    if p.shape[0] > MAX_DENSE_CLASSES:
        raise ConfigError(f"confusion matrix: {p.shape[0]} classes exceeds the dense limit of {MAX_DENSE_CLASSES}")
    return p


def _combine_ratio_rows(masses: np.ndarray, part: RatioThreshold) -> np.ndarray:
    p = np.zeros((2, 2))
    p[0], p[1] = masses[0], masses[1]
    p[part.boundary_to] += masses[2]
    return p


# --- Operations ---
def confusion_matrix(model: ClassModel, part: AnyPartition,
                     settings: IntegrationSettings | None = None) -> ConfusionMatrix:
    """P[j, k] = integral of p_k over the region assigned to class j."""
    settings = resolve(settings)
    check_compatible(part, model)
    if model.c > MAX_DENSE_CLASSES:
        raise ConfigError(f"classes: {model.c} exceeds the dense limit of {MAX_DENSE_CLASSES}")

    if settings.method == "monte-carlo":
        region = integrate.monte_carlo_masses(model, lambda x: assign_many(part, model, x), model.c, settings)
    elif model.dim == 1 and isinstance(part, CutPoints1D):
        intervals = integrate.LabelIntervals(edges=np.asarray(part.edges), labels=np.asarray(part.class_order))
        region = integrate.interval_masses(model, intervals, model.c, settings)
    elif model.dim == 1:
        region = integrate.scan_masses(model, lambda x: assign_many(part, model, x), model.c, settings)
    elif integrate.is_gaussian2d_pair(model) and (
            isinstance(part, RatioThreshold) or (isinstance(part, Bayes) and part.q[0] > 0)):
        threshold = part if isinstance(part, RatioThreshold) else part.as_threshold()
        raw = integrate.gaussian2d_ratio_masses(model, math.log(threshold.t) if threshold.t > 0 else -math.inf,
                                                threshold.log_tol, settings)
        region = integrate.RegionMasses(_combine_ratio_rows(raw.masses, threshold), raw.method, raw.tolerance)
    else:
        region = integrate.monte_carlo_masses(model, lambda x: assign_many(part, model, x), model.c, settings)

    logger.info("confusion matrix by %s, column tolerance %.3g", region.method, region.tolerance)
    return ConfusionMatrix.from_array(region.masses, column_tolerance=region.tolerance, method=region.method)


def empirical_confusion(labeled: Sequence[Any], part: AnyPartition, model: ClassModel) -> ConfusionMatrix:
    """Confusion matrix estimated from labelled samples, one array per class."""
    if len(labeled) != model.c:
        raise ConfigError(f"labeled: expected {model.c} sample sets, got {len(labeled)}")
    p = np.zeros((model.c, model.c))
    sizes = []
    for k, samples in enumerate(labeled):
        if len(samples) == 0:
            raise ConfigError(f"labeled: class {k} ({model.labels[k]}) has no samples")
        labels = assign_many(part, model, as_points(samples, model.dim))
        p[:, k] = np.bincount(labels, minlength=model.c) / len(labels)
        sizes.append(len(labels))
    tolerance = max(3.0 / (2.0 * math.sqrt(m)) for m in sizes)
    return ConfusionMatrix.from_array(p, column_tolerance=tolerance, method="empirical")


def gershgorin(P: ConfusionMatrix | Any) -> GershgorinReport:
    p = as_matrix(P)
    radii = 1.0 - np.diag(p)
    eig = np.linalg.eigvals(p)
    s_min = np.linalg.svd(p, compute_uv=False).min()
    return GershgorinReport(
        radii=radii.tolist(),
        rho_max=float(radii.max()),
        argmax_column=int(np.argmax(radii)),
        diagonally_dominant=bool(np.all(np.diag(p) > 0.5)),
        spectral_radius_i_minus_p=float(np.abs(1.0 - eig).max()),
        min_abs_eigenvalue=float(np.abs(eig).min()),
        inv_two_norm_sq=float(1.0 / s_min**2) if s_min > 0 else math.inf,
    )


def invert(P: ConfusionMatrix | Any, force: bool = False) -> np.ndarray:
    """P^-1; requires every diagonal entry above 1/2 unless ``force``."""
    p = as_matrix(P)
    if not force:
        diag = np.diag(p)
        if np.any(diag <= 0.5):
            k = int(np.argmin(diag))
            raise PropertyViolation(f"not diagonally dominant: P[{k}][{k}] = {diag[k]!r} <= 0.5")
    try:
        inv = np.linalg.inv(p)
    except np.linalg.LinAlgError:
        raise SolverError("confusion matrix is singular")
    eye = np.eye(len(p))
    residual = np.abs(p @ inv - eye).max()
    if residual > RESIDUAL_TOL:
        inv = inv + inv @ (eye - p @ inv)
        residual = np.abs(p @ inv - eye).max()
        if residual > RESIDUAL_TOL:
            logger.warning("inverse residual %.3g exceeds %.0e after refinement", residual, RESIDUAL_TOL)
    return inv


def check_properties(P: ConfusionMatrix | Any) -> PropertyReport:
    p = as_matrix(P)
    c = len(p)
    tol = P.column_tolerance if isinstance(P, ConfusionMatrix) else 1e-12
    report = gershgorin(p)
    rho = report.rho_max
    eig = np.linalg.eigvals(p)
    invertible = bool(np.all(eig.real > 0))
    bound = c / (1.0 - 2.0 * rho) ** 2 if rho < 0.5 else math.inf
    return PropertyReport(
        left_stochastic=bool(np.all(p >= -tol) and np.abs(p.sum(axis=0) - 1.0).max() <= tol + 1e-12),
        diagonally_dominant=report.diagonally_dominant,
        disks_exclude_zero=bool(np.all(np.diag(p) > 1.0 - np.diag(p))),
        invertible=invertible,
        eigenvalues_in_disk=bool(np.all(np.abs(eig - (1.0 - rho)) <= rho + 1e-9)),
        inverse_norm_bounded=bool(report.inv_two_norm_sq <= bound + 1e-9),
        rho_max=rho,
        inv_two_norm_sq=report.inv_two_norm_sq,
        inverse_norm_bound=bound,
        eigenvalues=[(float(z.real), float(z.imag)) for z in eig],
    )
