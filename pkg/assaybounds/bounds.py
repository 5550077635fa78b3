"""Closed-form error and variance bounds driven by the largest Gershgorin radius."""

import logging
import math
from typing import Any

import numpy as np
from pydantic import BaseModel, ConfigDict, field_validator

from assaybounds.confusion import ConfusionMatrix, as_matrix, gershgorin
from assaybounds.densities import check_simplex
from assaybounds.errors import ConfigError, PropertyViolation

logger = logging.getLogger(__name__)


# --- Pydantic Models ---
class Prevalence(BaseModel):
    """Relative class fractions q; non-negative and summing to one."""

    model_config = ConfigDict(frozen=True)

    q: list[float]

    @field_validator("q")
    @classmethod
    def _check_q(cls, q):
        check_simplex(q, "prevalence")
        return q

    @property
    def c(self) -> int:
        return len(self.q)

    @property
    def array(self) -> np.ndarray:
        return np.asarray(self.q, dtype=float)


class BoundReport(BaseModel):
    model_config = ConfigDict(frozen=True)

    c: int
    s: int
    q: list[float]
    rho_max: float
    error_bound: float
    eps_rho: float
    eps_rho_tight: float
    eps_sigma: float
    eps_sigma_tight: float
    multinomial_term: float
    tight_certified: bool
    integration_tolerance: float


# --- Helper Functions ---
def as_prevalence(q: Prevalence | Any, c: int | None = None) -> Prevalence:
    prevalence = q if isinstance(q, Prevalence) else Prevalence(q=list(np.asarray(q, dtype=float)))
    if c is not None and prevalence.c != c:
        raise ConfigError(f"prevalence: expected {c} entries, got {prevalence.c}")
    return prevalence


def mixing_term(rho: float, c: int, s: int) -> float:
    """(2 c rho - c^2 rho^2 / (c - 1)) / (s (1 - 2 rho)^2), the excess over the multinomial variance."""
    if rho >= 0.5:
        raise PropertyViolation(f"bound diverges: rho_max = {rho!r} >= 0.5")
    return (2.0 * c * rho - c * c * rho * rho / (c - 1.0)) / (s * (1.0 - 2.0 * rho) ** 2)


# --- Operations ---
def classification_error(P: ConfusionMatrix | Any, q: Prevalence | Any) -> float:
    p = as_matrix(P)
    q = as_prevalence(q, len(p)).array
    return float(np.sum(q * (1.0 - np.diag(p))))


def error_bound(P: ConfusionMatrix | Any) -> float:
    """rho_max, which dominates the classification error for every prevalence."""
    report = gershgorin(P)
    if not report.diagonally_dominant:
        k = report.argmax_column
        raise PropertyViolation(f"not diagonally dominant: column {k} has radius {report.radii[k]!r} >= 0.5")
    return report.rho_max


def variance_bounds(P: ConfusionMatrix | Any, q: Prevalence | Any, s: int,
                    assume_symmetric: bool = False) -> BoundReport:
    """Variance bounds for q_hat = P^-1 q_script after s samples.

    Both the general and the symmetric-P variant are reported;
    ``tight_certified`` says whether P is symmetric so that the tighter one
    applies.
    """
    if s < 1:
        raise ConfigError(f"s: must be at least 1, got {s}")
    matrix = P if isinstance(P, ConfusionMatrix) else ConfusionMatrix.from_array(P)
    c = matrix.c
    q = as_prevalence(q, c)
    symmetric = matrix.is_symmetric()
    if assume_symmetric and not symmetric:
        raise ConfigError("assume_symmetric: confusion matrix is not symmetric within tolerance")

    rho = gershgorin(matrix).rho_max
    eps_rho = mixing_term(rho, c, s)
    multinomial = float(np.sum(q.array * (1.0 - q.array)) / s)
    if matrix.column_tolerance > 1e-6:
        logger.warning("bounds use a confusion matrix known only to %.3g (%s)", matrix.column_tolerance, matrix.method)
    return BoundReport(
        c=c,
        s=s,
        q=q.q,
        rho_max=rho,
        error_bound=rho,
        eps_rho=eps_rho,
        eps_rho_tight=eps_rho / c,
        eps_sigma=eps_rho + multinomial,
        eps_sigma_tight=eps_rho / c + multinomial,
        multinomial_term=multinomial,
        tight_certified=symmetric,
        integration_tolerance=matrix.column_tolerance,
    )


def weighted_variance_bound(A: Any, sigma2_identity_bound: float) -> float:
    """||A||_2^2 times the identity-weighted bound."""
    a = np.asarray(A, dtype=float)
    if a.ndim != 2 or a.shape[0] != a.shape[1]:
        raise ConfigError(f"weight matrix: expected a square matrix, got shape {a.shape}")
    scale = max(1.0, float(np.abs(a).max()))
    if np.abs(a - a.T).max() > 1e-12 * scale:
        raise ConfigError("weight matrix: not symmetric")
    eig = np.linalg.eigvalsh(a)
    if eig.min() < -1e-12 * scale:
        raise ConfigError(f"weight matrix: indefinite (smallest eigenvalue {eig.min()!r})")
    return float(np.abs(eig).max() ** 2 * sigma2_identity_bound)


def excess_uncertainty_ratio(report: BoundReport, sigma2: float) -> float:
    """log(eps_rho / (sigma2 - multinomial term)); +inf when the excess is not positive."""
    excess = sigma2 - report.multinomial_term
    if excess <= 0:
        return math.inf
    if report.eps_rho == 0:
        return -math.inf
    return math.log(report.eps_rho / excess)
