"""Prevalence estimation q_hat = P^-1 q_script and its Monte Carlo validation."""

import logging
import math
from typing import Any

import numpy as np
from pydantic import BaseModel, ConfigDict

from assaybounds.bounds import (
    BoundReport, Prevalence, as_prevalence, excess_uncertainty_ratio, variance_bounds, weighted_variance_bound,
)
from assaybounds.confusion import ConfusionMatrix, as_matrix, invert
from assaybounds.densities import ClassModel, check_simplex
from assaybounds.errors import ConfigError
from assaybounds.parallel import stream, thread_map
from assaybounds.partitions import AnyPartition, assign_many, check_compatible
from assaybounds.settings import IntegrationSettings, resolve

logger = logging.getLogger(__name__)

# --- Configuration ---
CHUNK = 256
LOW_POWER_REPLICATES = 100
STANDARD_ERRORS = 3.0


# --- Pydantic Models ---
class SimulationResult(BaseModel):
    model_config = ConfigDict(frozen=True)

    q_true: Prevalence
    s: int
    R: int
    seed: int
    mean_q_hat: list[float]
    std_q_hat: list[float]
    empirical_sigma2_identity: float
    sigma2_standard_error: float
    exact_sigma2_identity: float
    empirical_sigma2_weighted: float | None = None
    weighted_standard_error: float | None = None
    exact_sigma2_weighted: float | None = None
    weight_matrix: list[list[float]] | None = None
    per_replicate_qs_hat: list[list[float]] | None = None
    projected: bool = False


class BoundVerdict(BaseModel):
    """Comparison of a simulation against the variance bounds."""

    model_config = ConfigDict(frozen=True)

    empirical_sigma2: float
    standard_error: float
    exact_sigma2: float
    eps_sigma: float
    eps_sigma_tight: float
    margin: float
    margin_tight: float
    exact_margin: float
    exact_margin_tight: float
    multinomial_term: float
    excess_uncertainty: float
    excess_uncertainty_ratio: float
    eps_rho: float
    excess_within_bound: bool
    passed: bool
    passed_tight: bool | None
    tight_certified: bool
    low_power: bool
    weighted_bound: float | None = None
    passed_weighted: bool | None = None


# --- Operations ---
def project_to_simplex(v: Any) -> np.ndarray:
    """Euclidean projection onto the probability simplex."""
    v = np.asarray(v, dtype=float)
    u = np.sort(v)[::-1]
    cumulative = np.cumsum(u) - 1.0
    ranks = np.arange(1, len(v) + 1)
    k = ranks[u - cumulative / ranks > 0][-1]
    return np.maximum(v - cumulative[k - 1] / k, 0.0)


def estimate_prevalence(P_inv: Any, fractions: Any, project: bool = False) -> np.ndarray:
    """q_hat = P^-1 fractions; entries may leave [0, 1] unless ``project``."""
    inv = np.asarray(P_inv, dtype=float)
    f = check_simplex(fractions, "fractions", size=inv.shape[1], tol=1e-9)
    q_hat = inv @ f
    return project_to_simplex(q_hat) if project else q_hat


def exact_variance(P: ConfusionMatrix | Any, q: Prevalence | Any, s: int, A: Any = None) -> float:
    """E[(q_hat - q)^T A (q_hat - q)] when the domain counts are multinomial(s, P q)."""
    p = as_matrix(P)
    q = as_prevalence(q, len(p)).array
    if s < 1:
        raise ConfigError(f"s: must be at least 1, got {s}")
    pq = p @ q
    cov = (np.diag(pq) - np.outer(pq, pq)) / s
    inv = np.linalg.inv(p)
    spread = inv @ cov @ inv.T
    weight = np.eye(len(p)) if A is None else np.asarray(A, dtype=float)
    return float(np.trace(weight @ spread))


def simulate(model: ClassModel, part: AnyPartition, P: ConfusionMatrix | Any, q: Prevalence | Any, s: int,
             R: int, seed: int, A: Any = None, settings: IntegrationSettings | None = None,
             project: bool = False, store_replicates: bool = False) -> SimulationResult:
    """Draw R data sets of s samples and estimate the prevalence of each.

    Replicate i uses its own stream keyed by (seed, i); chunks of replicates
    run on worker threads and are reduced in replicate order.
    """
    settings = resolve(settings)
    check_compatible(part, model)
    q = as_prevalence(q, model.c)
    if s < 1:
        raise ConfigError(f"s: must be at least 1, got {s}")
    if R < 2:
        raise ConfigError(f"R: need at least 2 replicates, got {R}")
    inv = invert(P)
    c = model.c
    weights = q.array

    def chunk(start: int) -> np.ndarray:
        stop = min(start + CHUNK, R)
        batches: list[list[np.ndarray]] = [[] for _ in range(c)]
        owners: list[list[np.ndarray]] = [[] for _ in range(c)]
        for i in range(start, stop):
            rng = stream(seed, i)
            counts = rng.multinomial(s, weights)
            for k in np.flatnonzero(counts):
                batches[k].append(model.densities[k].draw(rng, int(counts[k])))
                owners[k].append(np.full(int(counts[k]), i - start))
        tallies = np.zeros((stop - start) * c)
        for k in range(c):
            if batches[k]:
                labels = assign_many(part, model, np.vstack(batches[k]))
                tallies += np.bincount(np.concatenate(owners[k]) * c + labels, minlength=tallies.size)
        fractions = tallies.reshape(stop - start, c) / s
        q_hat = fractions @ inv.T
        if project:
            q_hat = np.apply_along_axis(project_to_simplex, 1, q_hat)
        return q_hat

    q_hats = np.vstack(thread_map(chunk, range(0, R, CHUNK), settings.threads))
    errors = q_hats - weights
    squared = np.sum(errors**2, axis=1)

    extra: dict[str, Any] = {}
    if A is not None:
        a = np.asarray(A, dtype=float)
        if a.shape != (c, c):
            raise ConfigError(f"weight matrix: expected {c}x{c}, got {a.shape}")
        weighted = np.einsum("ri,ij,rj->r", errors, a, errors)
        extra = {
            "empirical_sigma2_weighted": float(weighted.mean()),
            "weighted_standard_error": float(weighted.std(ddof=1) / math.sqrt(R)),
            "exact_sigma2_weighted": exact_variance(P, q, s, a),
            "weight_matrix": a.tolist(),
        }
    logger.info("simulated %d replicates of %d samples, q=%s", R, s, q.q)
    return SimulationResult(
        q_true=q, s=s, R=R, seed=seed,
        mean_q_hat=q_hats.mean(axis=0).tolist(),
        std_q_hat=q_hats.std(axis=0, ddof=1).tolist(),
        empirical_sigma2_identity=float(squared.mean()),
        sigma2_standard_error=float(squared.std(ddof=1) / math.sqrt(R)),
        exact_sigma2_identity=exact_variance(P, q, s),
        per_replicate_qs_hat=q_hats.tolist() if store_replicates else None,
        projected=project,
        **extra,
    )


def bound_check(sim: SimulationResult, report: BoundReport) -> BoundVerdict:
    """Verdict of the simulation against the bounds at 3 Monte Carlo standard errors."""
    if report.c != sim.q_true.c or report.s != sim.s or not np.allclose(report.q, sim.q_true.q, rtol=0, atol=1e-12):
        raise ConfigError(f"mismatched simulation (c={sim.q_true.c}, s={sim.s}) and bound report (c={report.c}, s={report.s})")
    if sim.projected:
        logger.warning("projected estimates are biased; the bound check is not meaningful")
    sigma2, se = sim.empirical_sigma2_identity, sim.sigma2_standard_error
    excess = sigma2 - report.multinomial_term
    verdict = {
        "empirical_sigma2": sigma2,
        "standard_error": se,
        "exact_sigma2": sim.exact_sigma2_identity,
        "eps_sigma": report.eps_sigma,
        "eps_sigma_tight": report.eps_sigma_tight,
        "margin": report.eps_sigma - sigma2,
        "margin_tight": report.eps_sigma_tight - sigma2,
        "exact_margin": report.eps_sigma - sim.exact_sigma2_identity,
        "exact_margin_tight": report.eps_sigma_tight - sim.exact_sigma2_identity,
        "multinomial_term": report.multinomial_term,
        "excess_uncertainty": excess,
        "excess_uncertainty_ratio": excess_uncertainty_ratio(report, sigma2),
        "eps_rho": report.eps_rho,
        "excess_within_bound": excess <= report.eps_rho + STANDARD_ERRORS * se,
        "passed": sigma2 <= report.eps_sigma + STANDARD_ERRORS * se,
        "passed_tight": sigma2 <= report.eps_sigma_tight + STANDARD_ERRORS * se if report.tight_certified else None,
        "tight_certified": report.tight_certified,
        "low_power": sim.R < LOW_POWER_REPLICATES,
    }
    if sim.empirical_sigma2_weighted is not None:
        bound = weighted_variance_bound(sim.weight_matrix, report.eps_sigma)
        verdict["weighted_bound"] = bound
        verdict["passed_weighted"] = sim.empirical_sigma2_weighted <= bound + STANDARD_ERRORS * sim.weighted_standard_error
    return BoundVerdict(**verdict)


def prevalence_grid_check(model: ClassModel, part: AnyPartition, P: ConfusionMatrix, q_grid: Any, s: int, R: int,
                          seed: int, A: Any = None, settings: IntegrationSettings | None = None,
                          project: bool = False) -> list[tuple[SimulationResult, BoundVerdict]]:
    """One simulation and verdict per prevalence in ``q_grid``."""
    rows = []
    for q in q_grid:
        sim = simulate(model, part, P, q, s, R, seed, A=A, settings=settings, project=project)
        report = variance_bounds(P, q, s, assume_symmetric=P.is_symmetric())
        rows.append((sim, bound_check(sim, report)))
    return rows
