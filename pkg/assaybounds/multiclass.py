"""Multiclass rho_max minimization.

Two searches: the prevalence q whose Bayes partition has equal diagonal
entries, and a direct coordinate search over one-dimensional cut points.
"""

import logging
import math
from collections.abc import Sequence
from typing import Any

import numpy as np
from pydantic import BaseModel, ConfigDict
from scipy import optimize, special

from assaybounds.bounds import Prevalence
from assaybounds.confusion import ConfusionMatrix, confusion_matrix
from assaybounds.densities import ClassModel, check_simplex
from assaybounds.errors import ConfigError, PropertyViolation, SolverError, UnsupportedOperation
from assaybounds.parallel import stream, thread_map
from assaybounds.partitions import Bayes, CutPoints1D
from assaybounds.settings import IntegrationSettings, resolve

logger = logging.getLogger(__name__)

# --- Configuration ---
DAMPING = 0.5
ROOT_MAX_EVALS = 500
CUT_STEPS = (0.01, 0.001, 0.0001)
REFINE_HALF_WIDTH = 10
MAX_CANDIDATES = 20001
MAX_SWEEPS = 100


# --- Pydantic Models ---
class BalanceResult(BaseModel):
    model_config = ConfigDict(frozen=True)

    q_star: Prevalence
    P_star: ConfusionMatrix
    rho_star: float
    residual: float
    converged: bool
    iterations: int


class CutResult(BaseModel):
    model_config = ConfigDict(frozen=True)

    cuts: list[float]
    P: ConfusionMatrix
    rho_max: float
    trace: float
    diagonal_spread: float


class OptimalityVerdict(BaseModel):
    """Random Bayes partitions checked against a balanced optimum."""

    model_config = ConfigDict(frozen=True)

    trials: int
    passed: bool
    chain_holds: bool
    worst_margin: float | None
    failures: list[int]


# --- Equal-diagonal prevalence ---
def _bayes_diagonal(model: ClassModel, q: np.ndarray, settings: IntegrationSettings) -> tuple[ConfusionMatrix, np.ndarray]:
    matrix = confusion_matrix(model, Bayes(q=(q / q.sum()).tolist()), settings)
    diag = np.diag(matrix.P)
    if np.any(diag <= 0):
        k = int(np.argmin(diag))
        raise PropertyViolation(f"degenerate Bayes partition: class {k} ({model.labels[k]}) is never the argmax")
    return matrix, diag


def balance_prevalence(model: ClassModel, q_init: Prevalence | Any = None, max_iters: int = 200, tol: float = 1e-6,
                       settings: IntegrationSettings | None = None) -> BalanceResult:
    """Prevalence whose Bayes confusion matrix has equal diagonal entries.

    Damped fixed point q <- (q + normalize(q * mean(diag) / diag)) / 2, then
    derivative-free root finding on log-ratios if that stalls.
    """
    settings = resolve(settings)
    c = model.c
    q = np.full(c, 1.0 / c) if q_init is None else check_simplex(
        q_init.q if isinstance(q_init, Prevalence) else q_init, "q_init", size=c).copy()
    if np.any(q <= 0):
        raise ConfigError("q_init: every class needs positive prevalence")

    best: tuple[float, np.ndarray, ConfusionMatrix] | None = None
    iterations = 0
    for iterations in range(1, max_iters + 1):
        matrix, diag = _bayes_diagonal(model, q, settings)
        residual = float(diag.max() - diag.min())
        if best is None or residual < best[0]:
            best = (residual, q.copy(), matrix)
        if residual <= tol:
            break
        proposal = q * diag.mean() / diag
        q = DAMPING * q + (1.0 - DAMPING) * proposal / proposal.sum()

    if best[0] > tol:
        logger.info("fixed point stalled at residual %.3g; switching to root finding", best[0])

        def residuals(log_ratio: np.ndarray) -> np.ndarray:
            trial = special.softmax(np.append(log_ratio, 0.0))
            _, diag = _bayes_diagonal(model, trial, settings)
            return diag[:-1] - diag[-1]

        start = best[1]
        # df-sane divides by residual differences that can vanish on flat stretches
        with np.errstate(divide="ignore", invalid="ignore"):
            solution = optimize.root(residuals, np.log(start[:-1] / start[-1]), method="df-sane",
                                     options={"fatol": tol / 10, "maxfev": ROOT_MAX_EVALS})
        q = special.softmax(np.append(solution.x, 0.0))
        matrix, diag = _bayes_diagonal(model, q, settings)
        residual = float(diag.max() - diag.min())
        if residual < best[0]:
            best = (residual, q, matrix)

    residual, q, matrix = best
    converged = residual <= tol
    if not converged:
        logger.warning("no equal-diagonal prevalence found: best residual %.3g > %.3g", residual, tol)
    q = q / q.sum()
    return BalanceResult(
        q_star=Prevalence(q=q.tolist()), P_star=matrix, rho_star=float(1.0 - np.diag(matrix.P).min()),
        residual=residual, converged=converged, iterations=iterations,
    )


def verify_balance_optimality(result: BalanceResult, model: ClassModel, trials: int = 50, seed: int = 0,
                             tol: float = 1e-4, settings: IntegrationSettings | None = None) -> OptimalityVerdict:
    """No Bayes partition for a random prevalence beats the balanced optimum."""
    if not result.converged:
        raise SolverError("balance result did not converge; nothing to verify")
    settings = resolve(settings)
    q_star = result.q_star.array
    accuracy_star = float(q_star @ np.diag(result.P_star.P))

    def trial(i: int) -> tuple[float, bool]:
        q = stream(seed, i).dirichlet(np.ones(model.c))
        diag = np.diag(confusion_matrix(model, Bayes(q=(q / q.sum()).tolist()), settings).P)
        return float(1.0 - diag.min() - result.rho_star), bool(q_star @ diag <= accuracy_star + tol)

    outcomes = thread_map(trial, range(trials), settings.threads)
    failures = [i for i, (margin, _) in enumerate(outcomes) if margin < -tol]
    return OptimalityVerdict(
        trials=trials,
        passed=not failures,
        chain_holds=all(chain for _, chain in outcomes),
        worst_margin=min((margin for margin, _ in outcomes), default=None),
        failures=failures,
    )


# --- One-dimensional cut points ---
class _CutEvaluator:
    """Confusion matrices for many cut vectors at once from the class CDFs."""

    def __init__(self, model: ClassModel):
        if model.dim != 1:
            raise ConfigError(f"cut points need a one-dimensional model, got dimension {model.dim}")
        if not all(d.has_cdf for d in model.densities):
            raise UnsupportedOperation("cut-point search needs a CDF for every class density")
        self.densities = model.densities
        self.c = model.c

    def matrices(self, cuts: np.ndarray) -> np.ndarray:
        m = len(cuts)
        edges = np.column_stack([np.full(m, -math.inf), cuts, np.full(m, math.inf)])
        p = np.empty((m, self.c, self.c))
        for k, d in enumerate(self.densities):
            at = d.cdf(edges)
            at[:, 0], at[:, -1] = 0.0, 1.0
            p[:, :, k] = np.diff(at, axis=1)
        return p


def _scores(p: np.ndarray) -> tuple[np.ndarray, np.ndarray, np.ndarray, np.ndarray]:
    diag = np.diagonal(p, axis1=1, axis2=2)
    radii = np.sort(1.0 - diag, axis=1)[:, ::-1]
    return radii[:, 0], diag.sum(axis=1), radii, diag.max(axis=1) - diag.min(axis=1)


def _lexicographic_better(a: Sequence[float], b: Sequence[float], tol: float) -> bool:
    for x, y in zip(a, b):
        if x < y - tol:
            return True
        if x > y + tol:
            return False
    return False


def _candidates(current: float, left: float, right: float, step: float, full_range: bool) -> np.ndarray:
    if full_range:
        first, last = math.floor(left / step) + 1, math.ceil(right / step) - 1
        if last - first + 1 > MAX_CANDIDATES:
            xs = np.linspace(left, right, MAX_CANDIDATES + 2)[1:-1]
        else:
            xs = np.round(np.arange(first, last + 1) * step, 12)
    else:
        xs = np.round(current + step * np.arange(-REFINE_HALF_WIDTH, REFINE_HALF_WIDTH + 1), 12)
    xs = xs[(xs > left) & (xs < right)]
    return np.unique(np.append(xs, current))


def _coordinate_search(model: ClassModel, cuts: np.ndarray, key, steps: Sequence[float],
                       tol: float = 1e-12) -> np.ndarray:
    """Coordinate descent on the cut vector under ``key(p_batch) -> list of sort keys``."""
    evaluator = _CutEvaluator(model)
    lo, hi = model.support()
    cuts = cuts.copy()
    for round_index, step in enumerate(steps):
        for _ in range(MAX_SWEEPS):
            moved = False
            for i in range(len(cuts)):
                left = cuts[i - 1] if i > 0 else min(lo[0], cuts[0]) - step
                right = cuts[i + 1] if i < len(cuts) - 1 else max(hi[0], cuts[-1]) + step
                xs = _candidates(cuts[i], left, right, step, full_range=round_index == 0)
                batch = np.repeat(cuts[None, :], len(xs), axis=0)
                batch[:, i] = xs
                keys = key(evaluator.matrices(batch))
                incumbent = int(np.flatnonzero(xs == cuts[i])[0])
                best = incumbent
                for j in range(len(xs)):
                    if _lexicographic_better(keys[j], keys[best], tol):
                        best = j
                if best != incumbent:
                    cuts[i] = xs[best]
                    moved = True
            if not moved:
                break
    return cuts


def _cut_result(model: ClassModel, cuts: np.ndarray, settings: IntegrationSettings) -> CutResult:
    matrix = confusion_matrix(model, CutPoints1D(cuts=cuts.tolist()), settings)
    diag = np.diag(matrix.P)
    return CutResult(cuts=cuts.tolist(), P=matrix, rho_max=float(1.0 - diag.min()), trace=float(diag.sum()),
                     diagonal_spread=float(diag.max() - diag.min()))


def _initial_cuts(model: ClassModel, init_cuts: Any) -> np.ndarray:
    if init_cuts is None:
        lo, hi = model.support()
        return lo[0] + (hi[0] - lo[0]) * np.arange(1, model.c) / model.c
    cuts = np.asarray(init_cuts, dtype=float)
    if cuts.shape != (model.c - 1,) or np.any(np.diff(cuts) <= 0):
        raise ConfigError(f"init_cuts: need {model.c - 1} strictly increasing cut points, got {cuts.tolist()}")
    return cuts


def optimize_cutpoints_1d(model: ClassModel, init_cuts: Any = None, tol: float = 1e-12,
                          settings: IntegrationSettings | None = None,
                          steps: Sequence[float] = CUT_STEPS) -> CutResult:
    """Cut points minimizing rho_max; ties prefer smaller remaining radii, then the larger trace."""

    def key(p: np.ndarray) -> list[tuple[float, ...]]:
        rho, trace, radii, _ = _scores(p)
        return [(rho[j], *radii[j, 1:], -trace[j]) for j in range(len(p))]

    cuts = _coordinate_search(model, _initial_cuts(model, init_cuts), key, steps, tol)
    result = _cut_result(model, cuts, resolve(settings))
    logger.info("cut points %s with rho_max %.10g", result.cuts, result.rho_max)
    return result


def equalize_diagonal_1d(model: ClassModel, cuts: Any, rho_tol: float = 1e-9,
                         settings: IntegrationSettings | None = None,
                         steps: Sequence[float] = CUT_STEPS) -> CutResult:
    """Among cut points as good as ``cuts`` in rho_max, the one with the most even diagonal."""
    start = _initial_cuts(model, cuts)
    ceiling = _scores(_CutEvaluator(model).matrices(start[None, :]))[0][0] + rho_tol

    def key(p: np.ndarray) -> list[tuple[float, ...]]:
        rho, trace, _, spread = _scores(p)
        return [(0.0 if rho[j] <= ceiling else 1.0, spread[j], -trace[j]) for j in range(len(p))]

    result = _cut_result(model, _coordinate_search(model, start, key, steps), resolve(settings))
    logger.info("equal-diagonal cut points %s, spread %.3g", result.cuts, result.diagonal_spread)
    return result
