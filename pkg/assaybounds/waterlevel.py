"""Optimal two-class partition by water-leveling.

For a threshold t the domains are {p_0 > t p_1} and {p_0 < t p_1}.
Delta(t) = mu_0(t) - mu_1(t) is non-increasing; the largest Gershgorin radius
is minimized where Delta crosses zero. When Delta jumps over zero the ratio
is flat on a set of positive mass and that set is split between the
classes.
"""

import logging
import math
from typing import Any

import numpy as np
from pydantic import BaseModel, ConfigDict
from scipy import optimize

from assaybounds import integrate
from assaybounds.densities import ClassModel
from assaybounds.errors import AssayError, ConfigError, SolverError, UnsupportedOperation
from assaybounds.parallel import thread_map
from assaybounds.partitions import ABOVE, BELOW, RatioThreshold, ratio_state
from assaybounds.settings import IntegrationSettings, resolve

logger = logging.getLogger(__name__)

# --- Configuration ---
T_MIN, T_MAX = 1e-12, 1e12
MAX_EXPANSIONS = 80
RELATIVE_WIDTH = 1e-12
LOG_TOL = 1e-9
BOUNDARY, ABOVE_LABEL, BELOW_LABEL = 2, 0, 1


# --- Pydantic Models ---
class LevelCurvePoint(BaseModel):
    model_config = ConfigDict(frozen=True)

    t: float
    mu1: float
    mu2: float
    delta: float
    rho_max_at_t: float
    mu_b1: float = 0.0
    mu_b2: float = 0.0
    tolerance: float = 0.0


class WaterLevelResult(BaseModel):
    """Optimal threshold t_star and the induced two-class partition.

    ``mu1_star``/``mu2_star`` exclude the boundary set; ``boundary_mass``
    holds the part of it assigned to class 0 (measured under p_0) and to
    class 1 (measured under p_1).
    """

    model_config = ConfigDict(frozen=True)

    t_star: float
    rho_star: float
    mu1_star: float
    mu2_star: float
    boundary_mass: tuple[float, float]
    atom_case: bool
    partition: RatioThreshold
    boundary_points: list[float] = []
    method: str = "closed-form"

    @property
    def mu1_total(self) -> float:
        return self.mu1_star + self.boundary_mass[0]

    @property
    def mu2_total(self) -> float:
        return self.mu2_star + self.boundary_mass[1]


# --- Helper Functions ---
def _level_label_fn(model: ClassModel, t: float):
    def label(points: np.ndarray) -> np.ndarray:
        state = ratio_state(model, points, t, LOG_TOL)
        return np.where(state == ABOVE, ABOVE_LABEL, np.where(state == BELOW, BELOW_LABEL, BOUNDARY))

    return label


def _check_pair(model: ClassModel) -> None:
    if model.c != 2:
        raise ConfigError(f"water level needs exactly 2 classes, model has {model.c}")


def _masses(model: ClassModel, t: float, settings: IntegrationSettings) -> integrate.RegionMasses:
    if settings.method != "monte-carlo":
        if model.dim == 1:
            return integrate.scan_masses(model, _level_label_fn(model, t), 3, settings)
        if integrate.is_gaussian2d_pair(model):
            log_t = math.log(t) if t > 0 else -math.inf
            return integrate.gaussian2d_ratio_masses(model, log_t, LOG_TOL, settings)
    # the same seed gives the same draws at every t
    return integrate.monte_carlo_masses(model, _level_label_fn(model, t), 3, settings)


# --- Operations ---
def level_measures(model: ClassModel, t: float, settings: IntegrationSettings | None = None) -> LevelCurvePoint:
    """mu_0(t), mu_1(t) and the boundary masses at threshold t."""
    _check_pair(model)
    if not (t >= 0 and math.isfinite(t)):
        raise ConfigError(f"t: must be finite and non-negative, got {t}")
    region = _masses(model, t, resolve(settings))
    m = region.masses
    mu1, mu2 = float(m[ABOVE_LABEL, 0]), float(m[BELOW_LABEL, 1])
    return LevelCurvePoint(
        t=t, mu1=mu1, mu2=mu2, delta=mu1 - mu2, rho_max_at_t=max(1.0 - mu1, 1.0 - mu2),
        mu_b1=float(m[BOUNDARY, 0]), mu_b2=float(m[BOUNDARY, 1]), tolerance=region.tolerance,
    )


def sweep_levels(model: ClassModel, t_grid: Any, settings: IntegrationSettings | None = None) -> list[LevelCurvePoint]:
    settings = resolve(settings)
    grid = [float(t) for t in t_grid]
    if not grid or any(t <= 0 for t in grid) or any(b < a for a, b in zip(grid, grid[1:])):
        raise ConfigError(f"t_grid: must be non-empty, positive and sorted, got {grid}")

    def measure(t: float) -> LevelCurvePoint:
        try:
            return level_measures(model, t, settings)
        except AssayError as exc:
            raise SolverError(f"integration failed at t={t!r}: {exc.detail}") from exc

    return thread_map(measure, grid, settings.threads)


def solve_water_level(model: ClassModel, tol_delta: float = 1e-8, settings: IntegrationSettings | None = None,
                      t_init: float = 1.0) -> WaterLevelResult:
    """Threshold t_star with Delta(t_star) = 0, splitting a flat-ratio set when Delta jumps."""
    _check_pair(model)
    settings = resolve(settings)
    cache: dict[float, LevelCurvePoint] = {}

    def at(t: float) -> LevelCurvePoint:
        if t not in cache:
            cache[t] = level_measures(model, t, settings)
        return cache[t]

    t_init = min(max(t_init, T_MIN), T_MAX)
    start = at(t_init)
    if abs(start.delta) <= tol_delta:
        return _finish(model, start, tol_delta, settings)

    lo = hi = t_init
    direction = 2.0 if start.delta > 0 else 0.5
    point = start
    for _ in range(MAX_EXPANSIONS):
        nxt = (hi if direction > 1 else lo) * direction
        if not T_MIN <= nxt <= T_MAX:
            break
        point = at(nxt)
        if direction > 1:
            lo, hi = hi, nxt
        else:
            lo, hi = nxt, lo
        if abs(point.delta) <= tol_delta:
            return _finish(model, point, tol_delta, settings)
        if (point.delta < 0) == (direction > 1):
            break
    if (at(lo).delta > 0) == (at(hi).delta > 0):
        sign = "positive" if start.delta > 0 else "negative"
        raise SolverError(f"no water level: Delta(t) stays {sign} for t in [{T_MIN:g}, {T_MAX:g}]")

    while hi - lo > RELATIVE_WIDTH * hi:
        mid = math.sqrt(lo * hi)
        if not lo < mid < hi:
            break
        point = at(mid)
        if abs(point.delta) <= tol_delta:
            return _finish(model, point, tol_delta, settings)
        if point.delta > 0:
            lo = mid
        else:
            hi = mid

    left, right = at(lo), at(hi)
    slack = max(tol_delta, left.tolerance if left.tolerance > 1e-9 else 0.0)
    best = left if abs(left.delta) <= abs(right.delta) else right
    if abs(best.delta) <= slack:
        return _finish(model, best, tol_delta, settings)

    # Delta jumps: the ratio is flat at p_0 = t p_1 on the set that changes sides.
    flat1, flat2 = left.mu1 - right.mu1, right.mu2 - left.mu2
    if flat1 <= 0 or flat2 <= 0:
        raise UnsupportedOperation("unsupported boundary split: Delta jumps without a flat-ratio set")
    t_star = min(max(flat1 / flat2, lo), hi)
    atom = level_measures(model, t_star, settings)
    if atom.mu_b1 + atom.mu_b2 <= tol_delta:
        raise UnsupportedOperation(f"unsupported boundary split: no boundary mass at t={t_star!r}")
    return _finish(model, atom, tol_delta, settings)


def _finish(model: ClassModel, point: LevelCurvePoint, tol_delta: float,
            settings: IntegrationSettings) -> WaterLevelResult:
    boundary_points = _boundary_points(model, point.t, settings)
    method = _method(model, settings)
    if point.mu_b1 + point.mu_b2 <= tol_delta:
        result = WaterLevelResult(
            t_star=point.t, rho_star=1.0 - point.mu1, mu1_star=point.mu1, mu2_star=point.mu2,
            boundary_mass=(0.0, 0.0), atom_case=False, partition=RatioThreshold(t=point.t),
            boundary_points=boundary_points, method=method,
        )
    else:
        result = _split_boundary(model, point, settings, boundary_points, method)
    logger.info("water level t*=%.10g rho*=%.10g atom=%s", result.t_star, result.rho_star, result.atom_case)
    if result.rho_star >= 0.5:
        logger.warning("rho_star = %.6g >= 0.5: no diagonally dominant two-class partition exists", result.rho_star)
    return result


def _method(model: ClassModel, settings: IntegrationSettings) -> str:
    if settings.method == "monte-carlo" or (model.dim > 1 and not integrate.is_gaussian2d_pair(model)):
        return "monte-carlo"
    if model.dim == 1 and settings.method != "quadrature" and all(d.closed_form for d in model.densities):
        return "closed-form"
    return "quadrature"


def _boundary_points(model: ClassModel, t: float, settings: IntegrationSettings) -> list[float]:
    if model.dim != 1:
        return []
    intervals = integrate.scan_intervals(model, _level_label_fn(model, t), settings)
    return [float(x) for x in intervals.edges[1:-1]]


def _split_boundary(model: ClassModel, point: LevelCurvePoint, settings: IntegrationSettings,
                    boundary_points: list[float], method: str) -> WaterLevelResult:
    """Send the left part of the boundary set to class 0 so that both totals agree."""
    if model.dim != 1 or not all(d.has_cdf for d in model.densities):
        raise UnsupportedOperation("unsupported boundary split: only one-dimensional densities with a CDF")
    intervals = integrate.scan_intervals(model, _level_label_fn(model, point.t), settings)
    spans = intervals.spans(BOUNDARY)
    p1, p2 = model.densities

    def left_mass(d, x: float) -> float:
        return float(sum(max(0.0, float(d.cdf(min(b, x)) - d.cdf(a))) for a, b in spans if a < x))

    def imbalance(x: float) -> float:
        return (point.mu1 + left_mass(p1, x)) - (point.mu2 + point.mu_b2 - left_mass(p2, x))

    lo, hi = model.support()
    a = max(spans[0][0], lo[0])
    b = min(spans[-1][1], hi[0])
    if imbalance(a) >= 0:
        cut = a
    elif imbalance(b) <= 0:
        cut = b
    else:
        cut = optimize.brentq(imbalance, a, b, xtol=1e-15, rtol=4 * np.finfo(float).eps, maxiter=500)
    to_first, to_second = left_mass(p1, cut), point.mu_b2 - left_mass(p2, cut)
    mu1_total = point.mu1 + to_first
    logger.info("boundary set split at x=%.10g", cut)
    return WaterLevelResult(
        t_star=point.t, rho_star=1.0 - mu1_total, mu1_star=point.mu1, mu2_star=point.mu2,
        boundary_mass=(to_first, to_second), atom_case=True,
        partition=RatioThreshold(t=point.t, boundary_cut=cut),
        boundary_points=boundary_points, method=method,
    )
