"""Masses of class densities over labelled regions.

Three paths, chosen by the caller:

* one dimension: locate the label changes on a fine grid, refine them by
  bisection and take mass differences of the CDFs (or ``quad`` when the
  quadrature method is forced);
* two Gaussian classes in two dimensions: the log-ratio is quadratic in the
  second coordinate, so the inner integral is a conditional normal
  probability and only the outer one needs ``quad``;
* anything else: Monte Carlo with one Philox stream per class.
"""

import logging
import math
from dataclasses import dataclass
from typing import Callable

import numpy as np
from scipy import integrate, special

from assaybounds.densities import ClassModel, GaussianND
from assaybounds.errors import UnsupportedOperation
from assaybounds.parallel import stream, thread_map
from assaybounds.settings import IntegrationSettings

logger = logging.getLogger(__name__)

LabelFn = Callable[[np.ndarray], np.ndarray]

CLOSED_FORM_TOL = 1e-12
BISECTION_STEPS = 200


@dataclass(frozen=True)
class RegionMasses:
    """``masses[j, k]`` is the mass of class k's density on region j."""

    masses: np.ndarray
    method: str
    tolerance: float


@dataclass(frozen=True)
class LabelIntervals:
    edges: np.ndarray
    labels: np.ndarray

    def spans(self, label: int) -> list[tuple[float, float]]:
        return [(a, b) for a, b, l in zip(self.edges[:-1], self.edges[1:], self.labels) if l == label]


def scan_intervals(model: ClassModel, label_fn: LabelFn, settings: IntegrationSettings) -> LabelIntervals:
    """Partition the real line into maximal intervals of constant label."""
    lo, hi = model.support()
    knots = np.union1d(np.linspace(lo[0], hi[0], settings.label_grid),
                       [p for p in model.breakpoints() if lo[0] <= p <= hi[0]])
    mids = (knots[:-1] + knots[1:]) / 2.0
    labels = np.asarray(label_fn(mids.reshape(-1, 1)))
    change = np.flatnonzero(labels[:-1] != labels[1:])

    left, right, keep = mids[change].copy(), mids[change + 1].copy(), labels[change]
    for _ in range(BISECTION_STEPS):
        if left.size == 0 or np.all(right - left <= 2 * np.spacing(np.maximum(np.abs(left), np.abs(right)))):
            break
        mid = (left + right) / 2.0
        same = np.asarray(label_fn(mid.reshape(-1, 1))) == keep
        left = np.where(same, mid, left)
        right = np.where(same, right, mid)

    edges = np.concatenate([[-math.inf], (left + right) / 2.0, [math.inf]])
    runs = np.concatenate([[labels[0]], labels[change + 1]])
    return LabelIntervals(edges=edges, labels=runs)


def interval_masses(model: ClassModel, intervals: LabelIntervals, n_labels: int,
                    settings: IntegrationSettings) -> RegionMasses:
    densities = model.densities
    use_quad = settings.method == "quadrature" or not all(d.has_cdf for d in densities)
    if settings.method == "closed-form" and not all(d.closed_form for d in densities):
        raise UnsupportedOperation("closed-form integration unavailable for tabulated densities")

    masses = np.zeros((n_labels, len(densities)))
    if use_quad:
        error = 0.0
        for k, d in enumerate(densities):
            lo, hi = d.support()
            inner = d.breakpoints()
            for a, b, label in zip(intervals.edges[:-1], intervals.edges[1:], intervals.labels):
                a, b = max(a, lo[0]), min(b, hi[0])
                if a >= b:
                    continue
                value, err = integrate.quad(
                    lambda x: float(d.pdf(np.array([[x]]))[0]), a, b,
                    points=[p for p in inner if a < p < b] or None,
                    epsabs=settings.quad_tol, epsrel=settings.quad_tol, limit=400,
                )
                masses[label, k] += value
                error += err
        return RegionMasses(masses, "quadrature", max(error, settings.quad_tol))

    for k, d in enumerate(densities):
        at = d.cdf(intervals.edges)
        at[0], at[-1] = 0.0, 1.0
        np.add.at(masses[:, k], intervals.labels, np.diff(at))
    closed = all(d.closed_form for d in densities)
    method = "closed-form" if closed else "quadrature"
    drift = float(np.abs(masses.sum(axis=0) - 1.0).max())
    tolerance = max(CLOSED_FORM_TOL if closed else settings.quad_tol, drift)
    return RegionMasses(masses, method, tolerance)


def scan_masses(model: ClassModel, label_fn: LabelFn, n_labels: int, settings: IntegrationSettings) -> RegionMasses:
    return interval_masses(model, scan_intervals(model, label_fn, settings), n_labels, settings)


def is_gaussian2d_pair(model: ClassModel) -> bool:
    return model.c == 2 and model.dim == 2 and all(isinstance(d, GaussianND) for d in model.densities)


def gaussian2d_ratio_masses(model: ClassModel, log_t: float, log_tol: float,
                            settings: IntegrationSettings) -> RegionMasses:
    """Masses on {Q > 0}, {Q < 0} and {Q = 0} for Q = log g_0 - log g_1 - log_t.

    Rows are (above, below, boundary).
    """
    g = model.densities
    lam = [np.linalg.inv(d.cov) for d in g]
    const = [-math.log(2 * math.pi) - 0.5 * math.log(np.linalg.det(d.cov)) for d in g]

    def coefficients(x: float) -> tuple[float, float, float]:
        a = b = c = 0.0
        for sign, d, L, k0 in ((1.0, g[0], lam[0], const[0]), (-1.0, g[1], lam[1], const[1])):
            dx, my = x - d.mu[0], d.mu[1]
            a += sign * -0.5 * L[1, 1]
            b += sign * (-L[0, 1] * dx + L[1, 1] * my)
            c += sign * (-0.5 * (L[0, 0] * dx * dx - 2 * L[0, 1] * dx * my + L[1, 1] * my * my) + k0)
        return a, b, c - log_t

    scale = max(abs(lam[0][1, 1]), abs(lam[1][1, 1]))

    def positive_set(x: float) -> tuple[list[tuple[float, float]], bool]:
        """Intervals of y with Q(x, y) > 0, and whether Q(x, .) vanishes identically."""
        a, b, c = coefficients(x)
        if math.isinf(c):
            return ([(-math.inf, math.inf)] if c > 0 else []), False
        if abs(a) <= 1e-14 * scale:
            if abs(b) <= 1e-14 * scale:
                if abs(c) <= log_tol:
                    return [], True
                return ([(-math.inf, math.inf)] if c > 0 else []), False
            root = -c / b
            return ([(root, math.inf)] if b > 0 else [(-math.inf, root)]), False
        disc = b * b - 4 * a * c
        if disc <= 0:
            return ([(-math.inf, math.inf)] if a > 0 else []), False
        q = -0.5 * (b + math.copysign(math.sqrt(disc), b))
        r1, r2 = sorted((q / a, c / q))
        if a > 0:
            return [(-math.inf, r1), (r2, math.inf)], False
        return [(r1, r2)], False

    def conditional(d: GaussianND, x: float) -> tuple[float, float, float]:
        sxx, sxy, syy = d.cov[0, 0], d.cov[0, 1], d.cov[1, 1]
        marginal = math.exp(-0.5 * (x - d.mu[0]) ** 2 / sxx) / math.sqrt(2 * math.pi * sxx)
        return marginal, d.mu[1] + sxy / sxx * (x - d.mu[0]), math.sqrt(syy - sxy * sxy / sxx)

    def integrand(x: float, k: int, region: str) -> float:
        marginal, mean, sd = conditional(g[k], x)
        spans, flat = positive_set(x)
        if region == "boundary":
            return marginal if flat else 0.0
        prob = sum(special.ndtr((hi - mean) / sd) - special.ndtr((lo - mean) / sd) for lo, hi in spans)
        return marginal * prob

    lo, hi = model.support()
    masses = np.zeros((3, 2))
    error = 0.0
    for k in range(2):
        for row, region in ((0, "above"), (2, "boundary")):
            value, err = integrate.quad(integrand, lo[0], hi[0], args=(k, region),
                                        epsabs=settings.quad_tol, epsrel=settings.quad_tol, limit=400)
            masses[row, k] = value
            error += err
        masses[1, k] = 1.0 - masses[0, k] - masses[2, k]
    return RegionMasses(np.clip(masses, 0.0, 1.0), "quadrature", max(error, settings.quad_tol))


def monte_carlo_masses(model: ClassModel, label_fn: LabelFn, n_labels: int,
                       settings: IntegrationSettings) -> RegionMasses:
    """Label ``mc_samples`` draws per class; class k uses stream (seed, k)."""
    n = settings.mc_samples

    def column(k: int) -> np.ndarray:
        points = model.densities[k].draw(stream(settings.seed, k), n)
        return np.bincount(np.asarray(label_fn(points)), minlength=n_labels) / n

    masses = np.column_stack(thread_map(column, range(model.c), settings.threads))
    logger.debug("monte carlo masses with %d samples per class", n)
    return RegionMasses(masses, "monte-carlo", 3.0 * math.sqrt(0.25 / n))
