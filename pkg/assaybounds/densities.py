"""Class-conditional densities p_k(r): evaluation, sampling, integration and
Gaussian-noise convolution.

Every density is an immutable pydantic model tagged by ``kind`` so that a
JSON descriptor such as ``{"kind": "weibull", "shape": 2, "scale": 1}``
validates straight into the right variant.
"""

import logging
import math
from functools import cached_property
from typing import Annotated, Any, ClassVar, Literal, Union

import numpy as np
from pydantic import BaseModel, ConfigDict, Field, field_serializer, field_validator, model_validator
from scipy import integrate, signal, special, stats
from scipy.interpolate import RegularGridInterpolator

from assaybounds.errors import ConfigError, UnsupportedOperation
from assaybounds.parallel import stream
from assaybounds.settings import IntegrationSettings, resolve

logger = logging.getLogger(__name__)

# --- Configuration ---
MASS_TOL = 1e-9
GRID_MASS_TOL = 1e-6
WINDOW_SD = 8.0
WEIBULL_TAIL = 1e-12
SIMPLEX_TOL = 1e-12
EIGEN_TOL = 1e-9
MAX_GRID_DIM = 3

Segment = tuple[float, float, float]


# --- Helper Functions ---
def as_points(r: Any, dim: int) -> np.ndarray:
    """Coerce ``r`` to an ``(m, dim)`` float array.

    A 1-D array is a batch of scalars when ``dim == 1`` and a single point
    otherwise.
    """
    arr = np.asarray(r, dtype=float)
    if arr.ndim == 0:
        arr = arr.reshape(1, 1)
    elif arr.ndim == 1:
        arr = arr.reshape(-1, 1) if dim == 1 else arr.reshape(1, -1)
    if arr.ndim != 2 or arr.shape[1] != dim:
        raise ConfigError(f"dimension mismatch: point has dimension {arr.shape[-1]}, density has {dim}")
    return arr


def check_simplex(weights: Any, name: str, size: int | None = None, tol: float = SIMPLEX_TOL) -> np.ndarray:
    w = np.asarray(weights, dtype=float)
    if w.ndim != 1 or w.size == 0:
        raise ConfigError(f"{name}: expected a non-empty vector")
    if size is not None and w.size != size:
        raise ConfigError(f"{name}: expected {size} entries, got {w.size}")
    if not np.all(np.isfinite(w)) or np.any(w < 0):
        raise ConfigError(f"{name}: entries must be finite and non-negative, got {w.tolist()}")
    if abs(w.sum() - 1.0) > tol:
        raise ConfigError(f"{name} does not sum to 1 (sum={w.sum()!r})")
    return w


def _interval_prob(z_lo: np.ndarray, z_hi: np.ndarray) -> np.ndarray:
    """P(z_lo < Z < z_hi) for standard normal Z, accurate in both tails."""
    upper = special.ndtr(-z_lo) - special.ndtr(-z_hi)
    lower = special.ndtr(z_hi) - special.ndtr(z_lo)
    return np.where(z_lo > 0, upper, lower)


def _normal_cdf_antiderivative(z: np.ndarray) -> np.ndarray:
    # G(z) = z*Phi(z) + phi(z); G(z) = z + G(-z) keeps the right tail exact.
    a = -np.abs(z)
    g = a * special.ndtr(a) + np.exp(-0.5 * a * a) / math.sqrt(2.0 * math.pi)
    return np.where(z > 0, z + g, g)


def _trapezoid_weights(axis: np.ndarray) -> np.ndarray:
    w = np.zeros_like(axis)
    d = np.diff(axis)
    w[:-1] += d / 2.0
    w[1:] += d / 2.0
    return w


def _validate_segments(segments: list[Segment]) -> list[Segment]:
    if not segments:
        raise ValueError("segments: at least one segment is required")
    segments = sorted(segments)
    for lo, hi, height in segments:
        if not lo < hi or height < 0:
            raise ValueError(f"segments: invalid segment ({lo}, {hi}, {height})")
    for (_, hi, _), (lo, _, _) in zip(segments, segments[1:]):
        if lo < hi:
            raise ValueError(f"segments: overlap at {lo}")
    total = sum((hi - lo) * h for lo, hi, h in segments)
    if abs(total - 1.0) > MASS_TOL:
        raise ValueError(f"segments: total mass {total!r} is not 1")
    return segments


def _check_covariance(cov: np.ndarray, name: str) -> None:
    if cov.ndim != 2 or cov.shape[0] != cov.shape[1]:
        raise ConfigError(f"{name}: expected a square matrix, got shape {cov.shape}")
    if not np.allclose(cov, cov.T, rtol=0.0, atol=1e-12 * max(1.0, np.abs(cov).max())):
        raise ConfigError(f"{name}: matrix is not symmetric")
    try:
        np.linalg.cholesky(cov)
    except np.linalg.LinAlgError:
        raise ConfigError(f"{name}: matrix is not positive definite")


# --- Pydantic Models ---
class _Density(BaseModel):
    model_config = ConfigDict(frozen=True)

    closed_form: ClassVar[bool] = True

    @property
    def dim(self) -> int:
        return 1

    def pdf(self, points: np.ndarray) -> np.ndarray:
        raise NotImplementedError

    def logpdf(self, points: np.ndarray) -> np.ndarray:
        with np.errstate(divide="ignore"):
            return np.log(self.pdf(points))

    def cdf(self, x: np.ndarray) -> np.ndarray:
        raise UnsupportedOperation(f"{self.kind}: no cumulative distribution function")

    @property
    def has_cdf(self) -> bool:
        return self.dim == 1

    def draw(self, rng: np.random.Generator, count: int) -> np.ndarray:
        raise NotImplementedError

    def support(self) -> tuple[np.ndarray, np.ndarray]:
        raise NotImplementedError

    def breakpoints(self) -> list[float]:
        return []

    def mass(self) -> float:
        """Total mass by adaptive quadrature over the support window."""
        lo, hi = self.support()
        inner = [p for p in self.breakpoints() if lo[0] < p < hi[0]]
        value, _ = integrate.quad(
            lambda x: float(self.pdf(np.array([[x]]))[0]),
            lo[0], hi[0], points=inner or None, epsabs=1e-13, epsrel=1e-12, limit=400,
        )
        return value


class Gaussian1D(_Density):
    kind: Literal["gaussian1d"] = "gaussian1d"
    mean: float
    sd: float = Field(gt=0)

    @cached_property
    def _dist(self):
        return stats.norm(self.mean, self.sd)

    def pdf(self, points):
        return self._dist.pdf(points[:, 0])

    def logpdf(self, points):
        return self._dist.logpdf(points[:, 0])

    def cdf(self, x):
        return self._dist.cdf(x)

    def draw(self, rng, count):
        return self._dist.ppf(rng.random(count)).reshape(-1, 1)

    def support(self):
        return np.array([self.mean - WINDOW_SD * self.sd]), np.array([self.mean + WINDOW_SD * self.sd])


class GaussianND(_Density):
    kind: Literal["gaussian"] = "gaussian"
    mean: list[float]
    covariance: list[list[float]]

    @model_validator(mode="after")
    def _check(self):
        cov = np.asarray(self.covariance, dtype=float)
        if cov.shape != (len(self.mean), len(self.mean)):
            raise ValueError(f"covariance: expected shape {(len(self.mean),) * 2}, got {cov.shape}")
        _check_covariance(cov, "covariance")
        return self

    @property
    def dim(self):
        return len(self.mean)

    @cached_property
    def mu(self) -> np.ndarray:
        return np.asarray(self.mean, dtype=float)

    @cached_property
    def cov(self) -> np.ndarray:
        return np.asarray(self.covariance, dtype=float)

    @cached_property
    def _dist(self):
        return stats.multivariate_normal(self.mu, self.cov)

    def pdf(self, points):
        return np.atleast_1d(self._dist.pdf(points)).reshape(-1)

    def logpdf(self, points):
        return np.atleast_1d(self._dist.logpdf(points)).reshape(-1)

    def cdf(self, x):
        if self.dim != 1:
            return super().cdf(x)
        return stats.norm(self.mu[0], math.sqrt(self.cov[0, 0])).cdf(x)

    def draw(self, rng, count):
        chol = np.linalg.cholesky(self.cov)
        return self.mu + rng.standard_normal((count, self.dim)) @ chol.T

    def support(self):
        half = WINDOW_SD * np.sqrt(np.diag(self.cov))
        return self.mu - half, self.mu + half

    def mass(self):
        if self.dim == 1:
            return super().mass()
        return 1.0  # normalized in closed form once the covariance is positive definite


class Weibull(_Density):
    kind: Literal["weibull"] = "weibull"
    shape: float = Field(gt=0)
    scale: float = Field(gt=0)

    @cached_property
    def _dist(self):
        return stats.weibull_min(self.shape, scale=self.scale)

    def pdf(self, points):
        return self._dist.pdf(points[:, 0])

    def logpdf(self, points):
        return self._dist.logpdf(points[:, 0])

    def cdf(self, x):
        return self._dist.cdf(x)

    def draw(self, rng, count):
        return self._dist.ppf(rng.random(count)).reshape(-1, 1)

    def support(self):
        return np.array([0.0]), np.array([float(self._dist.ppf(1.0 - WEIBULL_TAIL))])

    def breakpoints(self):
        return [0.0]


class UniformInterval(_Density):
    kind: Literal["uniform"] = "uniform"
    lo: float
    hi: float

    @model_validator(mode="after")
    def _check(self):
        if not self.lo < self.hi:
            raise ValueError(f"uniform: lo={self.lo} must be below hi={self.hi}")
        return self

    def pdf(self, points):
        x = points[:, 0]
        return np.where((x >= self.lo) & (x <= self.hi), 1.0 / (self.hi - self.lo), 0.0)

    def cdf(self, x):
        return np.clip((np.asarray(x, dtype=float) - self.lo) / (self.hi - self.lo), 0.0, 1.0)

    def draw(self, rng, count):
        return (self.lo + (self.hi - self.lo) * rng.random(count)).reshape(-1, 1)

    def support(self):
        return np.array([self.lo]), np.array([self.hi])

    def breakpoints(self):
        return [self.lo, self.hi]

    def mass(self):
        return 1.0


class PiecewiseUniform(_Density):
    kind: Literal["piecewise_uniform"] = "piecewise_uniform"
    segments: list[Segment]

    @field_validator("segments")
    @classmethod
    def _check_segments(cls, segments):
        return _validate_segments(segments)

    @cached_property
    def _arrays(self):
        seg = np.asarray(self.segments, dtype=float)
        return seg[:, 0], seg[:, 1], seg[:, 2]

    def pdf(self, points):
        x = points[:, 0]
        out = np.zeros_like(x)
        hit = np.zeros(x.shape, dtype=bool)
        for lo, hi, h in self.segments:
            inside = (x >= lo) & (x <= hi) & ~hit
            out[inside] = h
            hit |= inside
        return out

    def cdf(self, x):
        lo, hi, h = self._arrays
        x = np.asarray(x, dtype=float)[..., None]
        return np.sum(h * np.clip(x - lo, 0.0, hi - lo), axis=-1)

    def draw(self, rng, count):
        lo, hi, h = self._arrays
        probs = h * (hi - lo)
        idx = rng.choice(len(lo), size=count, p=probs / probs.sum())
        return (lo[idx] + (hi[idx] - lo[idx]) * rng.random(count)).reshape(-1, 1)

    def support(self):
        lo, hi, h = self._arrays
        live = h > 0
        return np.array([lo[live].min()]), np.array([hi[live].max()])

    def breakpoints(self):
        lo, hi, _ = self._arrays
        return sorted(set(lo.tolist()) | set(hi.tolist()))

    def mass(self):
        lo, hi, h = self._arrays
        return float(np.sum(h * (hi - lo)))


class SmoothedPiecewiseUniform(_Density):
    """A piecewise-uniform density convolved with N(0, sd^2)."""

    kind: Literal["smoothed_piecewise_uniform"] = "smoothed_piecewise_uniform"
    segments: list[Segment]
    sd: float = Field(gt=0)

    @field_validator("segments")
    @classmethod
    def _check_segments(cls, segments):
        return _validate_segments(segments)

    @cached_property
    def _arrays(self):
        seg = np.asarray(self.segments, dtype=float)
        return seg[:, 0], seg[:, 1], seg[:, 2]

    def pdf(self, points):
        lo, hi, h = self._arrays
        x = points[:, :1]
        return np.sum(h * _interval_prob((x - hi) / self.sd, (x - lo) / self.sd), axis=1)

    def cdf(self, x):
        lo, hi, h = self._arrays
        x = np.asarray(x, dtype=float)[..., None]
        g = _normal_cdf_antiderivative((x - lo) / self.sd) - _normal_cdf_antiderivative((x - hi) / self.sd)
        return np.sum(h * self.sd * g, axis=-1)

    def draw(self, rng, count):
        base = PiecewiseUniform(segments=self.segments).draw(rng, count)
        return base + self.sd * rng.standard_normal((count, 1))

    def support(self):
        lo, hi, h = self._arrays
        live = h > 0
        return (np.array([lo[live].min() - WINDOW_SD * self.sd]),
                np.array([hi[live].max() + WINDOW_SD * self.sd]))


class Mixture(_Density):
    kind: Literal["mixture"] = "mixture"
    weights: list[float]
    components: list["Density"]

    @model_validator(mode="after")
    def _check(self):
        if len(self.weights) != len(self.components) or not self.components:
            raise ValueError("mixture: weights and components must have the same non-zero length")
        check_simplex(self.weights, "mixture.weights")
        dims = {comp.dim for comp in self.components}
        if len(dims) != 1:
            raise ValueError(f"mixture: components have different dimensions {sorted(dims)}")
        return self

    @property
    def closed_form(self):
        return all(comp.closed_form for comp in self.components)

    @property
    def dim(self):
        return self.components[0].dim

    @property
    def has_cdf(self):
        return all(comp.has_cdf for comp in self.components)

    def pdf(self, points):
        return sum(w * comp.pdf(points) for w, comp in zip(self.weights, self.components))

    def logpdf(self, points):
        logs = np.vstack([comp.logpdf(points) for comp in self.components])
        return special.logsumexp(logs, axis=0, b=np.asarray(self.weights)[:, None])

    def cdf(self, x):
        return sum(w * comp.cdf(x) for w, comp in zip(self.weights, self.components))

    def draw(self, rng, count):
        counts = rng.multinomial(count, self.weights)
        parts = [comp.draw(rng, int(m)) for comp, m in zip(self.components, counts) if m > 0]
        if not parts:
            return np.empty((0, self.dim))
        return rng.permutation(np.vstack(parts))

    def support(self):
        boxes = [comp.support() for comp in self.components]
        return np.min([b[0] for b in boxes], axis=0), np.max([b[1] for b in boxes], axis=0)

    def breakpoints(self):
        return sorted({p for comp in self.components for p in comp.breakpoints()})

    def mass(self):
        return float(sum(w * comp.mass() for w, comp in zip(self.weights, self.components)))


class GridDensity(_Density):
    """Tabulated density on a rectilinear grid; zero outside the knot range."""

    model_config = ConfigDict(frozen=True, arbitrary_types_allowed=True)

    closed_form: ClassVar[bool] = False

    kind: Literal["grid"] = "grid"
    axes: list[list[float]]
    values: np.ndarray
    interpolation: Literal["nearest", "linear"] = "linear"

    @field_validator("values", mode="before")
    @classmethod
    def _to_array(cls, values):
        return np.asarray(values, dtype=float)

    @field_serializer("values")
    def _dump_values(self, values):
        return values.tolist()

    @model_validator(mode="after")
    def _check(self):
        if not 1 <= len(self.axes) <= MAX_GRID_DIM:
            raise ValueError(f"grid: dimension {len(self.axes)} outside 1..{MAX_GRID_DIM}")
        for i, axis in enumerate(self.axes):
            if len(axis) < 2 or np.any(np.diff(axis) <= 0):
                raise ValueError(f"grid: axis {i} must have at least 2 strictly increasing knots")
        shape = tuple(len(axis) for axis in self.axes)
        if self.values.shape != shape:
            raise ValueError(f"grid: values shape {self.values.shape} does not match axes {shape}")
        if np.any(self.values < 0) or not np.all(np.isfinite(self.values)):
            raise ValueError("grid: values must be finite and non-negative")
        total = self.mass()
        if abs(total - 1.0) > GRID_MASS_TOL:
            raise ValueError(f"grid: total mass {total!r} is not 1")
        return self

    @property
    def dim(self):
        return len(self.axes)

    @cached_property
    def _knots(self) -> list[np.ndarray]:
        return [np.asarray(axis, dtype=float) for axis in self.axes]

    @cached_property
    def _interp(self):
        return RegularGridInterpolator(
            tuple(self._knots), self.values, method=self.interpolation, bounds_error=False, fill_value=0.0,
        )

    def pdf(self, points):
        return np.maximum(self._interp(points), 0.0)

    def mass(self):
        total = self.values
        for axis in self._knots:
            total = np.tensordot(_trapezoid_weights(axis), total, axes=(0, 0))
        return float(total)

    @cached_property
    def _cumulative(self) -> np.ndarray:
        x, v = self._knots[0], self.values
        return np.concatenate([[0.0], np.cumsum(np.diff(x) * (v[:-1] + v[1:]) / 2.0)])

    def cdf(self, x):
        if self.dim != 1:
            return super().cdf(x)
        knots, v, cum = self._knots[0], self.values, self._cumulative
        x = np.asarray(x, dtype=float)
        i = np.clip(np.searchsorted(knots, x, side="right") - 1, 0, len(knots) - 2)
        width = knots[i + 1] - knots[i]
        h = np.clip(x - knots[i], 0.0, width)
        if self.interpolation == "linear":
            partial = v[i] * h + (v[i + 1] - v[i]) * h * h / (2.0 * width)
        else:
            half = width / 2.0
            partial = np.where(h <= half, v[i] * h, v[i] * half + v[i + 1] * (h - half))
        out = cum[i] + partial
        return np.where(x < knots[0], 0.0, np.where(x >= knots[-1], cum[-1], out))

    def draw(self, rng, count):
        if self.dim > 2:
            raise UnsupportedOperation(f"grid: sampling unsupported for dimension {self.dim} > 2")
        # cell masses from corner averages, then uniform within the cell
        cells = self.values
        for axis_index in range(self.dim):
            cells = (np.take(cells, range(0, cells.shape[axis_index] - 1), axis=axis_index)
                     + np.take(cells, range(1, cells.shape[axis_index]), axis=axis_index)) / 2.0
        volumes = np.ones(cells.shape)
        for axis_index, axis in enumerate(self._knots):
            shape = [1] * self.dim
            shape[axis_index] = -1
            volumes = volumes * np.diff(axis).reshape(shape)
        probs = (cells * volumes).ravel()
        flat = rng.choice(probs.size, size=count, p=probs / probs.sum())
        idx = np.unravel_index(flat, cells.shape)
        out = np.empty((count, self.dim))
        for axis_index, axis in enumerate(self._knots):
            left = axis[idx[axis_index]]
            out[:, axis_index] = left + (axis[idx[axis_index] + 1] - left) * rng.random(count)
        return out

    def support(self):
        return np.array([a[0] for a in self._knots]), np.array([a[-1] for a in self._knots])


class Empirical(_Density):
    """A finite sample; supports sampling and empirical confusion only."""

    closed_form: ClassVar[bool] = False

    kind: Literal["empirical"] = "empirical"
    points: list[list[float]]

    @field_validator("points", mode="before")
    @classmethod
    def _lift_scalars(cls, points):
        return [[p] if isinstance(p, (int, float)) else p for p in points]

    @model_validator(mode="after")
    def _check(self):
        if not self.points or len({len(p) for p in self.points}) != 1:
            raise ValueError("empirical: points must be non-empty and share one dimension")
        return self

    @property
    def dim(self):
        return len(self.points[0])

    @property
    def has_cdf(self):
        return False

    @cached_property
    def _array(self) -> np.ndarray:
        return np.asarray(self.points, dtype=float)

    def pdf(self, points):
        raise UnsupportedOperation("empirical: unsupported evaluation (no pointwise density)")

    def draw(self, rng, count):
        return self._array[rng.integers(0, len(self._array), size=count)]

    def support(self):
        return self._array.min(axis=0), self._array.max(axis=0)

    def mass(self):
        return 1.0


Density = Annotated[
    Union[Gaussian1D, GaussianND, Weibull, UniformInterval, PiecewiseUniform,
          SmoothedPiecewiseUniform, Mixture, GridDensity, Empirical],
    Field(discriminator="kind"),
]
Mixture.model_rebuild()


class LabeledDensity(BaseModel):
    model_config = ConfigDict(frozen=True)

    label: str
    density: Density


class ClassModel(BaseModel):
    """Ordered classes with their conditional densities."""

    model_config = ConfigDict(frozen=True)

    classes: list[LabeledDensity]

    @model_validator(mode="after")
    def _check(self):
        if len(self.classes) < 2:
            raise ValueError(f"classes: need at least 2 classes, got {len(self.classes)}")
        labels = [entry.label for entry in self.classes]
        if len(set(labels)) != len(labels):
            raise ValueError(f"classes: labels must be unique, got {labels}")
        dims = {entry.density.dim for entry in self.classes}
        if len(dims) != 1:
            raise ValueError(f"classes: densities have different dimensions {sorted(dims)}")
        return self

    @classmethod
    def of(cls, *densities, labels: list[str] | None = None) -> "ClassModel":
        labels = labels or [f"C{k + 1}" for k in range(len(densities))]
        return cls(classes=[LabeledDensity(label=l, density=d) for l, d in zip(labels, densities)])

    @property
    def c(self) -> int:
        return len(self.classes)

    @property
    def dim(self) -> int:
        return self.classes[0].density.dim

    @property
    def densities(self) -> list:
        return [entry.density for entry in self.classes]

    @property
    def labels(self) -> list[str]:
        return [entry.label for entry in self.classes]

    def logpdf_matrix(self, points: np.ndarray) -> np.ndarray:
        return np.vstack([d.logpdf(points) for d in self.densities])

    def support(self) -> tuple[np.ndarray, np.ndarray]:
        boxes = [d.support() for d in self.densities]
        return np.min([b[0] for b in boxes], axis=0), np.max([b[1] for b in boxes], axis=0)

    def breakpoints(self) -> list[float]:
        return sorted({p for d in self.densities for p in d.breakpoints()})


class NoiseSpec(BaseModel):
    """Additive zero-mean Gaussian noise with covariance scale**2 * shape."""

    model_config = ConfigDict(frozen=True)

    scale: float = Field(0.0, ge=0)
    shape: list[list[float]] | None = None

    @field_validator("shape")
    @classmethod
    def _check_shape(cls, shape):
        if shape is None:
            return shape
        phi = np.asarray(shape, dtype=float)
        _check_covariance(phi, "noise.shape")
        top = np.linalg.eigvalsh(phi).max()
        if abs(top - 1.0) > EIGEN_TOL:
            raise ValueError(f"noise.shape: largest eigenvalue is {top!r}, expected 1")
        return shape

    @classmethod
    def from_variance(cls, varsigma2: float, shape: list[list[float]] | None = None) -> "NoiseSpec":
        if varsigma2 < 0:
            raise ConfigError(f"varsigma2: must be non-negative, got {varsigma2}")
        return cls(scale=math.sqrt(varsigma2), shape=shape)

    def shape_matrix(self, n: int) -> np.ndarray:
        if self.shape is None:
            return np.eye(n)
        phi = np.asarray(self.shape, dtype=float)
        if phi.shape != (n, n):
            raise ConfigError(f"noise.shape: expected {n}x{n}, got {phi.shape}")
        return phi

    def covariance(self, n: int) -> np.ndarray:
        return self.scale**2 * self.shape_matrix(n)


# --- Operations ---
def eval_density(d: _Density, r: Any) -> float | np.ndarray:
    """Pointwise p(r); a float for a single point, an array for a batch."""
    single = np.ndim(r) == 0 or (np.ndim(r) == 1 and d.dim > 1)
    values = d.pdf(as_points(r, d.dim))
    return float(values[0]) if single else values


def sample(d: _Density, seed: int, count: int) -> np.ndarray:
    if count < 0:
        raise ConfigError(f"count: must be non-negative, got {count}")
    if count == 0:
        return np.empty((0, d.dim))
    return d.draw(stream(seed), count)


def cdf(d: _Density, x: Any) -> np.ndarray:
    if not d.has_cdf:
        raise UnsupportedOperation(f"{d.kind}: no cumulative distribution function in dimension {d.dim}")
    return d.cdf(np.asarray(x, dtype=float))


def total_mass(d: _Density) -> float:
    return d.mass()


def support_window(d: _Density) -> tuple[np.ndarray, np.ndarray]:
    return d.support()


def convolve_gaussian(d: _Density, noise: NoiseSpec, settings: IntegrationSettings | None = None) -> _Density:
    """The density of r + eta with eta ~ N(0, noise.covariance)."""
    if noise.scale == 0:
        return d
    cov = noise.covariance(d.dim)
    match d:
        case Gaussian1D():
            return Gaussian1D(mean=d.mean, sd=math.sqrt(d.sd**2 + cov[0, 0]))
        case GaussianND():
            return GaussianND(mean=d.mean, covariance=(d.cov + cov).tolist())
        case UniformInterval():
            segments = [(d.lo, d.hi, 1.0 / (d.hi - d.lo))]
            return SmoothedPiecewiseUniform(segments=segments, sd=math.sqrt(cov[0, 0]))
        case PiecewiseUniform():
            return SmoothedPiecewiseUniform(segments=d.segments, sd=math.sqrt(cov[0, 0]))
        case SmoothedPiecewiseUniform():
            return SmoothedPiecewiseUniform(segments=d.segments, sd=math.sqrt(d.sd**2 + cov[0, 0]))
        case Mixture():
            return Mixture(weights=d.weights, components=[convolve_gaussian(c, noise, settings) for c in d.components])
        case Empirical():
            raise UnsupportedOperation("empirical: unsupported evaluation, cannot convolve")
    return _convolve_on_grid(d, cov, resolve(settings))


def _convolve_on_grid(d: _Density, cov: np.ndarray, settings: IntegrationSettings) -> GridDensity:
    n = d.dim
    if n > MAX_GRID_DIM:
        raise UnsupportedOperation(f"grid convolution unsupported for dimension {n} > {MAX_GRID_DIM}")
    knots = settings.grid_knots if n == 1 else settings.grid_knots_nd
    lo, hi = d.support()
    pad = WINDOW_SD * np.sqrt(np.diag(cov))
    axes = [np.linspace(a, b, knots) for a, b in zip(lo - pad, hi + pad)]
    steps = np.array([axis[1] - axis[0] for axis in axes])
    mesh = np.meshgrid(*axes, indexing="ij")
    values = d.pdf(np.column_stack([m.ravel() for m in mesh])).reshape(mesh[0].shape)

    half = np.minimum(np.ceil(pad / steps).astype(int), knots - 1)
    if n == 1:
        j = np.arange(-half[0], half[0] + 1) * steps[0]
        sd = math.sqrt(cov[0, 0])
        kernel = _interval_prob((j - steps[0] / 2) / sd, (j + steps[0] / 2) / sd)
    else:
        offsets = np.meshgrid(*[np.arange(-h, h + 1) * s for h, s in zip(half, steps)], indexing="ij")
        kernel = stats.multivariate_normal(np.zeros(n), cov).pdf(
            np.column_stack([o.ravel() for o in offsets])).reshape(offsets[0].shape)
    kernel = kernel / kernel.sum()
    smoothed = np.maximum(signal.fftconvolve(values, kernel, mode="same"), 0.0)

    total = smoothed
    for axis in axes:
        total = np.tensordot(_trapezoid_weights(axis), total, axes=(0, 0))
    logger.debug("grid convolution: %d knots per axis, raw mass %.12f", knots, float(total))
    return GridDensity(axes=[axis.tolist() for axis in axes], values=smoothed / float(total), interpolation="linear")
