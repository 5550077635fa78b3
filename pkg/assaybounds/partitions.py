"""Classification domains: rules that send every point r to exactly one class."""

import logging
import math
from typing import Annotated, Any, Callable, Literal, Union

import numpy as np
from pydantic import BaseModel, ConfigDict, Field, field_validator, model_validator

from assaybounds.densities import ClassModel, as_points, check_simplex
from assaybounds.errors import ConfigError

logger = logging.getLogger(__name__)

# Ratio states returned by ratio_state
ABOVE, BELOW, ON_BOUNDARY = 1, -1, 0


# --- Pydantic Models ---
class RatioThreshold(BaseModel):
    """Two-class rule: class 0 where p_0 > t p_1, class 1 where p_0 < t p_1.

    Points with p_0 = t p_1 (up to ``log_tol`` in log space, or both
    densities zero) go to ``boundary_to``, or, in one dimension, are split at
    ``boundary_cut``: boundary points r <= boundary_cut go to class 0.
    """

    model_config = ConfigDict(frozen=True)

    kind: Literal["ratio_threshold"] = "ratio_threshold"
    t: float = Field(ge=0, allow_inf_nan=False)
    boundary_to: int = Field(0, ge=0, le=1)
    log_tol: float = Field(1e-9, ge=0)
    boundary_cut: float | None = None


class CutPoints1D(BaseModel):
    """One-dimensional rule with increasing cuts; interval i goes to order[i].

    Interval i is (cuts[i-1], cuts[i]], so a point equal to a cut belongs to
    the interval on its left.
    """

    model_config = ConfigDict(frozen=True)

    kind: Literal["cutpoints"] = "cutpoints"
    cuts: list[float]
    order: list[int] | None = None

    @model_validator(mode="after")
    def _check(self):
        if not self.cuts:
            raise ValueError("cuts: at least one cut point is required")
        if np.any(np.diff(self.cuts) <= 0) or not np.all(np.isfinite(self.cuts)):
            raise ValueError(f"cuts: must be finite and strictly increasing, got {self.cuts}")
        if self.order is not None and sorted(self.order) != list(range(len(self.cuts) + 1)):
            raise ValueError(f"order: must be a permutation of 0..{len(self.cuts)}, got {self.order}")
        return self

    @property
    def class_order(self) -> list[int]:
        return self.order if self.order is not None else list(range(len(self.cuts) + 1))

    @property
    def edges(self) -> list[float]:
        return [-math.inf, *self.cuts, math.inf]


class Bayes(BaseModel):
    """Maximum a-posteriori rule for prevalence q; ties go to the lowest index."""

    model_config = ConfigDict(frozen=True)

    kind: Literal["bayes"] = "bayes"
    q: list[float]

    @field_validator("q")
    @classmethod
    def _check_q(cls, q):
        check_simplex(q, "q")
        return q

    def as_threshold(self) -> RatioThreshold:
        if len(self.q) != 2:
            raise ConfigError(f"bayes: ratio threshold form needs 2 classes, got {len(self.q)}")
        if self.q[0] == 0:
            raise ConfigError("bayes: q[0] = 0 has no finite ratio threshold")
        return RatioThreshold(t=threshold_for_prevalence(self.q[0]))


class Predicate(BaseModel):
    """Arbitrary rule given as a callable from one point to a class index."""

    model_config = ConfigDict(frozen=True, arbitrary_types_allowed=True)

    kind: Literal["predicate"] = "predicate"
    assign_fn: Callable[[np.ndarray], int]


Partition = Annotated[Union[RatioThreshold, CutPoints1D, Bayes], Field(discriminator="kind")]
AnyPartition = RatioThreshold | CutPoints1D | Bayes | Predicate


# --- Helper Functions ---
def check_compatible(part: AnyPartition, model: ClassModel) -> None:
    match part:
        case RatioThreshold():
            if model.c != 2:
                raise ConfigError(f"partition: ratio_threshold needs 2 classes, model has {model.c}")
            if part.boundary_cut is not None and model.dim != 1:
                raise ConfigError("partition: boundary_cut needs a one-dimensional model")
        case CutPoints1D():
            if model.dim != 1:
                raise ConfigError(f"partition: cutpoints needs a one-dimensional model, got dimension {model.dim}")
            if len(part.cuts) != model.c - 1:
                raise ConfigError(f"partition: {len(part.cuts)} cuts do not give {model.c} classes")
        case Bayes():
            if len(part.q) != model.c:
                raise ConfigError(f"partition: bayes q has {len(part.q)} entries, model has {model.c} classes")


def ratio_state(model: ClassModel, points: np.ndarray, t: float, log_tol: float = 1e-9) -> np.ndarray:
    """Sign of log p_0 - log p_1 - log t per point; ON_BOUNDARY within log_tol or where undefined."""
    l1 = model.densities[0].logpdf(points)
    l2 = model.densities[1].logpdf(points)
    with np.errstate(divide="ignore", invalid="ignore"):
        diff = l1 - l2 - np.log(t)
    state = np.where(diff > log_tol, ABOVE, np.where(diff < -log_tol, BELOW, ON_BOUNDARY))
    state[np.isnan(diff)] = ON_BOUNDARY
    return state


# --- Operations ---
def assign_many(part: AnyPartition, model: ClassModel, points: Any) -> np.ndarray:
    """Class index for each row of ``points``."""
    check_compatible(part, model)
    pts = as_points(points, model.dim)
    match part:
        case RatioThreshold():
            state = ratio_state(model, pts, part.t, part.log_tol)
            if part.boundary_cut is None:
                on_boundary = np.full(len(pts), part.boundary_to)
            else:
                on_boundary = np.where(pts[:, 0] <= part.boundary_cut, 0, 1)
            return np.where(state == ABOVE, 0, np.where(state == BELOW, 1, on_boundary))
        case CutPoints1D():
            idx = np.searchsorted(np.asarray(part.cuts), pts[:, 0], side="left")
            return np.asarray(part.class_order)[idx]
        case Bayes():
            with np.errstate(divide="ignore"):
                scores = np.log(np.asarray(part.q))[:, None] + model.logpdf_matrix(pts)
            return np.argmax(scores, axis=0)
        case Predicate():
            labels = np.fromiter((part.assign_fn(p) for p in pts), dtype=int, count=len(pts))
            bad = (labels < 0) | (labels >= model.c)
            if np.any(bad):
                raise ConfigError(f"predicate: returned class {labels[bad][0]} outside 0..{model.c - 1}")
            return labels
    raise ConfigError(f"partition: unknown partition type {type(part).__name__}")


def assign(part: AnyPartition, model: ClassModel, r: Any) -> int:
    pts = as_points(r, model.dim)
    if len(pts) != 1:
        raise ConfigError(f"assign: expected a single point, got {len(pts)}")
    return int(assign_many(part, model, pts)[0])


def bayes_partition(model: ClassModel, q: Any) -> Bayes:
    q = check_simplex(q, "q", size=model.c)
    return Bayes(q=q.tolist())


def threshold_for_prevalence(q1: float) -> float:
    """Threshold t = (1 - q1) / q1 at which the ratio rule equals Bayes for (q1, 1 - q1)."""
    if not 0 < q1 <= 1:
        raise ConfigError(f"q1: must be in (0, 1], got {q1}")
    return (1.0 - q1) / q1


def prevalence_for_threshold(t: float) -> float:
    if not (t >= 0 and math.isfinite(t)):
        raise ConfigError(f"t: must be finite and non-negative, got {t}")
    return 1.0 / (1.0 + t)
