"""Experiment config documents and the helpers every command shares."""

import argparse
import logging
from functools import cached_property
from pathlib import Path
from typing import Literal

import numpy as np
from pydantic import BaseModel, ConfigDict, Field, model_validator

from assaybounds.confusion import ConfusionMatrix, confusion_matrix
from assaybounds.densities import ClassModel, LabeledDensity, NoiseSpec
from assaybounds.errors import ConfigError
from assaybounds.partitions import Partition, check_compatible
from assaybounds.settings import IntegrationSettings

logger = logging.getLogger(__name__)


# --- Pydantic Models ---
class _Block(BaseModel):
    model_config = ConfigDict(frozen=True, extra="forbid")


class BoundsBlock(_Block):
    q: list[float] | None = None
    s: int = Field(100, ge=1)
    assume_symmetric: bool | None = None


class SimulateBlock(_Block):
    q: list[float] | None = None
    q_grid: list[list[float]] | None = None
    s: int = Field(100, ge=1)
    replicates: int = Field(10_000, ge=2)
    seed: int = Field(0, ge=0, lt=2**64)
    weight_matrix: list[list[float]] | None = None
    project: bool = False
    t_grid: list[float] | None = None


class NoiseBlock(_Block):
    shape: list[list[float]] | None = None
    varsigma2: float | None = Field(None, ge=0)
    grid: list[float] | None = None
    warm_start: bool = False

    @property
    def spec(self) -> NoiseSpec:
        return NoiseSpec(scale=0.0, shape=self.shape)


class SweepBlock(_Block):
    t_grid: list[float] | None = None


class BalanceBlock(_Block):
    q_init: list[float] | None = None
    max_iters: int = Field(200, ge=1)
    tol: float = Field(1e-6, gt=0)
    trials: int = Field(50, ge=0)
    seed: int = Field(0, ge=0, lt=2**64)
    verify_tol: float = Field(1e-4, ge=0)


class CutsBlock(_Block):
    init_cuts: list[float] | None = None
    tol: float = Field(1e-12, ge=0)


class ExperimentConfig(_Block):
    """One experiment: the class model plus per-command blocks."""

    version: Literal[1]
    classes: list[LabeledDensity]
    partition: Partition | None = None
    confusion_matrix: list[list[float]] | None = None
    noise: NoiseBlock | None = None
    integration: IntegrationSettings = IntegrationSettings()
    bounds: BoundsBlock = BoundsBlock()
    simulate: SimulateBlock = SimulateBlock()
    sweep: SweepBlock = SweepBlock()
    balance: BalanceBlock = BalanceBlock()
    cuts: CutsBlock = CutsBlock()

    @model_validator(mode="after")
    def _consistent(self):
        model = ClassModel(classes=self.classes)
        c = model.c
        if self.partition is not None:
            check_compatible(self.partition, model)
        if self.confusion_matrix is not None:
            shape = np.asarray(self.confusion_matrix, dtype=float).shape
            if shape != (c, c):
                raise ValueError(f"confusion_matrix: expected {c}x{c}, got {shape}")
        for name, q in (("bounds.q", self.bounds.q), ("simulate.q", self.simulate.q),
                        ("balance.q_init", self.balance.q_init), *(
                            (f"simulate.q_grid[{i}]", row) for i, row in enumerate(self.simulate.q_grid or []))):
            if q is not None and len(q) != c:
                raise ValueError(f"{name}: expected {c} entries, got {len(q)}")
        if self.cuts.init_cuts is not None and len(self.cuts.init_cuts) != c - 1:
            raise ValueError(f"cuts.init_cuts: expected {c - 1} cut points, got {len(self.cuts.init_cuts)}")
        if self.noise is not None and self.noise.shape is not None:
            self.noise.spec.shape_matrix(model.dim)
        return self

    @cached_property
    def model(self) -> ClassModel:
        return ClassModel(classes=self.classes)


# --- Helper Functions ---
def load_config(path: str) -> ExperimentConfig:
    try:
        text = Path(path).read_text()
    except OSError as exc:
        raise ConfigError(f"config: cannot read {path} ({exc.strerror})")
    return ExperimentConfig.model_validate_json(text)


def apply_overrides(config: ExperimentConfig, args: argparse.Namespace) -> ExperimentConfig:
    """Fold --seed and --threads into the config blocks."""
    integration, simulate, balance = {}, {}, {}
    if args.seed is not None:
        integration["seed"] = simulate["seed"] = balance["seed"] = args.seed
    if args.threads is not None:
        integration["threads"] = args.threads
    if not integration:
        return config
    return config.model_copy(update={
        "integration": config.integration.model_copy(update=integration),
        "simulate": config.simulate.model_copy(update=simulate),
        "balance": config.balance.model_copy(update=balance),
    })


def load_experiment(args: argparse.Namespace) -> ExperimentConfig:
    config = apply_overrides(load_config(args.config), args)
    logger.debug("loaded %s with %d classes", args.config, config.model.c)
    return config


def require_partition(config: ExperimentConfig):
    if config.partition is None:
        raise ConfigError("partition: required for this command")
    return config.partition


def config_confusion(config: ExperimentConfig) -> ConfusionMatrix:
    """The configured confusion matrix, or the one induced by the configured partition."""
    if config.confusion_matrix is not None:
        return ConfusionMatrix.from_array(config.confusion_matrix, column_tolerance=1e-9)
    return confusion_matrix(config.model, require_partition(config), config.integration)


def parse_floats(text: str) -> list[float]:
    try:
        return [float(part) for part in text.split(",")]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated numbers, got {text!r}")


def parse_range(text: str) -> list[float]:
    """'lo:hi:n' -> n evenly spaced values from lo to hi inclusive."""
    try:
        lo, hi, n = text.split(":")
        lo, hi, n = float(lo), float(hi), int(n)
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected lo:hi:n, got {text!r}")
    if n < 1 or hi < lo:
        raise argparse.ArgumentTypeError(f"expected lo <= hi and n >= 1, got {text!r}")
    return np.linspace(lo, hi, n).tolist()


def dump(model: BaseModel) -> dict:
    return model.model_dump(mode="json")
