import os
from typing import Literal

from dotenv import load_dotenv
from pydantic import BaseModel, ConfigDict, Field

# --- Configuration ---
load_dotenv()
DEFAULT_THREADS = int(os.getenv("ASSAY_THREADS", os.cpu_count() or 1))
DEFAULT_MC_SAMPLES = int(os.getenv("ASSAY_MC_SAMPLES", 10**6))
DEFAULT_LOG_LEVEL = os.getenv("ASSAY_LOG_LEVEL", "WARNING")

MAX_DENSE_CLASSES = 50


# --- Pydantic Models ---
class IntegrationSettings(BaseModel):
    """Knobs shared by every integrator and solver."""

    model_config = ConfigDict(frozen=True, extra="forbid")

    method: Literal["auto", "closed-form", "quadrature", "monte-carlo"] = "auto"
    mc_samples: int = Field(DEFAULT_MC_SAMPLES, ge=1)
    seed: int = Field(0, ge=0, lt=2**64)
    quad_tol: float = Field(1e-10, gt=0)
    label_grid: int = Field(4097, ge=16)
    grid_knots: int = Field(2048, ge=16)
    grid_knots_nd: int = Field(256, ge=16)
    threads: int = Field(DEFAULT_THREADS, ge=1)


DEFAULT_SETTINGS = IntegrationSettings()


def resolve(settings: IntegrationSettings | None) -> IntegrationSettings:
    return DEFAULT_SETTINGS if settings is None else settings
