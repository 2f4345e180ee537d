"""
Configuration module for Tomokit.
Pydantic models for noise, solver, grid and benchmark settings, plus JSON
load/write helpers.
"""

import json
from enum import Enum
from pathlib import Path
from typing import Literal, Type, TypeVar, Union

import numpy as np
from pydantic import BaseModel, Field, model_validator


# --- Config Models ---

class NoiseConfig(BaseModel):
    """State-preparation and image noise parameters; keys mirror the defaults table."""

    zeta: float = Field(0.2, ge=0.0, le=1.0)
    nth_conv: float = Field(2.0, ge=0.0)
    rotation_deg: float = 20.0
    translate_xy: tuple[float, float] = (0.1, 0.1)
    additive_sigma: float = Field(0.01, ge=0.0)
    salt_prop: float = Field(0.0, ge=0.0, le=1.0)
    pepper_prop: float = Field(0.1, ge=0.0, le=1.0)
    seed: int = Field(0, ge=0)

    @model_validator(mode="after")
    def _check_proportions(self):
        if self.salt_prop + self.pepper_prop > 1.0:
            raise ValueError(
                f"salt_prop + pepper_prop = {self.salt_prop + self.pepper_prop} exceeds 1"
            )
        if any(abs(t) > 1.0 for t in self.translate_xy):
            raise ValueError(f"translate_xy fractions must lie in [−1, 1], got {self.translate_xy}")
        return self

    @classmethod
    def zero(cls, seed: int = 0) -> "NoiseConfig":
        """A config whose every stage is the identity."""
        return cls(
            zeta=0.0, nth_conv=0.0, rotation_deg=0.0, translate_xy=(0.0, 0.0),
            additive_sigma=0.0, salt_prop=0.0, pepper_prop=0.0, seed=seed,
        )


class OptimizerKind(str, Enum):
    ADAM = "adam"
    SGD = "sgd"


class InitKind(str, Enum):
    MAXIMALLY_MIXED = "maximally_mixed"
    WARM_START = "warm_start"


class MLEConfig(BaseModel):
    max_epochs: int = Field(1000, ge=0)
    lr: float = Field(0.01, gt=0.0)
    optimizer: OptimizerKind = OptimizerKind.ADAM
    beta1: float = Field(0.9, ge=0.0, lt=1.0)
    beta2: float = Field(0.999, ge=0.0, lt=1.0)
    eps: float = Field(1e-8, gt=0.0)
    floor: float = Field(1e-12, gt=0.0)
    init: InitKind = InitKind.MAXIMALLY_MIXED
    record_every: int = Field(10, ge=1)
    tol_grad: float = Field(1e-7, gt=0.0)
    seed: int = Field(0, ge=0)


class GANConfig(BaseModel):
    epochs: int = Field(1000, ge=0)
    latent_source: Literal["measurement_vector"] = "measurement_vector"
    gen_layers: list[int] = Field(default_factory=lambda: [512])
    disc_layers: list[int] = Field(default_factory=lambda: [128, 64, 32, 1])
    lr_gen: float = Field(0.001, gt=0.0)
    lr_disc: float = Field(0.001, gt=0.0)
    beta1: float = Field(0.9, ge=0.0, lt=1.0)
    beta2: float = Field(0.999, ge=0.0, lt=1.0)
    eps: float = Field(1e-8, gt=0.0)
    l1_weight: float = Field(0.0, ge=0.0)
    floor: float = Field(1e-12, gt=0.0)
    record_every: int = Field(10, ge=1)
    seed: int = Field(0, ge=0)

    @model_validator(mode="after")
    def _check_layers(self):
        if not self.disc_layers or self.disc_layers[-1] != 1:
            raise ValueError(f"final discriminator layer must have width 1, got {self.disc_layers}")
        if any(w < 1 for w in self.gen_layers + self.disc_layers):
            raise ValueError("layer widths must be ≥ 1")
        return self


class GridConfig(BaseModel):
    """Uniform phase-space grid; points per axis."""

    x_range: tuple[float, float] = (-5.0, 5.0)
    p_range: tuple[float, float] = (-5.0, 5.0)
    points: int = Field(20, ge=2)

    @model_validator(mode="after")
    def _check_ranges(self):
        for name, (low, high) in (("x_range", self.x_range), ("p_range", self.p_range)):
            if not high > low:
                raise ValueError(f"{name} must be increasing, got ({low}, {high})")
        return self

    def xgrid(self) -> np.ndarray:
        return np.linspace(self.x_range[0], self.x_range[1], self.points)

    def pgrid(self) -> np.ndarray:
        return np.linspace(self.p_range[0], self.p_range[1], self.points)


class BenchmarkConfig(BaseModel):
    """Scenario and protocol for the MLE-vs-GAN comparison."""

    family: str = "num"
    params: dict[str, Union[int, float, str]] = Field(default_factory=lambda: {"name": "M2"})
    dim: int = Field(32, ge=2)
    zeta: float = Field(0.2, ge=0.0, le=1.0)
    runs: int = Field(5, ge=1)
    epochs: int = Field(1000, ge=1)
    record_every: int = Field(10, ge=1)
    seed: int = Field(0, ge=0)
    threshold: float = Field(0.5, ge=0.0, le=1.0)
    grid: GridConfig = Field(default_factory=GridConfig)
    mle: MLEConfig = Field(default_factory=MLEConfig)
    gan: GANConfig = Field(default_factory=GANConfig)


# --- Constants ---

DATA_DIR = Path(__file__).resolve().parent / "data"
NOISE_DEFAULTS_FILE = "noise_defaults.json"

ModelT = TypeVar("ModelT", bound=BaseModel)


# --- Helper Functions ---

def write_config(path: Path, config: BaseModel) -> None:
    """Save a config model as indented UTF-8 JSON."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(
        json.dumps(config.model_dump(mode="json"), indent=2) + "\n",
        encoding="utf-8",
    )


def load_config(path: Path, model_cls: Type[ModelT]) -> ModelT:
    """Load a config model from a JSON file."""
    path = Path(path)
    if not path.exists():
        raise FileNotFoundError(f"No config file found at {path}.")
    data = json.loads(path.read_text(encoding="utf-8"))
    return model_cls(**data)


def default_noise_config() -> NoiseConfig:
    """The shipped default noise parameters."""
    return load_config(DATA_DIR / NOISE_DEFAULTS_FILE, NoiseConfig)
