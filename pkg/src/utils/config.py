"""Configuration management using Pydantic.

Two layers live here:

* ``Settings`` - application settings (log level, device, directories),
  read from ``config.yaml`` and overridable through ``SAR2OPT_*``
  environment variables.
* ``TrainConfig`` - the run configuration consumed by teacher training,
  distillation, evaluation and benchmarking. Built from a named preset,
  an optional JSON/YAML file and dotted CLI overrides.
"""
from __future__ import annotations

import copy
from pathlib import Path
from typing import Any, Literal

import yaml
from pydantic import BaseModel, Field, ValidationError as PydanticValidationError, model_validator
from pydantic_settings import BaseSettings, PydanticBaseSettingsSource, SettingsConfigDict

from .errors import ConfigError


# ---------------------------------------------------------------------------
# Application settings
# ---------------------------------------------------------------------------

class PathsConfig(BaseModel):
    data_dir: Path = Path("data")
    runs_dir: Path = Path("runs")
    logs_dir: Path = Path("runs/logs")
    plots_dir: Path = Path("runs/plots")


class Settings(BaseSettings):
    """Main application settings."""
    app_name: str = "SAR-to-Optical Consistency Distillation"
    debug: bool = False
    log_level: Literal["DEBUG", "INFO", "WARNING", "ERROR"] = "INFO"
    device: str = "auto"
    default_preset: Literal["toy", "full"] = "toy"

    paths: PathsConfig = PathsConfig()

    model_config = SettingsConfigDict(
        env_prefix="SAR2OPT_",
        env_file=".env",
        env_nested_delimiter="__",
        extra="ignore",
    )

    @classmethod
    def settings_customise_sources(
        cls,
        settings_cls: type[BaseSettings],
        init_settings: PydanticBaseSettingsSource,
        env_settings: PydanticBaseSettingsSource,
        dotenv_settings: PydanticBaseSettingsSource,
        file_secret_settings: PydanticBaseSettingsSource,
    ) -> tuple[PydanticBaseSettingsSource, ...]:
        # Environment beats the YAML file, which arrives as init kwargs
        return env_settings, dotenv_settings, init_settings, file_secret_settings

    @classmethod
    def from_yaml(cls, path: str = "config.yaml") -> "Settings":
        """Load settings from YAML file."""
        config_path = Path(path)
        if config_path.exists():
            with open(config_path) as f:
                data = yaml.safe_load(f) or {}
            flat = {}
            if "app" in data:
                flat["app_name"] = data["app"].get("name", cls.model_fields["app_name"].default)
                flat["debug"] = data["app"].get("debug", False)
                flat["log_level"] = data["app"].get("log_level", "INFO")
                flat["device"] = data["app"].get("device", "auto")
            if "paths" in data:
                flat["paths"] = PathsConfig(**data["paths"])
            if "training" in data:
                flat["default_preset"] = data["training"].get("preset", "toy")
            return cls(**flat)
        return cls()


# Global settings instance
settings = Settings.from_yaml()


def ensure_directories():
    """Create necessary directories."""
    settings.paths.data_dir.mkdir(parents=True, exist_ok=True)
    settings.paths.runs_dir.mkdir(parents=True, exist_ok=True)
    settings.paths.logs_dir.mkdir(parents=True, exist_ok=True)
    settings.paths.plots_dir.mkdir(parents=True, exist_ok=True)


def resolve_device(name: str | None = None):
    """Map a device setting ("auto", "cpu", "cuda", "cuda:1", ...) to a torch device."""
    import torch

    name = name or settings.device
    if name == "auto":
        return torch.device("cuda" if torch.cuda.is_available() else "cpu")
    return torch.device(name)


# ---------------------------------------------------------------------------
# Run configuration
# ---------------------------------------------------------------------------

class ScheduleConfig(BaseModel):
    T: int = Field(1000, ge=2)
    beta_min: float = Field(1e-4, gt=0, lt=1)
    beta_max: float = Field(0.02, gt=0, lt=1)

    @model_validator(mode="after")
    def _ordered(self) -> "ScheduleConfig":
        if self.beta_min > self.beta_max:
            raise ValueError(f"beta_min {self.beta_min} exceeds beta_max {self.beta_max}")
        return self


class DenoiserConfig(BaseModel):
    """Shape of the conditional noise-prediction network."""
    target_channels: int = Field(3, ge=1)
    condition_channels: int = Field(1, ge=1)
    base_width: int = Field(64, ge=1)
    depth: int = Field(3, ge=1)
    time_embed_dim: int | None = Field(None, ge=1)
    tile_size: int = Field(64, ge=1)

    @model_validator(mode="after")
    def _default_time_dim(self) -> "DenoiserConfig":
        if self.time_embed_dim is None:
            self.time_embed_dim = 4 * self.base_width
        return self


class ConsistencyParams(BaseModel):
    """Consistency-function parameters (boundary step, data scale, coefficient family)."""
    t_min: int = Field(1, ge=1)
    sigma_data: float = Field(0.5, gt=0)
    skip_form: Literal["rational", "shifted"] = "rational"


class OptimizerConfig(BaseModel):
    """AdamW with linear warmup to a constant peak rate."""
    lr: float = Field(8e-6, gt=0)
    betas: tuple[float, float] = (0.9, 0.999)
    weight_decay: float = Field(0.0, ge=0)
    warmup: int = Field(1000, ge=0)
    grad_clip: float | None = Field(1.0, gt=0)


class TeacherConfig(BaseModel):
    iterations: int = Field(50000, ge=1)
    optimizer: OptimizerConfig = OptimizerConfig(lr=1e-4, warmup=1000, grad_clip=None)
    save_every: int = Field(5000, ge=1)
    log_every: int = Field(100, ge=1)


class DistillConfig(BaseModel):
    iterations: int = Field(50000, ge=1)
    lambda_adv: float = Field(0.5, ge=0)
    adversarial: bool = True
    skip: int = Field(1, ge=0)
    ema: bool = False
    ema_decay: float = Field(0.999, ge=0, lt=1)
    renoise: Literal["forward", "literal"] = "forward"
    student_optimizer: OptimizerConfig = OptimizerConfig()
    disc_optimizer: OptimizerConfig = OptimizerConfig()
    save_every: int = Field(5000, ge=1)
    log_every: int = Field(100, ge=1)
    grid_every: int = Field(1000, ge=1)
    grid_evals: int = Field(8, ge=1)
    gap_pairs: int = Field(8, ge=1)


class DataConfig(BaseModel):
    train_manifest: Path | None = None
    test_manifest: Path | None = None
    augment: bool = True


class EvalConfig(BaseModel):
    n_evals: list[int] = [1, 2, 4, 8, 16]
    seed: int = 1234
    batch_size: int = Field(32, ge=1)
    embedder_seed: int = 0
    grid_rows: int = Field(4, ge=1)


class TrainConfig(BaseModel):
    """Fully resolved run configuration."""
    preset: str = "full"
    schedule: ScheduleConfig = ScheduleConfig()
    denoiser: DenoiserConfig = DenoiserConfig()
    consistency: ConsistencyParams = ConsistencyParams()
    teacher: TeacherConfig = TeacherConfig()
    distill: DistillConfig = DistillConfig()
    data: DataConfig = DataConfig()
    evaluation: EvalConfig = EvalConfig()
    batch_size: int = Field(16, ge=1)
    seed: int = 0
    output_dir: Path = Path("runs/default")

    @model_validator(mode="after")
    def _cross_checks(self) -> "TrainConfig":
        if self.teacher.optimizer.warmup > self.teacher.iterations:
            raise ValueError("teacher warmup exceeds teacher iterations")
        if self.distill.student_optimizer.warmup > self.distill.iterations:
            raise ValueError("student warmup exceeds distillation iterations")
        if self.distill.disc_optimizer.warmup > self.distill.iterations:
            raise ValueError("discriminator warmup exceeds distillation iterations")
        if self.denoiser.tile_size % (2 ** self.denoiser.depth) != 0:
            raise ValueError(
                f"tile_size {self.denoiser.tile_size} not divisible by 2^depth={2 ** self.denoiser.depth}"
            )
        if self.consistency.t_min >= self.schedule.T:
            raise ValueError("t_min must be smaller than T")
        return self

    @property
    def effective_lambda_adv(self) -> float:
        return self.distill.lambda_adv if self.distill.adversarial else 0.0


PRESETS: dict[str, dict[str, Any]] = {
    "full": {"denoiser": {"tile_size": 256}},
    "toy": {
        "schedule": {"T": 200},
        "denoiser": {"base_width": 32, "depth": 3, "tile_size": 64},
        "teacher": {
            "iterations": 5000,
            "optimizer": {"lr": 2e-4, "warmup": 200, "grad_clip": 1.0},
            "save_every": 1000,
            "log_every": 50,
        },
        "distill": {
            "iterations": 2000,
            "student_optimizer": {"lr": 5e-5, "warmup": 100},
            "disc_optimizer": {"lr": 5e-5, "warmup": 100},
            "save_every": 500,
            "log_every": 20,
            "grid_every": 500,
        },
        "output_dir": "runs/toy",
    },
}


def deep_merge(base: dict, update: dict) -> dict:
    """Recursively merge ``update`` into a copy of ``base``."""
    merged = copy.deepcopy(base)
    for key, value in update.items():
        if isinstance(value, dict) and isinstance(merged.get(key), dict):
            merged[key] = deep_merge(merged[key], value)
        else:
            merged[key] = copy.deepcopy(value)
    return merged


def dotted_to_nested(overrides: dict[str, Any]) -> dict:
    """Turn {"distill.lambda_adv": 0.0} into {"distill": {"lambda_adv": 0.0}}."""
    nested: dict = {}
    for dotted, value in overrides.items():
        node = nested
        *parents, leaf = dotted.split(".")
        for part in parents:
            node = node.setdefault(part, {})
        node[leaf] = value
    return nested


def load_train_config(
    path: str | Path | None = None,
    preset: str | None = None,
    overrides: dict[str, Any] | None = None,
) -> TrainConfig:
    """
    Build a TrainConfig from preset, file and overrides (later wins).

    The file may be JSON or YAML; JSON is read by the YAML loader.

    Raises:
        ConfigError: unknown preset, unreadable file, or invalid values.
    """
    file_data: dict = {}
    if path is not None:
        config_path = Path(path)
        if not config_path.exists():
            raise ConfigError(f"Config file not found: {config_path}")
        with open(config_path) as f:
            file_data = yaml.safe_load(f) or {}
        if not isinstance(file_data, dict):
            raise ConfigError(f"Config file {config_path} must hold a mapping")

    preset = preset or file_data.get("preset") or settings.default_preset
    if preset not in PRESETS:
        raise ConfigError(f"Unknown preset '{preset}'. Choose from {sorted(PRESETS)}")

    merged = deep_merge(PRESETS[preset], file_data)
    merged = deep_merge(merged, dotted_to_nested(overrides or {}))
    merged["preset"] = preset
    try:
        return TrainConfig(**merged)
    except PydanticValidationError as e:
        raise ConfigError(str(e)) from e
