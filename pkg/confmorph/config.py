"""
Configuration management module for confmorph.

Two layers of configuration live here. ``MorphSettings`` is read from the
environment (``MORPH_`` prefix, optional ``.env`` file) and carries the
process-wide knobs: log level and worker count. ``PipelineConfig`` is one JSON
document describing a morphing run: keyframe meshes and times, landmark and
feature files per adjacent keyframe pair, numerical settings for every stage and
the frames to emit. Relative paths in the JSON resolve against the directory of
the config file.
"""

import json
from pathlib import Path
from typing import Literal

import pydantic
from pydantic import BaseModel, Field, field_validator, model_validator
from pydantic_settings import BaseSettings as _BaseSettings
from pydantic_settings import SettingsConfigDict

from confmorph.misc.exceptions import ConfigurationError


class BaseSettings(_BaseSettings):
    """
    Base settings class with common configuration for all environment-based settings.

    Provides automatic loading from .env file with UTF-8 encoding and ignores
    extra fields not defined in the model.
    """

    model_config = SettingsConfigDict(
        extra="ignore",
        env_file=".env",
        env_file_encoding="utf-8",
    )


class MorphSettings(BaseSettings, env_prefix="MORPH_"):
    """
    Process-wide settings.

    All settings are prefixed with 'MORPH_' in environment variables.
    """

    log: Literal["error", "info", "debug"] = "info"  # MORPH_LOG
    jobs: int = Field(default=1, ge=1)  # worker pool size for frame reconstruction


class QiemSettings(BaseModel):
    """Heat-flow settings for the spherical conformal map."""

    dt: float | None = Field(default=None, gt=0)  # None: mean squared edge length
    dt_max: float = Field(default=10.0, gt=0)
    tol: float = Field(default=1e-7, gt=0)
    max_iter: int = Field(default=500, ge=1)
    max_halvings: int = Field(default=20, ge=0)


class MatchingSettings(BaseModel):
    grid: int = Field(default=5, ge=2)
    epsilon: float = Field(default=1e-8, ge=0)
    compare: bool = True  # also evaluate / reconstruct the Möbius-only variant
    quadrature: Literal["midpoint", "edge_midpoint"] = "midpoint"


class GeodesicSettings(BaseModel):
    max_iter: int = Field(default=30, ge=1)
    tol: float = Field(default=1e-6, gt=0)


class ReconstructionSettings(BaseModel):
    tol: float | None = Field(default=None, gt=0)  # None: 1e-7 times boundary diameter
    max_iter: int = Field(default=100, ge=1)


class KeyframeConfig(BaseModel):
    """A keyframe mesh at a given time, optionally with a precomputed parameterization."""

    mesh: Path
    time: float
    param: Path | None = None


class PairConfig(BaseModel):
    """Landmarks and frame features linking keyframe ``i`` to keyframe ``i + 1``."""

    landmarks: Path
    features: Path


class ReferenceConfig(BaseModel):
    """Ground-truth surface for a frame time, sharing the unified connectivity."""

    mesh: Path
    time: float


class PipelineConfig(BaseModel):
    """
    Complete description of a morphing run.

    Keyframe times are strictly increasing and ``pairs`` has one entry per
    adjacent keyframe pair.
    """

    keyframes: list[KeyframeConfig] = Field(min_length=2)
    pairs: list[PairConfig]
    output: Path = Path("out")
    frames: list[float] = Field(default_factory=list)
    references: list[ReferenceConfig] = Field(default_factory=list)
    qiem: QiemSettings = Field(default_factory=QiemSettings)
    matching: MatchingSettings = Field(default_factory=MatchingSettings)
    geodesic: GeodesicSettings = Field(default_factory=GeodesicSettings)
    reconstruction: ReconstructionSettings = Field(default_factory=ReconstructionSettings)

    @field_validator("keyframes")
    @classmethod
    def _times_increasing(cls, keyframes: list[KeyframeConfig]) -> list[KeyframeConfig]:
        times = [k.time for k in keyframes]
        if any(b <= a for a, b in zip(times, times[1:], strict=False)):
            raise ValueError(f"keyframe times must be strictly increasing, got {times}")
        return keyframes

    @model_validator(mode="after")
    def _one_pair_per_gap(self) -> "PipelineConfig":
        if len(self.pairs) != len(self.keyframes) - 1:
            raise ValueError(
                f"expected {len(self.keyframes) - 1} pair entries for "
                f"{len(self.keyframes)} keyframes, got {len(self.pairs)}"
            )
        return self

    @property
    def times(self) -> list[float]:
        return [k.time for k in self.keyframes]

    def input_files(self) -> list[tuple[str, Path]]:
        """Every file the run reads, keyed by its location in the document."""
        files: list[tuple[str, Path]] = []
        for i, k in enumerate(self.keyframes):
            files.append((f"keyframes.{i}.mesh", k.mesh))
            if k.param is not None:
                files.append((f"keyframes.{i}.param", k.param))
        for i, p in enumerate(self.pairs):
            files += [(f"pairs.{i}.landmarks", p.landmarks), (f"pairs.{i}.features", p.features)]
        files += [(f"references.{i}.mesh", r.mesh) for i, r in enumerate(self.references)]
        return files

    def resolved(self, base: Path) -> "PipelineConfig":
        """Return a copy whose relative paths are anchored at ``base``."""

        def anchor(path: Path | None) -> Path | None:
            if path is None or path.is_absolute():
                return path
            return base / path

        return self.model_copy(
            update={
                "keyframes": [
                    k.model_copy(update={"mesh": anchor(k.mesh), "param": anchor(k.param)})
                    for k in self.keyframes
                ],
                "pairs": [
                    p.model_copy(update={"landmarks": anchor(p.landmarks), "features": anchor(p.features)})
                    for p in self.pairs
                ],
                "references": [r.model_copy(update={"mesh": anchor(r.mesh)}) for r in self.references],
                "output": anchor(self.output),
            }
        )


class Config(BaseModel):
    """
    Main configuration container.

    Attributes:
        settings: Environment settings
        pipeline: Morphing run description, absent for single-mesh commands
    """

    settings: MorphSettings
    pipeline: PipelineConfig | None = None


def load_pipeline_config(path: Path) -> PipelineConfig:
    """
    Load and validate a pipeline JSON document.

    Raises:
        ConfigurationError: If the file is missing, is not JSON or fails validation
    """
    if not path.is_file():
        raise ConfigurationError(f"Config file not found: {path}", config_key="config", operation="load_config")
    try:
        raw = json.loads(path.read_text(encoding="utf-8"))
        config = PipelineConfig.model_validate(raw)
    except json.JSONDecodeError as e:
        raise ConfigurationError(f"Config {path} is not valid JSON: {e}", config_key="config", operation="load_config") from e
    except pydantic.ValidationError as e:
        first = e.errors()[0]
        key = ".".join(str(part) for part in first["loc"]) or None
        raise ConfigurationError(
            f"Invalid config {path}: {first['msg']}", config_key=key, operation="load_config"
        ) from e
    config = config.resolved(path.resolve().parent)
    for key, file in config.input_files():
        if not file.is_file():
            raise ConfigurationError(f"Input file not found: {file}", config_key=key, operation="load_config")
    return config


def create_config(pipeline_path: Path | None = None) -> Config:
    """
    Create and return the complete configuration.

    Reads the environment settings and, when a path is given, the pipeline
    document.
    """
    try:
        settings = MorphSettings()
    except pydantic.ValidationError as e:
        first = e.errors()[0]
        raise ConfigurationError(
            f"Invalid environment setting: {first['msg']}",
            config_key="MORPH_" + str(first["loc"][0]).upper() if first["loc"] else None,
            operation="load_config",
        ) from e
    pipeline = load_pipeline_config(pipeline_path) if pipeline_path is not None else None
    return Config(settings=settings, pipeline=pipeline)
