"""Experiment configuration files.

A configuration is a YAML mapping::

    schema_version: 1
    experiment: ml-sweep
    master_seed: 20240611
    workers: 4            # optional, overrides RANDCURVE_WORKERS
    output: runs/ml.jsonl # optional, default <output_dir>/<experiment>.jsonl
    params:
      epsilons: [0.0, 0.5]
      L_grid: [8, 16, 32]
      n_samples: 200

Unknown keys are rejected at every level.
"""

import math
from pathlib import Path
from typing import Annotated, Any, Literal

import yaml
from pydantic import BaseModel, ConfigDict, Field, ValidationError, field_validator

from ..errors import ConfigurationError
from .data_models import BoundaryKind, EnergyMode, ExperimentName, NoiseKind, StencilKind

SCHEMA_VERSION = 1

Epsilon = Annotated[float, Field(ge=0, allow_inf_nan=False)]


class ExperimentParams(BaseModel):
    """Fields shared by every experiment's parameters."""

    model_config = ConfigDict(extra="forbid")

    n_samples: int = Field(100, ge=1, description="Monte-Carlo samples per parameter point")


def _strictly_increasing(values: list[Any]) -> list[Any]:
    if not values:
        raise ValueError("must not be empty")
    if any(b <= a for a, b in zip(values, values[1:])):
        raise ValueError("must be strictly increasing")
    return values


class NoiseCheckParams(ExperimentParams):
    noise_kinds: list[NoiseKind] = Field(
        default_factory=lambda: [NoiseKind.DISCRETIZED_WN, NoiseKind.REGULARIZED_WN]
    )
    size: int = Field(64, ge=24, description="Side of the sampled square fields")
    lags: list[int] = Field(default_factory=lambda: [1, 20])


class MlSweepParams(ExperimentParams):
    epsilons: list[Epsilon] = Field(..., min_length=1)
    L_grid: list[int] = Field(..., min_length=1)
    stencil: StencilKind = StencilKind.CROFTON8
    energy_mode: EnergyMode = EnergyMode.CONTINUUM_BV
    noise_kind: NoiseKind = NoiseKind.DISCRETIZED_WN

    @field_validator("L_grid")
    @classmethod
    def validate_L_grid(cls, v: list[int]) -> list[int]:
        if v and v[0] < 1:
            raise ValueError("box sizes must be >= 1")
        return _strictly_increasing(v)


class LstarParams(MlSweepParams):
    threshold: float = Field(0.1, gt=0, lt=1)


class SrScalingParams(ExperimentParams):
    R_list: list[int] = Field(default_factory=lambda: [8, 16, 32, 64])
    noise_kind: NoiseKind = NoiseKind.DISCRETIZED_WN
    stencil: StencilKind = StencilKind.LATTICE4

    @field_validator("R_list")
    @classmethod
    def validate_R_list(cls, v: list[int]) -> list[int]:
        if v and v[0] < 1:
            raise ValueError("radii must be >= 1")
        return _strictly_increasing(v)


class SrTailsParams(ExperimentParams):
    R: int = Field(16, ge=1)
    noise_kind: NoiseKind = NoiseKind.DISCRETIZED_WN
    stencil: StencilKind = StencilKind.LATTICE4
    t_grid: list[float] = Field(default_factory=lambda: [1.0, 2.0, 4.0, 6.0, 8.0, 10.0])
    sigma2: float = Field(4 * math.pi, gt=0)


class PinnedSupParams(ExperimentParams):
    R_max: int = Field(16, ge=2)
    W: int = Field(2, ge=0)
    noise_kind: NoiseKind = NoiseKind.DISCRETIZED_WN
    stencil: StencilKind = StencilKind.LATTICE4
    t_grid: list[float] = Field(default_factory=lambda: [1.0, 2.0, 4.0, 6.0, 8.0, 10.0])
    sigma2: float = Field(4 * math.pi, gt=0)


class GeometrySuiteParams(ExperimentParams):
    epsilons: list[Epsilon] = Field(default_factory=lambda: [0.05], min_length=1)
    L: int = Field(64, ge=16)
    stencil: StencilKind = StencilKind.CROFTON8
    energy_mode: EnergyMode = EnergyMode.CONTINUUM_BV
    noise_kind: NoiseKind = NoiseKind.DISCRETIZED_WN
    n_balls: int = Field(8, ge=0)
    n_density_points: int = Field(10, ge=0)
    density_radius: float = Field(4.0, ge=2)
    modulus_pairs: int = Field(10, ge=0)


class LemmaSuiteParams(ExperimentParams):
    polyline_points: int = Field(6, ge=1)


class OracleSuiteParams(ExperimentParams):
    size: int = Field(3, ge=1, le=5)
    epsilons: list[Epsilon] = Field(default_factory=lambda: [0.5, 2.0], min_length=1)
    stencils: list[StencilKind] = Field(
        default_factory=lambda: [StencilKind.LATTICE4, StencilKind.CROFTON8]
    )
    energy_modes: list[EnergyMode] = Field(
        default_factory=lambda: [EnergyMode.RFIM, EnergyMode.CONTINUUM_BV], min_length=1
    )
    boundaries: list[BoundaryKind] = Field(
        default_factory=lambda: [BoundaryKind.PLUS, BoundaryKind.MINUS], min_length=1
    )
    ball_radius: float = Field(1.5, ge=1)

    @field_validator("boundaries")
    @classmethod
    def validate_boundaries(cls, v: list[BoundaryKind]) -> list[BoundaryKind]:
        if BoundaryKind.SPINS in v:
            raise ValueError("prescribed-spin frames need explicit values; use plus, minus or free")
        return v


PARAMS_MODELS: dict[ExperimentName, type[ExperimentParams]] = {
    ExperimentName.NOISE_CHECK: NoiseCheckParams,
    ExperimentName.ML_SWEEP: MlSweepParams,
    ExperimentName.LSTAR: LstarParams,
    ExperimentName.SR_SCALING: SrScalingParams,
    ExperimentName.SR_TAILS: SrTailsParams,
    ExperimentName.PINNED_SUP: PinnedSupParams,
    ExperimentName.GEOMETRY_SUITE: GeometrySuiteParams,
    ExperimentName.LEMMA_SUITE: LemmaSuiteParams,
    ExperimentName.ORACLE_SUITE: OracleSuiteParams,
}


class ExperimentConfig(BaseModel):
    """Top level of an experiment configuration file."""

    model_config = ConfigDict(extra="forbid")

    schema_version: Literal[1] = Field(..., description="Configuration schema version")
    experiment: ExperimentName
    master_seed: int = Field(0, ge=0, lt=2**64)
    workers: int | None = Field(None, ge=1)
    output: str | None = Field(None, description="Record file, JSON lines")
    params: dict[str, Any] = Field(default_factory=dict)

    def typed_params(self) -> ExperimentParams:
        """Parameters validated against the experiment's own schema."""
        return PARAMS_MODELS[self.experiment].model_validate(self.params)


def _configuration_error(exc: ValidationError, prefix: str = "") -> ConfigurationError:
    error = exc.errors()[0]
    key_path = ".".join(str(part) for part in (prefix, *error["loc"]) if part != "")
    return ConfigurationError(error["msg"], key_path=key_path)


def parse_config(data: Any) -> tuple[ExperimentConfig, ExperimentParams]:
    """Validate an already loaded configuration tree.

    Raises:
        ConfigurationError: with the dotted key path of the first offending entry.
    """
    if not isinstance(data, dict):
        raise ConfigurationError("configuration must be a mapping")
    try:
        config = ExperimentConfig.model_validate(data)
    except ValidationError as e:
        raise _configuration_error(e) from e
    try:
        params = config.typed_params()
    except ValidationError as e:
        raise _configuration_error(e, "params") from e
    return config, params


def load_config(path: str | Path) -> tuple[ExperimentConfig, ExperimentParams]:
    """Read and validate a YAML configuration file."""
    try:
        data = yaml.safe_load(Path(path).read_text())
    except FileNotFoundError as e:
        raise ConfigurationError(f"configuration file not found: {path}") from e
    except yaml.YAMLError as e:
        raise ConfigurationError(f"invalid YAML: {e!s}") from e
    return parse_config(data)
