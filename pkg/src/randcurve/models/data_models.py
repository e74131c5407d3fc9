"""Data models for randcurve."""

import json
from enum import Enum
from typing import Any, Literal

from pydantic import BaseModel, Field


class NoiseKind(str, Enum):
    """Gaussian noise classes."""

    DISCRETIZED_WN = "discretized-wn"  # i.i.d. per unit cell
    REGULARIZED_WN = "regularized-wn"  # sharp spectral disc cutoff


class StencilKind(str, Enum):
    """Neighbourhood stencils approximating the perimeter."""

    LATTICE4 = "lattice4"
    CROFTON8 = "crofton8"
    CROFTON16 = "crofton16"


class EnergyMode(str, Enum):
    """Normalisation of the pair term."""

    RFIM = "rfim"  # |σ_x - σ_y|² = 4 per disagreeing pair
    CONTINUUM_BV = "continuum-bv"  # ∫|∇m| = 2 × jump length


class BoundaryKind(str, Enum):
    """Boundary conditions on the frame around a box."""

    PLUS = "plus"
    MINUS = "minus"
    FREE = "free"
    SPINS = "spins"


class ExperimentName(str, Enum):
    """Experiments known to the runner."""

    NOISE_CHECK = "noise-check"
    ML_SWEEP = "ml-sweep"
    LSTAR = "lstar"
    SR_SCALING = "sr-scaling"
    SR_TAILS = "sr-tails"
    PINNED_SUP = "pinned-sup"
    GEOMETRY_SUITE = "geometry-suite"
    LEMMA_SUITE = "lemma-suite"
    ORACLE_SUITE = "oracle-suite"


class OperationResult(BaseModel):
    """Result envelope returned by the MCP tools."""

    success: bool = Field(..., description="Whether operation succeeded")
    message: str = Field(..., description="Result message")
    data: dict[str, Any] | None = Field(None, description="Additional result data")
    error: str | None = Field(None, description="Error message if failed")
    warnings: list[str] | None = Field(None, description="Warning messages")


# ============================================================================
# WEAK NORM
# ============================================================================


class WeakNormResult(BaseModel):
    """Optimal ratio |∫_M ξ| / per(M) over cell unions M inside a discrete ball."""

    value: float = Field(..., ge=0, description="The optimal ratio")
    optimizer: list[tuple[int, int]] = Field(..., description="Cells of the optimal set M, sorted")
    perimeter: float = Field(..., description="Stencil cut length of M (0 only in the ξ ≡ 0 case)")
    integral: float = Field(..., description="∫_M ξ (signed)")
    iterations: int = Field(..., ge=0, description="Parametric solves used by the winning sign")
    sign: int = Field(..., description="+1 if ∫_M ξ attains the max, -1 if -∫_M ξ does")
    center: tuple[int, int] = Field(..., description="Center cell of the ball")
    radius: float = Field(..., description="Ball radius R")
    lambdas: list[float] = Field(default_factory=list, description="λ sequence of the winning run")


class ScaleTerm(BaseModel):
    """One dyadic scale of a pinned supremum."""

    R: int
    s_r: float
    weighted: float = Field(..., description="(log R)^(-3/4) · S_R")


class PointTerm(BaseModel):
    """One base point of the spatial pinned supremum."""

    point: tuple[int, int] = Field(..., description="Offset from the field's central cell")
    weight: float = Field(..., description="(log |x|₊)^(-1/2)")
    scales_value: float = Field(..., description="Pinned supremum over scales at this point")
    weighted: float


class PinnedSupResult(BaseModel):
    """A pinned supremum with its per-term diagnostics."""

    value: float
    scale_terms: list[ScaleTerm] = Field(default_factory=list)
    point_terms: list[PointTerm] = Field(default_factory=list)


# ============================================================================
# STATISTICS
# ============================================================================


class SampleSummary(BaseModel):
    """Summary of a list of Monte-Carlo samples."""

    n: int
    mean: float
    variance: float
    std_err: float
    quantiles: dict[str, float] = Field(..., description="Keys q05, q25, q50, q75, q95")
    normalized_mean: float | None = Field(None, description="mean / (log R)^(3/4) when R is known")
    R: float | None = None


class MonteCarloSR(BaseModel):
    """Independent S_R samples with their summary."""

    R: float
    noise_kind: NoiseKind
    stencil: StencilKind
    master_seed: int
    samples: list[float]
    summary: SampleSummary


class ScalingFit(BaseModel):
    """Least-squares fit value ≈ a · (log R)^b."""

    exponent: float = Field(..., description="b")
    prefactor: float = Field(..., gt=0, description="a")
    residual: float = Field(..., ge=0, description="Max absolute log-residual")
    model: Literal["a·(log R)^b"] = "a·(log R)^b"


class EnvelopeRow(BaseModel):
    """Tail comparison at one threshold t."""

    t: float
    empirical: float
    bound: float
    std_err: float
    violation: float = Field(..., description="empirical - (bound + 3 SE), positive when violated")


class EnvelopeCheck(BaseModel):
    """Outcome of the sub-Gaussian envelope comparison."""

    ok: bool
    max_violation: float
    sigma2: float
    rows: list[EnvelopeRow]


class SupFieldScaling(BaseModel):
    """Mean of sup_{Q_R}|ξ| per R and its (log R)^(1/2) normalisation."""

    R_list: list[int]
    means: list[float]
    ratios: list[float]
    max_ratio: float
    fit: ScalingFit | None = None


# ============================================================================
# GROUND STATES
# ============================================================================


class OrderParameterEstimate(BaseModel):
    """Monte-Carlo estimate of m(L)."""

    epsilon: float
    L: int
    n_samples: int
    disagreements: int
    m_hat: float = Field(..., ge=0, le=1)
    std_err: float = Field(..., ge=0)


class CorrelationLengthEstimate(BaseModel):
    """Smallest grid size at which m(L) is confidently below the threshold."""

    epsilon: float
    threshold: float
    L_star: int | None = Field(None, description="None when not reached on the grid")
    reached: bool
    table: list[OrderParameterEstimate]


class MinimalityViolation(BaseModel):
    """A ball in which the configuration can be strictly improved."""

    center: tuple[int, int]
    radius: float
    energy_before: float
    energy_after: float
    improvement: float


class MinimalityAudit(BaseModel):
    """Result of auditing a configuration for local minimality."""

    violations: list[MinimalityViolation] = Field(default_factory=list)
    balls_checked: int = 0
    balls_skipped: int = 0


# ============================================================================
# EXPERIMENTS
# ============================================================================


class ExperimentRecord(BaseModel):
    """One Monte-Carlo observation, the unit of persistence."""

    experiment: ExperimentName
    master_seed: int
    sample_index: int
    parameters: dict[str, Any] = Field(default_factory=dict)
    scalars: dict[str, Any] = Field(default_factory=dict)
    wall_time: float = Field(0.0, description="Seconds spent on this sample")

    def key(self) -> tuple[str, int, int, str]:
        """Identity of the record for resumption."""
        return record_key(self.experiment, self.master_seed, self.sample_index, self.parameters)


def record_key(
    experiment: ExperimentName | str, master_seed: int, sample_index: int, parameters: dict[str, Any]
) -> tuple[str, int, int, str]:
    """Identity of a record: experiment, seed, index and canonical parameters."""
    name = experiment.value if isinstance(experiment, ExperimentName) else str(experiment)
    return (name, master_seed, sample_index, json.dumps(parameters, sort_keys=True))
