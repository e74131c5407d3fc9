"""Geometry data models: lines, interfaces and the results of the geometric checks.

Points are in lattice coordinates: cell ``(x, y)`` occupies ``[x, x+1] × [y, y+1]``.
"""

import math

from pydantic import BaseModel, ConfigDict, Field, field_validator, model_validator

from .data_models import StencilKind


class LineConfig(BaseModel):
    """Half-plane configuration m_line.

    ``m_line(p) = orientation`` when ``(p - anchor)·normal >= 0`` and ``-orientation``
    otherwise, so ``orientation * normal`` points from the -1 side into the +1 side.
    """

    model_config = ConfigDict(frozen=True)

    anchor: tuple[float, float] = Field(..., description="A point on the line")
    normal: tuple[float, float] = Field(..., description="Unit normal ν")
    orientation: int = Field(1, description="+1 or -1")

    @field_validator("orientation")
    @classmethod
    def validate_orientation(cls, v: int) -> int:
        if v not in (1, -1):
            raise ValueError(f"orientation must be +1 or -1, got {v}")
        return v

    @model_validator(mode="after")
    def validate_unit_normal(self) -> "LineConfig":
        if abs(math.hypot(*self.normal) - 1.0) > 1e-12:
            raise ValueError(f"normal must be a unit vector, got {self.normal}")
        return self

    @classmethod
    def from_angle(
        cls, theta: float, anchor: tuple[float, float], orientation: int = 1
    ) -> "LineConfig":
        """Line through ``anchor`` with normal (cos θ, sin θ)."""
        return cls(anchor=anchor, normal=(math.cos(theta), math.sin(theta)), orientation=orientation)

    @property
    def effective_normal(self) -> tuple[float, float]:
        """Normal pointing into the +1 side."""
        return (self.orientation * self.normal[0], self.orientation * self.normal[1])

    def flipped(self) -> "LineConfig":
        """Same line with the phases exchanged."""
        return LineConfig(anchor=self.anchor, normal=self.normal, orientation=-self.orientation)

    def signed_distance(self, x: float, y: float) -> float:
        return (x - self.anchor[0]) * self.normal[0] + (y - self.anchor[1]) * self.normal[1]

    def value_at(self, x: float, y: float) -> int:
        """m_line at a point."""
        return self.orientation if self.signed_distance(x, y) >= 0 else -self.orientation


class Excess(BaseModel):
    """Flatness deficits of a configuration on a ball."""

    l1_excess: float = Field(..., ge=0, description="(1/R²) Σ_B |m - m_line| · area")
    strong_excess: float | None = Field(None, description="(1/r) Σ |ν_e - ν̄|² · 2 · length")
    center: tuple[float, float]
    radius: float
    interface_present: bool = Field(True, description="False when the ball holds no jump edge")


class AveragedNormal(BaseModel):
    """ν̄ = ∫∇m / |∫∇m| on a ball, or non-unique when the integral vanishes."""

    vector: tuple[float, float] | None
    unique: bool
    integral: tuple[float, float] = Field(..., description="∫_B ∇m")
    magnitude: float


class BoundaryComponent(BaseModel):
    """One connected piece of the jump set as an ordered vertex path."""

    vertices: list[tuple[int, int]]
    closed: bool
    lattice_length: float = Field(..., description="Number of unit edges")
    stencil_length: float = Field(..., description="Share of the stencil cut length")


class BoundaryCurve(BaseModel):
    """All interface components of a spin field."""

    components: list[BoundaryComponent] = Field(default_factory=list)
    stencil: StencilKind = StencilKind.LATTICE4
    total_lattice_length: float = 0.0
    total_stencil_length: float = 0.0


class FewJumpsResult(BaseModel):
    """A radius where the interface crosses the circle 0 or 2 times cheaply."""

    found: bool
    radius: float | None = None
    crossings: int | None = None
    boundary_l1: float | None = None
    threshold: float = Field(..., description="32 · R · l1_excess")
    crossing_points: list[tuple[float, float]] = Field(default_factory=list)
    radii_scanned: int = 0


class CampanatoStep(BaseModel):
    """Outcome of one excess-improvement step."""

    radius: float
    new_line: LineConfig
    tilt: float = Field(..., description="|ν - ν′| between effective normals")
    excess_out: float = Field(..., description="l1_excess of the new line on B_r")


class EtaBall(BaseModel):
    """Perimeter of a configuration and of its best competitor on one ball."""

    center: tuple[int, int]
    radius: float
    perimeter: float
    competitor_perimeter: float
    ratio: float


class EtaAudit(BaseModel):
    """η̂ = max over audited balls of per(m)/per(m*) - 1."""

    eta_hat: float = Field(..., ge=0)
    balls: list[EtaBall] = Field(default_factory=list)


class DensityCheck(BaseModel):
    """Volume and perimeter density bounds on B_r(x)."""

    on_jump_set: bool
    volume_ratio_lo_ok: bool
    volume_ratio_hi_ok: bool
    perimeter_lo_ok: bool
    perimeter_hi_ok: bool
    plus_fraction: float = Field(..., description="½∫|m + 1| / |B_r|, share of +1 area")
    minus_fraction: float = Field(..., description="½∫|m - 1| / |B_r|, share of -1 area")
    perimeter: float = Field(..., description="∫_{B_r} |∇m|")
    perimeter_lower: float
    perimeter_upper: float
    volume_lower: float = Field(..., description="1/(2+η)²")
    volume_upper: float = Field(..., description="1 - 1/(2+η)²")

    @property
    def all_ok(self) -> bool:
        return (
            self.volume_ratio_lo_ok
            and self.volume_ratio_hi_ok
            and self.perimeter_lo_ok
            and self.perimeter_hi_ok
        )


class HeightBoundCheck(BaseModel):
    """Distance of an almost-straight curve from its chord."""

    h: float
    bound: float
    ok: bool


class TiltCheck(BaseModel):
    """Tilt between two lines against their distance on the unit circle."""

    d: float | None
    tilt: float | None
    ok: bool
    skipped: bool = False
    reason: str | None = None


class ModulusRow(BaseModel):
    """One pair of jump points in a modulus-of-continuity table."""

    x: tuple[float, float]
    y: tuple[float, float]
    distance: float
    difference: float = Field(..., description="|ν̄₁(x) - ν̄₁(y)|")
    shape: float = Field(..., description="Right-hand side shape without its constant")
    ratio: float | None


class ModulusTable(BaseModel):
    """Modulus-of-continuity table with the pairs dropped for non-unique normals."""

    rows: list[ModulusRow] = Field(default_factory=list)
    excluded_non_unique: int = 0

    @property
    def max_difference(self) -> float:
        return max((row.difference for row in self.rows), default=0.0)


class Bubble(BaseModel):
    """A closed interface component inside the audited ball."""

    vertices: list[tuple[int, int]]
    cells: list[tuple[int, int]]
    area: float
    lattice_perimeter: float = Field(..., description="Number of unit lattice edges on the loop")
    perimeter: float = Field(
        ..., description="Pair-energy drop of flipping the enclosed cells: pair factor × stencil cut"
    )
    field_integral: float | None = None
    energy_ok: bool | None = Field(None, description="per(B) <= 2ε|∫_B ξ|")
