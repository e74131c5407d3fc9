"""Array-carrying field models: noise realizations, spin configurations, boundary data.

Arrays are indexed ``values[row, col]`` and the entry at ``[j, i]`` belongs to the lattice
cell ``(origin_x + i, origin_y + j)``.
"""

from typing import Any

import numpy as np
from pydantic import BaseModel, ConfigDict, Field, model_validator

from ..errors import InvalidArgumentError
from ..utils.validators import validate_spin_array
from .data_models import BoundaryKind, EnergyMode, NoiseKind, StencilKind


def _readonly(values: np.ndarray, dtype: Any) -> np.ndarray:
    array = np.array(values, dtype=dtype, copy=True)
    array.setflags(write=False)
    return array


class _GridModel(BaseModel):
    """Shared extent helpers for models holding a 2D array placed at ``origin``."""

    model_config = ConfigDict(arbitrary_types_allowed=True, frozen=True)

    values: np.ndarray
    origin: tuple[int, int] = (0, 0)

    @property
    def shape(self) -> tuple[int, int]:
        return (int(self.values.shape[0]), int(self.values.shape[1]))

    @property
    def width(self) -> int:
        return int(self.values.shape[1])

    @property
    def height(self) -> int:
        return int(self.values.shape[0])

    @property
    def central_cell(self) -> tuple[int, int]:
        """Lattice coordinates of the central cell."""
        return (self.origin[0] + self.width // 2, self.origin[1] + self.height // 2)

    def contains(self, x: int, y: int) -> bool:
        ox, oy = self.origin
        return ox <= x < ox + self.width and oy <= y < oy + self.height

    def index_of(self, x: int, y: int) -> tuple[int, int]:
        """Array index (row, col) of lattice cell (x, y)."""
        if not self.contains(x, y):
            raise InvalidArgumentError(f"Cell ({x}, {y}) is outside the field extent")
        return (y - self.origin[1], x - self.origin[0])

    def cell_value(self, x: int, y: int) -> Any:
        return self.values[self.index_of(x, y)]


class NoiseField(_GridModel):
    """A sampled realization of one of the Gaussian noise classes."""

    spacing: float = Field(1.0, gt=0, description="Grid spacing in lattice units")
    kind: NoiseKind = NoiseKind.DISCRETIZED_WN
    seed: int = Field(0, ge=0, lt=2**64)

    @model_validator(mode="before")
    @classmethod
    def freeze_values(cls, data: Any) -> Any:
        if isinstance(data, dict) and "values" in data:
            data = dict(data)
            data["values"] = _readonly(data["values"], np.float64)
        return data

    @model_validator(mode="after")
    def validate_field(self) -> "NoiseField":
        if self.values.ndim != 2 or self.values.size == 0:
            raise ValueError(f"Noise values must be a nonempty 2D array, got {self.values.shape}")
        if self.kind == NoiseKind.DISCRETIZED_WN and self.spacing != 1.0:
            raise ValueError("Discretized white noise is defined with spacing 1")
        return self

    @classmethod
    def zeros(cls, width: int, height: int, origin: tuple[int, int] = (0, 0)) -> "NoiseField":
        """Vanishing field, used for pure-perimeter subproblems."""
        return cls(values=np.zeros((height, width)), origin=origin)

    @classmethod
    def from_array(
        cls,
        values: np.ndarray,
        origin: tuple[int, int] = (0, 0),
        kind: NoiseKind = NoiseKind.DISCRETIZED_WN,
        seed: int = 0,
    ) -> "NoiseField":
        return cls(values=values, origin=origin, kind=kind, seed=seed)

    def negated(self) -> "NoiseField":
        return self.model_copy(update={"values": _readonly(-self.values, np.float64)})

    def window(self, x0: int, y0: int, width: int, height: int) -> "NoiseField":
        """Sub-field covering cells [x0, x0+width) × [y0, y0+height)."""
        if not (self.contains(x0, y0) and self.contains(x0 + width - 1, y0 + height - 1)):
            raise InvalidArgumentError("Window exceeds the noise extent")
        row, col = self.index_of(x0, y0)
        return NoiseField(
            values=self.values[row : row + height, col : col + width],
            origin=(x0, y0),
            spacing=self.spacing,
            kind=self.kind,
            seed=self.seed,
        )


class BoundaryCondition(BaseModel):
    """Boundary data on the frame of cells surrounding a box.

    For ``SPINS`` the array ``tau`` covers the box padded by ``k`` cells on every side; only
    its frame entries are read, and ``k`` must be at least the stencil reach.
    """

    model_config = ConfigDict(arbitrary_types_allowed=True, frozen=True)

    kind: BoundaryKind
    tau: np.ndarray | None = None

    @model_validator(mode="after")
    def validate_tau(self) -> "BoundaryCondition":
        if self.kind == BoundaryKind.SPINS:
            if self.tau is None or self.tau.ndim != 2:
                raise ValueError("Spins boundary condition needs a 2D tau array")
            if not np.all(np.abs(self.tau) == 1):
                raise ValueError("tau values must be +1 or -1")
        return self

    @classmethod
    def plus(cls) -> "BoundaryCondition":
        return cls(kind=BoundaryKind.PLUS)

    @classmethod
    def minus(cls) -> "BoundaryCondition":
        return cls(kind=BoundaryKind.MINUS)

    @classmethod
    def free(cls) -> "BoundaryCondition":
        return cls(kind=BoundaryKind.FREE)

    @classmethod
    def spins(cls, tau: np.ndarray) -> "BoundaryCondition":
        return cls(kind=BoundaryKind.SPINS, tau=_readonly(tau, np.int8))

    @property
    def is_fixed(self) -> bool:
        return self.kind != BoundaryKind.FREE

    def flipped(self) -> "BoundaryCondition":
        if self.kind == BoundaryKind.PLUS:
            return BoundaryCondition.minus()
        if self.kind == BoundaryKind.MINUS:
            return BoundaryCondition.plus()
        if self.kind == BoundaryKind.SPINS:
            assert self.tau is not None
            return BoundaryCondition.spins(-self.tau)
        return self

    def frame(self, height: int, width: int, margin: int) -> np.ndarray:
        """Padded array (height+2·margin, width+2·margin): frame values, zeros on the box."""
        padded = np.zeros((height + 2 * margin, width + 2 * margin), dtype=np.int8)
        if margin == 0 or self.kind == BoundaryKind.FREE:
            return padded
        if self.kind == BoundaryKind.PLUS:
            padded[:] = 1
        elif self.kind == BoundaryKind.MINUS:
            padded[:] = -1
        else:
            assert self.tau is not None
            th, tw = self.tau.shape
            k, rem_h = divmod(th - height, 2)
            k_w, rem_w = divmod(tw - width, 2)
            if rem_h or rem_w or k != k_w or k < margin:
                raise InvalidArgumentError(
                    f"tau of shape {self.tau.shape} does not pad a {height}x{width} box "
                    f"by at least {margin} cells"
                )
            padded[:] = self.tau[k - margin : th - k + margin, k - margin : tw - k + margin]
        padded[margin : margin + height, margin : margin + width] = 0
        return padded


class SpinField(_GridModel):
    """A ±1 configuration on a box with its boundary condition and provenance."""

    bc: BoundaryCondition = Field(default_factory=BoundaryCondition.free)
    noise_seed: int | None = None
    epsilon: float | None = None
    stencil: StencilKind | None = None
    energy_mode: EnergyMode | None = None

    @model_validator(mode="before")
    @classmethod
    def freeze_values(cls, data: Any) -> Any:
        if isinstance(data, dict) and "values" in data:
            data = dict(data)
            data["values"] = _readonly(data["values"], np.int8)
        return data

    @model_validator(mode="after")
    def validate_spins(self) -> "SpinField":
        ok, message = validate_spin_array(self.values)
        if not ok:
            raise ValueError(message)
        return self

    @classmethod
    def from_array(
        cls,
        values: np.ndarray,
        origin: tuple[int, int] = (0, 0),
        bc: BoundaryCondition | None = None,
        **provenance: Any,
    ) -> "SpinField":
        return cls(values=values, origin=origin, bc=bc or BoundaryCondition.free(), **provenance)

    @property
    def L(self) -> int:
        """Box size of a square field."""
        if self.width != self.height:
            raise InvalidArgumentError(f"Field is {self.width}x{self.height}, not square")
        return self.width

    def flipped(self) -> "SpinField":
        """Global spin flip, boundary data included."""
        return self.model_copy(
            update={"values": _readonly(-self.values.astype(np.int8), np.int8), "bc": self.bc.flipped()}
        )
