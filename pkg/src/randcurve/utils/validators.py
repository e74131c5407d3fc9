"""Validation utilities for randcurve."""

import math
from collections.abc import Iterable, Sequence
from pathlib import Path

import numpy as np

from ..errors import InvalidArgumentError


def validate_extent(width: int, height: int, minimum: int = 1) -> tuple[bool, str]:
    """Validate a grid extent."""
    if int(width) != width or int(height) != height:
        return False, f"Extent must be integral, got {width}x{height}"
    if width < minimum or height < minimum:
        return False, f"Extent {width}x{height} is below the minimum {minimum}x{minimum}"
    return True, ""


def validate_epsilon(epsilon: float) -> tuple[bool, str]:
    """Validate the disorder strength."""
    if not math.isfinite(epsilon) or epsilon < 0:
        return False, f"epsilon must be finite and >= 0, got {epsilon}"
    return True, ""


def validate_seed(seed: int) -> tuple[bool, str]:
    """Validate a 64-bit unsigned seed."""
    if int(seed) != seed or not 0 <= seed < 2**64:
        return False, f"Seed must be an unsigned 64-bit integer, got {seed}"
    return True, ""


def validate_increasing(values: Sequence[float], name: str = "grid") -> tuple[bool, str]:
    """Validate a nonempty strictly increasing sequence."""
    if len(values) == 0:
        return False, f"{name} is empty"
    if any(b <= a for a, b in zip(values, values[1:])):
        return False, f"{name} must be strictly increasing, got {list(values)}"
    return True, ""


def validate_spin_array(values: np.ndarray) -> tuple[bool, str]:
    """Validate a nonempty 2D array of +1/-1 entries."""
    if values.ndim != 2 or values.size == 0:
        return False, f"Spin array must be a nonempty 2D array, got shape {values.shape}"
    if not np.all(np.abs(values) == 1):
        return False, "Spin values must all be +1 or -1"
    return True, ""


def validate_cells_in_extent(
    cells: Iterable[tuple[int, int]], origin: tuple[int, int], shape: tuple[int, int]
) -> tuple[bool, str]:
    """Validate that lattice cells lie inside an array placed at ``origin``."""
    ox, oy = origin
    height, width = shape
    for x, y in cells:
        if not (ox <= x < ox + width and oy <= y < oy + height):
            return False, f"Cell ({x}, {y}) is outside the extent starting at {origin} of size {width}x{height}"
    return True, ""


def validate_output_path(path: str | Path) -> tuple[bool, str]:
    """Validate that an output file can be created at ``path``."""
    try:
        target = Path(path)
        if target.exists() and target.is_dir():
            return False, f"Not a file: {path}"
        parent = target.resolve().parent
        if parent.exists() and not parent.is_dir():
            return False, f"Parent is not a directory: {parent}"
        return True, str(target)
    except Exception as e:
        return False, f"Error validating path: {e!s}"


def require(check: tuple[bool, str]) -> None:
    """Raise ``InvalidArgumentError`` when a validator failed."""
    ok, message = check
    if not ok:
        raise InvalidArgumentError(message)
