"""Reproducible realizations of the two Gaussian noise classes.

Discretized white noise holds one independent standard normal per unit cell. Regularized
white noise has the sharp spectral density ĉ(k) = (1/2π)·1{|k| ≤ √(4π)}. Its covariance is

    c(r) = (1/(2π)²) ∫_{|k|≤K} e^{ik·r} dk = 2·J₁(K r)/(K r),   K = √(4π),

so c(0) = 1. Since K exceeds the unit-grid Nyquist frequency π, the field is synthesized on
a half-spacing periodic grid (Nyquist 2π) padded beyond the requested window, from i.i.d.
complex spectral noise masked by the closed disc |k| ≤ K. With ``M`` unmasked modes on an
``Nx × Ny`` grid, ``Re(ifft2)`` has pointwise variance ``M/(Nx·Ny)²``; multiplying by
``Nx·Ny/√M`` makes the variance exactly one.
"""

import logging
import math
import struct
from collections.abc import Iterable
from pathlib import Path

import numpy as np
import pandas as pd
from scipy import integrate, special

from ..errors import InvalidArgumentError
from ..models.data_models import NoiseKind
from ..models.fields import NoiseField
from ..utils.seeding import make_generator
from ..utils.validators import require, validate_cells_in_extent, validate_extent, validate_seed

logger = logging.getLogger(__name__)

CUTOFF = math.sqrt(4.0 * math.pi)
OVERSAMPLING = 2
SPECTRAL_PADDING = 64  # unit cells added to each side length of the periodic synthesis grid

DUMP_MAGIC = b"RCNF"
DUMP_VERSION = 1
DUMP_HEADER = struct.Struct("<4sIIIIQI")  # magic, version, kind, width, height, seed, reserved
_KIND_CODES = {NoiseKind.DISCRETIZED_WN: 0, NoiseKind.REGULARIZED_WN: 1}


def sample_discretized_wn(
    width: int, height: int, seed: int, origin: tuple[int, int] = (0, 0)
) -> NoiseField:
    """Independent standard normal per unit cell."""
    require(validate_extent(width, height, minimum=1))
    require(validate_seed(seed))
    rng = make_generator(seed)
    values = rng.standard_normal((height, width))
    return NoiseField(
        values=values, origin=origin, spacing=1.0, kind=NoiseKind.DISCRETIZED_WN, seed=seed
    )


def spectral_mask(nx: int, ny: int, spacing: float) -> np.ndarray:
    """Closed disc |k| ≤ √(4π) on the FFT frequency grid of an ``ny × nx`` array."""
    kx = 2.0 * np.pi * np.fft.fftfreq(nx, d=spacing)
    ky = 2.0 * np.pi * np.fft.fftfreq(ny, d=spacing)
    return (ky[:, None] ** 2 + kx[None, :] ** 2) <= 4.0 * np.pi


def _synthesis_grid(width: int, height: int) -> tuple[int, int]:
    return (OVERSAMPLING * (width + SPECTRAL_PADDING), OVERSAMPLING * (height + SPECTRAL_PADDING))


def sample_regularized_wn(
    width: int, height: int, seed: int, origin: tuple[int, int] = (0, 0)
) -> NoiseField:
    """Stationary field with the sharp disc cutoff, sampled at unit-grid points."""
    ok, message = validate_extent(width, height, minimum=2)
    if not ok:
        raise InvalidArgumentError(f"Extent too small for the spectral synthesis: {message}")
    require(validate_seed(seed))

    nx, ny = _synthesis_grid(width, height)
    mask = spectral_mask(nx, ny, 1.0 / OVERSAMPLING)
    modes = int(mask.sum())
    rng = make_generator(seed)
    spectrum = rng.standard_normal((ny, nx)) + 1j * rng.standard_normal((ny, nx))
    spectrum[~mask] = 0.0

    field = np.fft.ifft2(spectrum).real * (nx * ny / math.sqrt(modes))
    values = field[: OVERSAMPLING * height : OVERSAMPLING, : OVERSAMPLING * width : OVERSAMPLING]
    return NoiseField(
        values=values, origin=origin, spacing=1.0, kind=NoiseKind.REGULARIZED_WN, seed=seed
    )


def sample_noise(
    kind: NoiseKind | str, width: int, height: int, seed: int, origin: tuple[int, int] = (0, 0)
) -> NoiseField:
    """Dispatch on the noise kind."""
    if NoiseKind(kind) == NoiseKind.DISCRETIZED_WN:
        return sample_discretized_wn(width, height, seed, origin)
    return sample_regularized_wn(width, height, seed, origin)


def field_integral(field: NoiseField, cells: Iterable[tuple[int, int]]) -> float:
    """Σ over cells of value × cell area."""
    cells = list(cells)
    require(validate_cells_in_extent(cells, field.origin, field.shape))
    if not cells:
        return 0.0
    cols = np.fromiter((x - field.origin[0] for x, _ in cells), dtype=np.int64)
    rows = np.fromiter((y - field.origin[1] for _, y in cells), dtype=np.int64)
    return float(field.values[rows, cols].sum() * field.spacing**2)


# ============================================================================
# COVARIANCE ORACLES
# ============================================================================


def regularized_covariance(r: float | np.ndarray) -> float | np.ndarray:
    """Closed form 2·J₁(K r)/(K r) of the cutoff covariance, equal to 1 at r = 0."""
    kr = CUTOFF * np.asarray(r, dtype=float)
    safe = np.where(kr == 0.0, 1.0, kr)
    values = np.where(kr == 0.0, 1.0, 2.0 * special.j1(safe) / safe)
    return float(values) if values.ndim == 0 else values


def covariance_by_quadrature(r: float) -> float:
    """(1/(2π)²) ∫_{|k|≤K} cos(k·r) dk by 2D quadrature in polar coordinates."""
    value, _ = integrate.dblquad(
        lambda theta, k: k * math.cos(k * r * math.cos(theta)),
        0.0,
        CUTOFF,
        0.0,
        2.0 * math.pi,
        epsabs=1e-10,
    )
    return value / (2.0 * math.pi) ** 2


def synthesis_covariance(width: int, height: int, lag: tuple[int, int]) -> float:
    """Exact covariance at ``lag`` of the discrete synthesis used for a width × height field."""
    nx, ny = _synthesis_grid(width, height)
    mask = spectral_mask(nx, ny, 1.0 / OVERSAMPLING)
    kx = 2.0 * np.pi * np.fft.fftfreq(nx, d=1.0 / OVERSAMPLING)
    ky = 2.0 * np.pi * np.fft.fftfreq(ny, d=1.0 / OVERSAMPLING)
    phase = ky[:, None] * lag[1] + kx[None, :] * lag[0]
    return float(np.cos(phase)[mask].mean())


def empirical_covariance(samples: np.ndarray, lag: tuple[int, int]) -> float:
    """Average of ξ(x)·ξ(x + lag) over samples and all positions of a (n, h, w) stack."""
    samples = np.asarray(samples, dtype=float)
    dx, dy = lag
    _, h, w = samples.shape
    if abs(dx) >= w or abs(dy) >= h:
        raise InvalidArgumentError(f"Lag {lag} does not fit a {w}x{h} field")
    y0, y1 = max(0, -dy), h - max(0, dy)
    x0, x1 = max(0, -dx), w - max(0, dx)
    a = samples[:, y0:y1, x0:x1]
    b = samples[:, y0 + dy : y1 + dy, x0 + dx : x1 + dx]
    return float(np.mean(a * b))


# ============================================================================
# DUMP / LOAD
# ============================================================================


def dump_noise(field: NoiseField, path: str | Path) -> None:
    """Write a 32-byte header followed by float64 little-endian values, row-major."""
    header = DUMP_HEADER.pack(
        DUMP_MAGIC, DUMP_VERSION, _KIND_CODES[field.kind], field.width, field.height, field.seed, 0
    )
    with Path(path).open("wb") as fh:
        fh.write(header)
        fh.write(np.ascontiguousarray(field.values, dtype="<f8").tobytes())
    logger.debug(f"Dumped {field.width}x{field.height} {field.kind.value} field to {path}")


def load_noise(path: str | Path, origin: tuple[int, int] = (0, 0)) -> NoiseField:
    """Read a field written by ``dump_noise``."""
    data = Path(path).read_bytes()
    if len(data) < DUMP_HEADER.size:
        raise InvalidArgumentError(f"{path} is too short for a noise dump")
    magic, version, kind_code, width, height, seed, _ = DUMP_HEADER.unpack_from(data)
    if magic != DUMP_MAGIC or version != DUMP_VERSION:
        raise InvalidArgumentError(f"{path} is not a version {DUMP_VERSION} noise dump")
    kinds = {code: kind for kind, code in _KIND_CODES.items()}
    if kind_code not in kinds:
        raise InvalidArgumentError(f"Unknown noise kind code {kind_code}")
    expected = DUMP_HEADER.size + 8 * width * height
    if len(data) != expected:
        raise InvalidArgumentError(f"{path} has {len(data)} bytes, expected {expected}")
    values = np.frombuffer(data, dtype="<f8", offset=DUMP_HEADER.size).reshape(height, width)
    return NoiseField(values=values, origin=origin, kind=kinds[kind_code], seed=seed)


def export_noise_csv(field: NoiseField, path: str | Path) -> None:
    """Write ``x,y,value`` rows in lattice coordinates."""
    rows, cols = np.indices(field.shape)
    frame = pd.DataFrame(
        {
            "x": (cols + field.origin[0]).ravel(),
            "y": (rows + field.origin[1]).ravel(),
            "value": field.values.ravel(),
        }
    )
    frame.to_csv(path, index=False)
