"""Exact evaluation of the weak-norm functional S_R and its pinned suprema.

S_R(center) is the largest ratio |∫_M ξ| / per(M) over nonempty unions M of cells inside
the discrete ball B_R(center). Each sign of ξ is handled by a Dinkelbach iteration: at a
fixed λ, ``max_M ∫_M ξ - λ·per(M)`` is a minimum cut in which

* cell x has a source arc of capacity ``max(ξ_x, 0)`` and a sink arc of capacity
  ``max(-ξ_x, 0)`` plus ``λ·w`` for every stencil neighbour outside the ball,
* ball neighbours are joined both ways with capacity ``λ·w``,

and the subproblem optimum is ``Σ max(ξ, 0) - mincut``.
"""

import logging
import math
from collections.abc import Iterable, Sequence

import numpy as np

from ..errors import InvalidArgumentError
from ..models.data_models import (
    MonteCarloSR,
    NoiseKind,
    PinnedSupResult,
    PointTerm,
    ScaleTerm,
    StencilKind,
    WeakNormResult,
)
from ..models.fields import NoiseField
from ..models.settings import get_settings
from ..utils.parallel import map_ordered
from ..utils.seeding import derive_sample_seed
from .mincut import CutGraph, GridArcs, Stencil, set_perimeter, shift, solve_min_cut
from .noise import sample_noise
from .stats import summarize_samples

logger = logging.getLogger(__name__)

DEFAULT_STENCIL = StencilKind.LATTICE4


def discrete_ball(center: tuple[int, int], R: float) -> list[tuple[int, int]]:
    """Cells whose centers lie within distance R of the center cell's center, row-major."""
    cx, cy = center
    reach = math.floor(R)
    return [
        (cx + dx, cy + dy)
        for dy in range(-reach, reach + 1)
        for dx in range(-reach, reach + 1)
        if dx * dx + dy * dy <= R * R
    ]


class _BallProblem:
    """Window around a ball with the λ-independent pieces of the cut network."""

    def __init__(self, noise: NoiseField, center: tuple[int, int], R: float, stencil: Stencil):
        if R < 1:
            raise InvalidArgumentError(f"Ball radius must be >= 1, got {R}")
        reach = math.floor(R)
        cx, cy = center
        if not (noise.contains(cx - reach, cy - reach) and noise.contains(cx + reach, cy + reach)):
            raise InvalidArgumentError(f"Ball of radius {R} at {center} exceeds the noise extent")

        self.stencil = stencil
        self.pad = stencil.reach
        self.reach = reach
        self.origin = (cx - reach - self.pad, cy - reach - self.pad)
        side = 2 * (reach + self.pad) + 1
        self.shape = (side, side)

        rows, cols = np.indices(self.shape)
        mid = reach + self.pad
        self.inside = (rows - mid) ** 2 + (cols - mid) ** 2 <= R * R

        row, col = noise.index_of(cx - reach, cy - reach)
        xi = np.zeros(self.shape)
        core = slice(self.pad, self.pad + 2 * reach + 1)
        xi[core, core] = noise.values[row : row + 2 * reach + 1, col : col + 2 * reach + 1]
        self.xi = np.where(self.inside, xi * noise.spacing**2, 0.0)

        # Weight of stencil arcs leaving the ball from each ball cell, and of internal arcs.
        self.boundary_weight = np.zeros(self.shape)
        self.internal: list[tuple[tuple[int, int], np.ndarray]] = []
        for (dx, dy), weight in stencil.items():
            for ox, oy in ((dx, dy), (-dx, -dy)):
                head_inside = shift(self.inside, -ox, -oy)
                self.boundary_weight += np.where(self.inside & ~head_inside, weight, 0.0)
                self.internal.append(((ox, oy), np.where(self.inside & head_inside, weight, 0.0)))

    def cells(self, mask: np.ndarray) -> list[tuple[int, int]]:
        rows, cols = np.nonzero(mask)
        return sorted(
            (self.origin[0] + int(c), self.origin[1] + int(r)) for r, c in zip(rows, cols)
        )

    def perimeter(self, mask: np.ndarray) -> float:
        return set_perimeter(mask, self.stencil)

    def maximize(self, f: np.ndarray, lam: float) -> tuple[float, np.ndarray]:
        """Optimum and smallest maximizer of ``Σ_M f - λ·per(M)``."""
        positive = np.maximum(f, 0.0)
        graph = CutGraph(
            shape=self.shape,
            source_caps=positive,
            sink_caps=np.where(self.inside, np.maximum(-f, 0.0) + lam * self.boundary_weight, 0.0),
            grid_arcs=tuple(GridArcs(offset, lam * weight) for offset, weight in self.internal),
        )
        result = solve_min_cut(graph)
        return float(positive.sum()) - result.value, result.mask & self.inside


def _dinkelbach(
    problem: _BallProblem, f: np.ndarray
) -> tuple[float, np.ndarray, list[float]]:
    """Maximize Σ_M f / per(M) over nonempty M in the ball; f must be positive somewhere."""
    settings = get_settings()
    single = problem.perimeter(np.ones((1, 1), dtype=bool))

    flat = np.where(problem.inside, f, -np.inf)
    best = np.zeros(problem.shape, dtype=bool)
    best[np.unravel_index(int(np.argmax(flat)), problem.shape)] = True
    lam = float(f[best][0]) / single
    lambdas = [lam]

    for _ in range(settings.max_dinkelbach_iterations):
        optimum, mask = problem.maximize(f, lam)
        if optimum <= settings.dinkelbach_tolerance or not mask.any():
            break
        ratio = float(f[mask].sum()) / problem.perimeter(mask)
        if ratio <= lam:
            break
        best, lam = mask, ratio
        lambdas.append(lam)
        logger.debug(f"Dinkelbach step: λ={lam:.12g}, |M|={int(mask.sum())}")
    else:
        logger.warning(f"Dinkelbach iteration stopped after {settings.max_dinkelbach_iterations} steps")
    return lam, best, lambdas


def s_r(
    noise: NoiseField,
    R: float,
    center: tuple[int, int] | None = None,
    stencil: Stencil | StencilKind | str = DEFAULT_STENCIL,
) -> WeakNormResult:
    """Exact S_R at ``center`` (default: the central cell of the field).

    Raises:
        InvalidArgumentError: if R < 1 or the ball leaves the noise extent.
    """
    stencil = stencil if isinstance(stencil, Stencil) else Stencil.from_kind(stencil)
    center = center or noise.central_cell
    problem = _BallProblem(noise, center, R, stencil)

    runs = []
    for sign in (1, -1):
        f = sign * problem.xi
        if not np.any(f[problem.inside] > 0):
            continue
        _, mask, lambdas = _dinkelbach(problem, f)
        integral = float(problem.xi[mask].sum())
        perimeter = problem.perimeter(mask)
        runs.append((abs(integral) / perimeter, sign, mask, integral, perimeter, lambdas))

    if not runs:
        mask = np.zeros(problem.shape, dtype=bool)
        mid = problem.reach + problem.pad
        mask[mid, mid] = True
        return WeakNormResult(
            value=0.0,
            optimizer=[center],
            perimeter=problem.perimeter(mask),
            integral=0.0,
            iterations=0,
            sign=1,
            center=center,
            radius=R,
        )

    # max() keeps the first of equal values, so +ξ wins ties
    value, sign, mask, integral, perimeter, lambdas = max(runs, key=lambda run: run[0])
    return WeakNormResult(
        value=value,
        optimizer=problem.cells(mask),
        perimeter=perimeter,
        integral=integral,
        iterations=len(lambdas),
        sign=sign,
        center=center,
        radius=R,
        lambdas=lambdas,
    )


def dyadic_scales(R_max: float) -> list[int]:
    """2, 4, 8, ... up to R_max."""
    scales = []
    R = 2
    while R <= R_max:
        scales.append(R)
        R *= 2
    return scales


def pinned_sup_scales(
    noise: NoiseField,
    center: tuple[int, int] | None = None,
    R_max: float = 2,
    stencil: Stencil | StencilKind | str = DEFAULT_STENCIL,
) -> PinnedSupResult:
    """sup over dyadic R ≤ R_max of (log R)^(-3/4) · S_R(center)."""
    if R_max < 2:
        raise InvalidArgumentError(f"R_max must be >= 2, got {R_max}")
    terms = []
    for R in dyadic_scales(R_max):
        value = s_r(noise, R, center, stencil).value
        terms.append(ScaleTerm(R=R, s_r=value, weighted=math.log(R) ** -0.75 * value))
    return PinnedSupResult(value=max(t.weighted for t in terms), scale_terms=terms)


def pinned_sup_space(
    noise: NoiseField,
    R_max: float,
    W: int,
    stencil: Stencil | StencilKind | str = DEFAULT_STENCIL,
) -> PinnedSupResult:
    """sup over |x| ≤ W of (log |x|₊)^(-1/2) times the pinned supremum over scales at x.

    Base points are lattice offsets from the field's central cell, |x|₊ = max(|x|, 2).
    """
    if W < 0:
        raise InvalidArgumentError(f"W must be >= 0, got {W}")
    if R_max < 2:
        raise InvalidArgumentError(f"R_max must be >= 2, got {R_max}")
    largest = dyadic_scales(R_max)[-1]
    cx, cy = noise.central_cell
    if not (
        noise.contains(cx - W - largest, cy - W - largest)
        and noise.contains(cx + W + largest, cy + W + largest)
    ):
        raise InvalidArgumentError(
            f"Extent {noise.width}x{noise.height} too small for W={W} and R_max={R_max}"
        )

    terms = []
    for dy in range(-W, W + 1):
        for dx in range(-W, W + 1):
            norm = math.hypot(dx, dy)
            if norm > W:
                continue
            weight = math.log(max(norm, 2.0)) ** -0.5
            scales = pinned_sup_scales(noise, (cx + dx, cy + dy), R_max, stencil).value
            terms.append(
                PointTerm(point=(dx, dy), weight=weight, scales_value=scales, weighted=weight * scales)
            )
    return PinnedSupResult(value=max(t.weighted for t in terms), point_terms=terms)


def _sr_sample(task: tuple) -> float:
    R, seed, noise_kind, stencil_kind = task
    side = 2 * math.floor(R) + 1
    noise = sample_noise(noise_kind, side, side, seed)
    return s_r(noise, R, None, stencil_kind).value


def montecarlo_sr(
    R: float,
    n_samples: int,
    noise_kind: NoiseKind | str = NoiseKind.DISCRETIZED_WN,
    master_seed: int = 0,
    stencil: StencilKind | str = DEFAULT_STENCIL,
    workers: int | None = None,
    experiment: str = "sr",
) -> MonteCarloSR:
    """Independent S_R samples on fields just large enough for the ball."""
    if n_samples < 2:
        raise InvalidArgumentError(f"n_samples must be >= 2, got {n_samples}")
    tasks = [
        (R, derive_sample_seed(master_seed, experiment, i), NoiseKind(noise_kind), StencilKind(stencil))
        for i in range(n_samples)
    ]
    samples = list(map_ordered(_sr_sample, tasks, workers))
    summary = summarize_samples(samples, R=R)
    logger.info(f"S_R at R={R}: mean {summary.mean:.4f} over {n_samples} samples")
    return MonteCarloSR(
        R=R,
        noise_kind=NoiseKind(noise_kind),
        stencil=StencilKind(stencil),
        master_seed=master_seed,
        samples=samples,
        summary=summary,
    )


def encode_cells_rle(cells: Iterable[tuple[int, int]]) -> list[tuple[int, int, int]]:
    """Row runs ``(y, x_start, length)`` of a cell set, sorted by row then column."""
    runs: list[tuple[int, int, int]] = []
    for x, y in sorted(set(cells), key=lambda c: (c[1], c[0])):
        if runs and runs[-1][0] == y and runs[-1][1] + runs[-1][2] == x:
            runs[-1] = (y, runs[-1][1], runs[-1][2] + 1)
        else:
            runs.append((y, x, 1))
    return runs


def decode_cells_rle(runs: Sequence[Sequence[int]]) -> list[tuple[int, int]]:
    return sorted((x0 + k, y) for y, x0, length in runs for k in range(length))
