"""Brute-force ground truths for the exactly checkable quantities.

Every oracle enumerates all configurations in vectorized batches and refuses instances
above its size cap with ``OracleLimitError``.
"""

import logging
from collections.abc import Iterator

import numpy as np

from ..errors import OracleLimitError
from ..models.data_models import EnergyMode, StencilKind
from ..models.fields import BoundaryCondition, NoiseField, SpinField
from .mincut import CutGraph, Stencil, head_in_range, pair_factor, shift
from .weaknorm import discrete_ball

logger = logging.getLogger(__name__)

MAX_GROUND_STATE_CELLS = 25
MAX_SUBSET_CELLS = 16
MAX_CONSTRAINED_CELLS = 25
MAX_GRAPH_NODES = 20
TIE_TOLERANCE = 1e-9
BATCH_BITS = 16


def _as_stencil(stencil: Stencil | StencilKind | str) -> Stencil:
    return stencil if isinstance(stencil, Stencil) else Stencil.from_kind(stencil)


def _check_cap(n: int, cap: int, what: str) -> None:
    if n > cap:
        raise OracleLimitError(f"{what} has {n} free variables, the oracle cap is {cap}")


def _bit_batches(n: int) -> Iterator[tuple[int, np.ndarray]]:
    """(first index, bits) for all 2^n assignments, bits[k, i] = bit i of index first + k."""
    total = 1 << n
    step = 1 << min(n, BATCH_BITS)
    shifts = np.arange(n, dtype=np.int64)
    for first in range(0, total, step):
        indices = np.arange(first, min(first + step, total), dtype=np.int64)
        yield first, ((indices[:, None] >> shifts[None, :]) & 1).astype(bool)


def _pair_terms(
    fixed: np.ndarray, stencil: Stencil, factor: float
) -> tuple[list[tuple[int, int, float]], np.ndarray, float]:
    """Free-free pairs, per-cell linear cost of disagreeing with fixed neighbours, constant.

    ``fixed`` holds 0 for free cells and ±1 for fixed ones. Pairs between two fixed cells
    contribute to the constant.
    """
    h, w = fixed.shape
    free_index = -np.ones(fixed.shape, dtype=np.int64)
    free_index[fixed == 0] = np.arange(int(np.count_nonzero(fixed == 0)))
    n = int(np.count_nonzero(fixed == 0))
    pairs: list[tuple[int, int, float]] = []
    # disagree_cost[i, 0]: cost if free cell i is -1, [i, 1]: cost if +1
    disagree_cost = np.zeros((n, 2))
    constant = 0.0
    for (dx, dy), weight in stencil.items():
        c = factor * weight
        valid = head_in_range(fixed.shape, dx, dy)
        head_fixed = shift(fixed, -dx, -dy)
        head_index = shift(free_index, -dx, -dy)
        for row, col in zip(*np.nonzero(valid)):
            tail_v, head_v = fixed[row, col], head_fixed[row, col]
            if tail_v == 0 and head_v == 0:
                pairs.append((int(free_index[row, col]), int(head_index[row, col]), c))
            elif tail_v == 0:
                disagree_cost[free_index[row, col], 0 if head_v == 1 else 1] += c
            elif head_v == 0:
                disagree_cost[head_index[row, col], 0 if tail_v == 1 else 1] += c
            elif tail_v != head_v:
                constant += c
    return pairs, disagree_cost, constant


def _batch_energy(
    bits: np.ndarray,
    pairs: list[tuple[int, int, float]],
    disagree_cost: np.ndarray,
    linear: np.ndarray,
    constant: float,
) -> np.ndarray:
    energy = np.full(bits.shape[0], constant)
    energy += np.where(bits, disagree_cost[:, 1], disagree_cost[:, 0]).sum(axis=1)
    spins = np.where(bits, 1.0, -1.0)
    energy += spins @ linear
    if pairs:
        I = np.array([p[0] for p in pairs])
        J = np.array([p[1] for p in pairs])
        C = np.array([p[2] for p in pairs])
        energy += (bits[:, I] != bits[:, J]) @ C
    return energy


def _enumerate_min(
    n: int,
    pairs: list[tuple[int, int, float]],
    disagree_cost: np.ndarray,
    linear: np.ndarray,
    constant: float,
) -> tuple[float, list[np.ndarray]]:
    best = np.inf
    argmins: list[np.ndarray] = []
    for _, bits in _bit_batches(n):
        energy = _batch_energy(bits, pairs, disagree_cost, linear, constant)
        low = float(energy.min())
        if low < best - TIE_TOLERANCE:
            best = low
            argmins = []
        if low <= best + TIE_TOLERANCE:
            best = min(best, low)
            argmins.extend(bits[energy <= best + TIE_TOLERANCE])
    return best, argmins


def enumerate_ground_state(
    noise: NoiseField,
    epsilon: float,
    bc: BoundaryCondition,
    stencil: Stencil | StencilKind | str = StencilKind.LATTICE4,
    energy_mode: EnergyMode | str = EnergyMode.CONTINUUM_BV,
) -> tuple[float, list[np.ndarray]]:
    """Minimum energy over all 2^n configurations of the box and every minimizer.

    Returns:
        ``(min_energy, argmins)`` with each argmin a ±1 int8 array of the box shape.
    """
    stencil = _as_stencil(stencil)
    h, w = noise.shape
    _check_cap(h * w, MAX_GROUND_STATE_CELLS, "Box")
    margin = stencil.reach if bc.is_fixed else 0
    fixed = bc.frame(h, w, margin).astype(np.int64)
    # frame-frame pairs are not part of the energy, so the constant is dropped
    pairs, disagree_cost, _ = _pair_terms(fixed, stencil, pair_factor(energy_mode))

    linear = -epsilon * (noise.values * noise.spacing**2).ravel()
    best, argmins = _enumerate_min(h * w, pairs, disagree_cost, linear, 0.0)
    configs = [np.where(bits, 1, -1).astype(np.int8).reshape(h, w) for bits in argmins]
    logger.debug(f"Ground-state oracle: {len(configs)} minimizers at energy {best}")
    return best, configs


def enumerate_sr(
    noise: NoiseField,
    R: float,
    center: tuple[int, int] | None = None,
    stencil: Stencil | StencilKind | str = StencilKind.LATTICE4,
) -> tuple[float, list[list[tuple[int, int]]]]:
    """max over nonempty M in the ball of |∫_M ξ| / per(M), with every maximizing set.

    With ξ ≡ 0 on the ball the value is 0 and the maximizer is the center cell.
    """
    stencil = _as_stencil(stencil)
    center = center or noise.central_cell
    cells = discrete_ball(center, R)
    _check_cap(len(cells), MAX_SUBSET_CELLS, "Ball")
    xi = np.array([noise.cell_value(x, y) for x, y in cells]) * noise.spacing**2
    if not np.any(xi):
        return 0.0, [[center]]

    index = {cell: i for i, cell in enumerate(cells)}
    pairs: list[tuple[int, int, float]] = []
    outward = np.zeros(len(cells))
    for (dx, dy), weight in stencil.items():
        for i, (x, y) in enumerate(cells):
            for head in ((x + dx, y + dy), (x - dx, y - dy)):
                if head not in index:
                    outward[i] += weight
            if (x + dx, y + dy) in index:
                pairs.append((i, index[(x + dx, y + dy)], weight))

    best = -np.inf
    maximizers: list[np.ndarray] = []
    I = np.array([p[0] for p in pairs], dtype=np.int64)
    J = np.array([p[1] for p in pairs], dtype=np.int64)
    C = np.array([p[2] for p in pairs])
    for first, bits in _bit_batches(len(cells)):
        if first == 0:
            bits = bits[1:]
        perimeter = bits @ outward + ((bits[:, I] != bits[:, J]) @ C if pairs else 0.0)
        ratio = np.abs(bits @ xi) / perimeter
        high = float(ratio.max())
        if high > best + TIE_TOLERANCE:
            best, maximizers = high, []
        if high >= best - TIE_TOLERANCE:
            best = max(best, high)
            maximizers.extend(bits[ratio >= best - TIE_TOLERANCE])
    sets = [sorted(cell for cell, on in zip(cells, bits) if on) for bits in maximizers]
    return best, sets


def enumerate_constrained_perimeter(
    spin: SpinField,
    inside: np.ndarray,
    stencil: Stencil | StencilKind | str = StencilKind.LATTICE4,
) -> tuple[float, list[np.ndarray]]:
    """Least per(·; B̄) with every cell outside the mask frozen to ``spin``.

    per(·; B̄) counts stencil pairs of the box with at least one cell in the mask.
    """
    stencil = _as_stencil(stencil)
    inside = np.asarray(inside, dtype=bool)
    n = int(np.count_nonzero(inside))
    _check_cap(n, MAX_CONSTRAINED_CELLS, "Ball interior")
    fixed = np.where(inside, 0, spin.values).astype(np.int64)
    pairs, disagree_cost, _ = _pair_terms(fixed, stencil, 1.0)
    best, argmins = _enumerate_min(n, pairs, disagree_cost, np.zeros(n), 0.0)
    configs = []
    for bits in argmins:
        values = spin.values.astype(np.int8).copy()
        values[inside] = np.where(bits, 1, -1)
        configs.append(values)
    return best, configs


def enumerate_min_cut(graph: CutGraph) -> tuple[float, list[np.ndarray]]:
    """Minimum cut capacity over all source sides, with every minimizing grid-node mask."""
    n = graph.grid_size
    _check_cap(n, MAX_GRAPH_NODES, "Graph")
    arcs = list(graph.iter_arcs())
    tails = np.array([u for u, _, _ in arcs], dtype=np.int64)
    heads = np.array([v for _, v, _ in arcs], dtype=np.int64)
    caps = np.array([c for _, _, c in arcs])

    best = np.inf
    minimizers: list[np.ndarray] = []
    for _, bits in _bit_batches(n):
        side = np.concatenate(
            [bits, np.ones((bits.shape[0], 1), bool), np.zeros((bits.shape[0], 1), bool)], axis=1
        )
        cut = (side[:, tails] & ~side[:, heads]) @ caps if arcs else np.zeros(bits.shape[0])
        low = float(cut.min())
        if low < best - TIE_TOLERANCE:
            best, minimizers = low, []
        if low <= best + TIE_TOLERANCE:
            best = min(best, low)
            minimizers.extend(m.reshape(graph.shape) for m in bits[cut <= best + TIE_TOLERANCE])
    return best, minimizers
