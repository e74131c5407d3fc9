"""Min-cut engine on grid-structured s-t networks and the energy-to-cut builders.

Conventions
-----------
* Grid nodes are laid out like the arrays they encode: node ``row * width + col``. The
  source has id ``n`` and the sink ``n + 1`` where ``n`` is the number of grid nodes.
* A grid arc family ``GridArcs(offset=(dx, dy), capacity=c)`` holds the arcs
  ``(col, row) -> (col + dx, row + dy)`` with capacity ``c[row, col]``.
* Source side means spin +1.
* Hard constraints are terminal arcs flagged in ``source_hard``/``sink_hard``. Their
  capacity is the sentinel ``hard_capacity = (sum of all finite capacities) + 1``.
* ``offset`` is the constant with ``energy(σ) = cut capacity + offset``.

The solver is Boykov-Kolmogorov (PyMaxflow). To report the source-side-minimal minimum
cut, the reversed network is solved and its sink tree is read back: the nodes that reach
the sink of the reversed residual network are exactly the nodes reachable from the source
in the original residual network.

Stencil weights (per unordered direction):

=========  ===============  ==========================  =======================
stencil    axis             diagonal                    knight (2,1)-type
=========  ===============  ==========================  =======================
lattice4   1                -                           -
crofton8   √2 - 1           1 - 1/√2                    -
crofton16  √5 - 2           √5 - 3/√2                   (1 + √2 - √5)/2
=========  ===============  ==========================  =======================

They make the cut length of a half-plane exact for normals along every direction class
of the stencil: ``Σ_e w_e |e·ν| = 1``.
"""

import logging
import math
from collections.abc import Hashable, Iterator, Sequence
from dataclasses import dataclass, field
from functools import cached_property
from pathlib import Path

import maxflow
import numpy as np

from ..errors import InvalidArgumentError, InvariantViolation
from ..models.data_models import EnergyMode, StencilKind
from ..models.fields import BoundaryCondition, NoiseField
from ..models.settings import get_settings
from ..utils.validators import require, validate_epsilon

logger = logging.getLogger(__name__)

SQRT2 = math.sqrt(2.0)
SQRT5 = math.sqrt(5.0)

AXIS = ((1, 0), (0, 1))
DIAGONAL = ((1, 1), (1, -1))
KNIGHT = ((2, 1), (1, 2), (2, -1), (1, -2))

CROFTON8_AXIS = SQRT2 - 1.0
CROFTON8_DIAGONAL = 1.0 - 1.0 / SQRT2
CROFTON16_AXIS = SQRT5 - 2.0
CROFTON16_DIAGONAL = SQRT5 - 3.0 / SQRT2
CROFTON16_KNIGHT = (1.0 + SQRT2 - SQRT5) / 2.0

DUALITY_TOLERANCE = 1e-9


@dataclass(frozen=True)
class Stencil:
    """Neighbourhood with one weight per unordered direction."""

    kind: StencilKind
    directions: tuple[tuple[int, int], ...]
    weights: tuple[float, ...]

    @classmethod
    def from_kind(cls, kind: StencilKind | str) -> "Stencil":
        kind = StencilKind(kind)
        if kind == StencilKind.LATTICE4:
            return cls(kind, AXIS, (1.0, 1.0))
        if kind == StencilKind.CROFTON8:
            return cls(kind, AXIS + DIAGONAL, (CROFTON8_AXIS,) * 2 + (CROFTON8_DIAGONAL,) * 2)
        return cls(
            kind,
            AXIS + DIAGONAL + KNIGHT,
            (CROFTON16_AXIS,) * 2 + (CROFTON16_DIAGONAL,) * 2 + (CROFTON16_KNIGHT,) * 4,
        )

    @property
    def reach(self) -> int:
        """Largest coordinate offset of any direction."""
        return max(max(abs(dx), abs(dy)) for dx, dy in self.directions)

    def items(self) -> Iterator[tuple[tuple[int, int], float]]:
        yield from zip(self.directions, self.weights)

    def length_per_unit(self, normal: tuple[float, float]) -> float:
        """Cut length per unit interface length of a half-plane with this normal."""
        nx, ny = normal
        return sum(w * abs(dx * nx + dy * ny) for (dx, dy), w in self.items())


def pair_factor(energy_mode: EnergyMode | str) -> float:
    """Energy of one unit of disagreeing stencil weight."""
    return 4.0 if EnergyMode(energy_mode) == EnergyMode.RFIM else 2.0


def shift(array: np.ndarray, dx: int, dy: int) -> np.ndarray:
    """``out[row, col] = array[row - dy, col - dx]``, zero where out of range."""
    out = np.zeros_like(array)
    h, w = array.shape
    if abs(dx) >= w or abs(dy) >= h:
        return out
    dst_rows = slice(max(dy, 0), h + min(dy, 0))
    src_rows = slice(max(-dy, 0), h + min(-dy, 0))
    dst_cols = slice(max(dx, 0), w + min(dx, 0))
    src_cols = slice(max(-dx, 0), w + min(-dx, 0))
    out[dst_rows, dst_cols] = array[src_rows, src_cols]
    return out


def head_in_range(shape: tuple[int, int], dx: int, dy: int) -> np.ndarray:
    """Mask of tails whose head ``(col + dx, row + dy)`` lies in the array."""
    h, w = shape
    rows = np.arange(h)[:, None] + dy
    cols = np.arange(w)[None, :] + dx
    return (rows >= 0) & (rows < h) & (cols >= 0) & (cols < w)


@dataclass(frozen=True, eq=False)
class GridArcs:
    """All arcs of one offset, capacities indexed by the tail."""

    offset: tuple[int, int]
    capacity: np.ndarray

    def reversed(self) -> "GridArcs":
        dx, dy = self.offset
        return GridArcs((-dx, -dy), shift(self.capacity, dx, dy))


@dataclass(frozen=True, eq=False)
class CutGraph:
    """Capacitated s-t network over a grid of nodes."""

    shape: tuple[int, int]
    source_caps: np.ndarray
    sink_caps: np.ndarray
    grid_arcs: tuple[GridArcs, ...] = ()
    arcs: tuple[tuple[int, int, float], ...] = ()
    source_hard: np.ndarray | None = None
    sink_hard: np.ndarray | None = None
    offset: float = 0.0
    cell_origin: tuple[int, int] = (0, 0)
    margin: int = 0
    labels: tuple[Hashable, ...] | None = field(default=None, compare=False)

    @classmethod
    def from_arcs(
        cls,
        node_count: int,
        arcs: Sequence[tuple[int, int, float]],
        source: int,
        sink: int,
    ) -> "CutGraph":
        """Generic network over nodes ``0 .. node_count-1`` with designated terminals."""
        if source == sink:
            raise InvalidArgumentError("source and sink must differ")
        if not (0 <= source < node_count and 0 <= sink < node_count):
            raise InvalidArgumentError("source and sink must be nodes of the graph")
        inner = [v for v in range(node_count) if v not in (source, sink)]
        index = {v: i for i, v in enumerate(inner)}
        n = len(inner)
        index[source], index[sink] = n, n + 1
        source_caps = np.zeros((1, n))
        sink_caps = np.zeros((1, n))
        explicit: list[tuple[int, int, float]] = []
        for u, v, cap in arcs:
            if u not in index or v not in index:
                raise InvalidArgumentError(f"Arc ({u}, {v}) references an unknown node")
            iu, iv = index[u], index[v]
            if iu == n and iv < n:
                source_caps[0, iv] += cap
            elif iv == n + 1 and iu < n:
                sink_caps[0, iu] += cap
            else:
                explicit.append((iu, iv, float(cap)))
        return cls(
            shape=(1, n),
            source_caps=source_caps,
            sink_caps=sink_caps,
            arcs=tuple(explicit),
            labels=(*inner, source, sink),
        )

    @property
    def grid_size(self) -> int:
        return self.shape[0] * self.shape[1]

    @property
    def node_count(self) -> int:
        return self.grid_size + 2

    @property
    def source(self) -> int:
        return self.grid_size

    @property
    def sink(self) -> int:
        return self.grid_size + 1

    def cell_of(self, node: int) -> tuple[int, int]:
        """Lattice cell of a grid node."""
        if not 0 <= node < self.grid_size:
            raise InvalidArgumentError(f"Node {node} is not a grid node")
        row, col = divmod(node, self.shape[1])
        return (self.cell_origin[0] + col, self.cell_origin[1] + row)

    def _hard(self, which: np.ndarray | None) -> np.ndarray:
        return np.zeros(self.shape, dtype=bool) if which is None else which

    @cached_property
    def finite_total(self) -> float:
        total = float(self.source_caps.sum() + self.sink_caps.sum())
        total += sum(float(fam.capacity.sum()) for fam in self.grid_arcs)
        total += sum(cap for _, _, cap in self.arcs)
        return total

    @property
    def hard_capacity(self) -> float:
        """Sentinel capacity of hard-constraint arcs."""
        return self.finite_total + 1.0

    def terminal_caps(self) -> tuple[np.ndarray, np.ndarray]:
        """Source and sink capacities with hard arcs set to the sentinel."""
        hard = self.hard_capacity
        source = np.where(self._hard(self.source_hard), hard, self.source_caps)
        sink = np.where(self._hard(self.sink_hard), hard, self.sink_caps)
        return source, sink

    def validate(self) -> tuple[bool, str]:
        """Check the structural and capacity invariants."""
        for name in ("source_caps", "sink_caps", "source_hard", "sink_hard"):
            array = getattr(self, name)
            if array is not None and array.shape != self.shape:
                return False, f"{name} has shape {array.shape}, expected {self.shape}"
        arrays = [self.source_caps, self.sink_caps] + [fam.capacity for fam in self.grid_arcs]
        for fam in self.grid_arcs:
            if fam.capacity.shape != self.shape:
                return False, f"Arc family {fam.offset} has shape {fam.capacity.shape}"
            if fam.offset == (0, 0):
                return False, "Arc family with zero offset"
        for array in arrays:
            if not np.all(np.isfinite(array)) or np.any(array < 0):
                return False, "Capacities must be finite and nonnegative"
        for u, v, cap in self.arcs:
            if not (0 <= u < self.node_count and 0 <= v < self.node_count) or u == v:
                return False, f"Malformed arc ({u}, {v})"
            if not math.isfinite(cap) or cap < 0:
                return False, f"Arc ({u}, {v}) has invalid capacity {cap}"
        if self.labels is not None and len(self.labels) != self.node_count:
            return False, "Label table does not cover every node"
        return True, ""

    def iter_arcs(self) -> Iterator[tuple[int, int, float]]:
        """Every arc with positive capacity as (tail, head, capacity)."""
        h, w = self.shape
        source_caps, sink_caps = self.terminal_caps()
        for row, col in zip(*np.nonzero(source_caps)):
            yield self.source, int(row * w + col), float(source_caps[row, col])
        for row, col in zip(*np.nonzero(sink_caps)):
            yield int(row * w + col), self.sink, float(sink_caps[row, col])
        for fam in self.grid_arcs:
            dx, dy = fam.offset
            for row, col in zip(*np.nonzero(fam.capacity)):
                yield int(row * w + col), int((row + dy) * w + col + dx), float(fam.capacity[row, col])
        for u, v, cap in self.arcs:
            if cap > 0:
                yield u, v, cap

    def cut_capacity(self, source_mask: np.ndarray) -> float:
        """Capacity of the cut whose source side holds the grid nodes in ``source_mask``."""
        mask = np.asarray(source_mask, dtype=bool).reshape(self.shape)
        source_caps, sink_caps = self.terminal_caps()
        total = float(source_caps[~mask].sum() + sink_caps[mask].sum())
        for fam in self.grid_arcs:
            dx, dy = fam.offset
            head_outside = ~shift(mask, -dx, -dy)
            total += float(fam.capacity[mask & head_outside].sum())
        flat = np.append(mask.ravel(), [True, False])
        total += sum(cap for u, v, cap in self.arcs if flat[u] and not flat[v])
        return total

    def reversed(self) -> "CutGraph":
        """Network with every arc reversed and the terminals exchanged."""
        n = self.grid_size
        swap = {n: n + 1, n + 1: n}
        return CutGraph(
            shape=self.shape,
            source_caps=self.sink_caps,
            sink_caps=self.source_caps,
            grid_arcs=tuple(fam.reversed() for fam in self.grid_arcs),
            arcs=tuple((swap.get(v, v), swap.get(u, u), cap) for u, v, cap in self.arcs),
            source_hard=self.sink_hard,
            sink_hard=self.source_hard,
            offset=self.offset,
            cell_origin=self.cell_origin,
            margin=self.margin,
        )


@dataclass(frozen=True, eq=False)
class MinCutResult:
    """Max-flow value and the source-side-minimal minimum cut."""

    value: float
    mask: np.ndarray = field(repr=False)
    graph: CutGraph = field(repr=False)

    @cached_property
    def source_side(self) -> frozenset[Hashable]:
        """Source side as node ids, or as the caller's labels for ``from_arcs`` graphs."""
        ids = [int(i) for i in np.flatnonzero(self.mask)] + [self.graph.source]
        if self.graph.labels is None:
            return frozenset(ids)
        return frozenset(self.graph.labels[i] for i in ids)

    @property
    def energy(self) -> float:
        return self.value + self.graph.offset


def _structure(dx: int, dy: int) -> np.ndarray:
    r = max(abs(dx), abs(dy))
    structure = np.zeros((2 * r + 1, 2 * r + 1))
    structure[r + dy, r + dx] = 1.0
    return structure


def _max_flow_sink_tree(graph: CutGraph) -> tuple[float, np.ndarray]:
    """Max-flow value and the grid nodes in the final sink tree."""
    h, w = graph.shape
    n = graph.grid_size
    direct = sum(cap for u, v, cap in graph.arcs if u == n and v == n + 1)
    if n == 0:
        return direct, np.zeros(graph.shape, dtype=bool)

    g = maxflow.Graph[float]()
    nodeids = g.add_grid_nodes((h, w))
    for fam in graph.grid_arcs:
        if np.any(fam.capacity):
            g.add_grid_edges(
                nodeids, weights=fam.capacity, structure=_structure(*fam.offset), symmetric=False
            )
    source_caps, sink_caps = graph.terminal_caps()
    g.add_grid_tedges(nodeids, source_caps, sink_caps)
    for u, v, cap in graph.arcs:
        if u < n and v < n:
            g.add_edge(u, v, cap, 0.0)
        elif u == n and v < n:
            g.add_tedge(v, cap, 0.0)
        elif u < n and v == n + 1:
            g.add_tedge(u, 0.0, cap)
        # arcs into the source or out of the sink never cross a cut
    flow = float(g.maxflow())
    return flow + direct, np.asarray(g.get_grid_segments(nodeids), dtype=bool)


def solve_min_cut(graph: CutGraph, check_duality: bool | None = None) -> MinCutResult:
    """Solve max-flow and return the canonical (source-side-minimal) minimum cut.

    Args:
        graph: A valid network.
        check_duality: Verify flow value == cut capacity. Defaults to the
            ``debug_checks`` setting.

    Returns:
        ``MinCutResult`` with the flow value and the source-side mask over grid nodes.
    """
    ok, message = graph.validate()
    if not ok:
        raise InvalidArgumentError(f"Malformed graph: {message}")

    value, mask = _max_flow_sink_tree(graph.reversed())
    result = MinCutResult(value=value, mask=mask, graph=graph)

    if check_duality if check_duality is not None else get_settings().debug_checks:
        capacity = graph.cut_capacity(mask)
        if abs(capacity - value) > DUALITY_TOLERANCE * (1.0 + abs(value)):
            raise InvariantViolation(f"Flow value {value} differs from cut capacity {capacity}")
        logger.debug(f"Duality verified: flow {value:.12g} = cut {capacity:.12g}")
    if value >= graph.hard_capacity:
        raise InvariantViolation("Minimum cut severs a hard constraint")
    return result


# ============================================================================
# ENERGY BUILDERS
# ============================================================================


def _fixed_layout(
    noise: NoiseField,
    bc: BoundaryCondition,
    stencil: Stencil,
    frozen: np.ndarray | None,
) -> tuple[int, np.ndarray, np.ndarray]:
    """Margin, padded fixed values (0 = free) and frame mask."""
    h, w = noise.shape
    margin = stencil.reach if bc.is_fixed else 0
    fixed = bc.frame(h, w, margin)
    frame_mask = np.ones(fixed.shape, dtype=bool)
    frame_mask[margin : margin + h, margin : margin + w] = False
    if frozen is not None:
        frozen = np.asarray(frozen)
        if frozen.shape != (h, w) or not np.all(np.isin(frozen, (-1, 0, 1))):
            raise InvalidArgumentError("frozen must match the noise extent with values in {-1, 0, 1}")
        fixed[margin : margin + h, margin : margin + w] = frozen
    return margin, fixed, frame_mask


def _pair_families(
    shape: tuple[int, int], frame_mask: np.ndarray, stencil: Stencil, factor: float
) -> list[GridArcs]:
    families = []
    for (dx, dy), weight in stencil.items():
        for ox, oy in ((dx, dy), (-dx, -dy)):
            valid = head_in_range(shape, ox, oy) & ~(frame_mask & shift(frame_mask, -ox, -oy))
            families.append(GridArcs((ox, oy), np.where(valid, factor * weight, 0.0)))
    return families


def build_energy_graph(
    noise: NoiseField,
    epsilon: float,
    bc: BoundaryCondition,
    stencil: Stencil,
    energy_mode: EnergyMode | str = EnergyMode.CONTINUUM_BV,
    frozen: np.ndarray | None = None,
) -> CutGraph:
    """Encode the boxed energy as a cut problem.

    The energy is ``Σ_pairs c·[σ_x ≠ σ_y] - ε Σ_x ξ_x σ_x`` with ``c = 4w`` (RFIM) or
    ``c = 2w`` (continuum BV) for stencil weight ``w``. Pairs with one cell on the frame
    count against the boundary value; frame-frame pairs are omitted. ``frozen`` pins box
    cells to ±1 (0 leaves a cell free) for constrained subproblems.
    """
    require(validate_epsilon(epsilon))
    h, w = noise.shape
    margin, fixed, frame_mask = _fixed_layout(noise, bc, stencil, frozen)
    xi = noise.values * noise.spacing**2

    source_caps = np.zeros(fixed.shape)
    sink_caps = np.zeros(fixed.shape)
    box = (slice(margin, margin + h), slice(margin, margin + w))
    source_caps[box] = 2.0 * epsilon * np.maximum(xi, 0.0)
    sink_caps[box] = 2.0 * epsilon * np.maximum(-xi, 0.0)

    return CutGraph(
        shape=fixed.shape,
        source_caps=source_caps,
        sink_caps=sink_caps,
        grid_arcs=tuple(_pair_families(fixed.shape, frame_mask, stencil, pair_factor(energy_mode))),
        source_hard=fixed == 1,
        sink_hard=fixed == -1,
        offset=-epsilon * float(np.abs(xi).sum()),
        cell_origin=(noise.origin[0] - margin, noise.origin[1] - margin),
        margin=margin,
    )


def build_constrained_graph(values: np.ndarray, inside: np.ndarray, stencil: Stencil) -> CutGraph:
    """Pure-perimeter cut problem with every cell outside ``inside`` pinned to ``values``."""
    values = np.asarray(values)
    inside = np.asarray(inside, dtype=bool)
    if inside.shape != values.shape:
        raise InvalidArgumentError(f"Mask shape {inside.shape} != configuration shape {values.shape}")
    h, w = values.shape
    frozen = np.where(inside, 0, values).astype(np.int8)
    return build_energy_graph(
        NoiseField.zeros(w, h), 0.0, BoundaryCondition.free(), stencil, EnergyMode.CONTINUUM_BV, frozen
    )


def decode_spins(graph: CutGraph, result: MinCutResult, box_shape: tuple[int, int]) -> np.ndarray:
    """Spin array of the box from a solved energy graph."""
    m = graph.margin
    h, w = box_shape
    return np.where(result.mask[m : m + h, m : m + w], 1, -1).astype(np.int8)


def configuration_energy(
    values: np.ndarray,
    noise: NoiseField,
    epsilon: float,
    bc: BoundaryCondition,
    stencil: Stencil,
    energy_mode: EnergyMode | str = EnergyMode.CONTINUUM_BV,
) -> float:
    """Energy of a spin configuration, evaluated directly from its definition."""
    values = np.asarray(values)
    if values.shape != noise.shape:
        raise InvalidArgumentError(f"Configuration shape {values.shape} != noise shape {noise.shape}")
    h, w = noise.shape
    margin, padded, frame_mask = _fixed_layout(noise, bc, stencil, None)
    padded = padded.astype(np.int64)
    padded[margin : margin + h, margin : margin + w] = values
    factor = pair_factor(energy_mode)

    pair = 0.0
    for (dx, dy), weight in stencil.items():
        valid = head_in_range(padded.shape, dx, dy) & ~(frame_mask & shift(frame_mask, -dx, -dy))
        disagree = padded != shift(padded, -dx, -dy)
        pair += factor * weight * int(np.count_nonzero(valid & disagree))
    field_term = -epsilon * float(np.sum(noise.values * noise.spacing**2 * values))
    return pair + field_term


def stencil_cut_length(
    values: np.ndarray, stencil: Stencil, region: np.ndarray | None = None
) -> float:
    """Weighted number of disagreeing stencil pairs inside the array.

    With ``region`` given, only pairs with at least one cell in the region count.
    """
    values = np.asarray(values)
    total = 0.0
    for (dx, dy), weight in stencil.items():
        valid = head_in_range(values.shape, dx, dy)
        if region is not None:
            valid &= region | shift(region, -dx, -dy)
        disagree = values != shift(values, -dx, -dy)
        total += weight * int(np.count_nonzero(valid & disagree))
    return total


def set_perimeter(mask: np.ndarray, stencil: Stencil) -> float:
    """Stencil cut length of a cell set given by a boolean mask, with empty surroundings."""
    r = stencil.reach
    padded = np.pad(np.asarray(mask, dtype=np.int8), r)
    return stencil_cut_length(padded, stencil)


def dump_graph(graph: CutGraph, path: str | Path) -> int:
    """Write ``tail head capacity`` lines, one arc per line, after a ``#`` header.

    Returns:
        Number of arcs written.
    """
    count = 0
    with Path(path).open("w") as fh:
        fh.write(
            f"# nodes {graph.node_count} source {graph.source} sink {graph.sink} "
            f"hard {graph.hard_capacity!r} offset {graph.offset!r}\n"
        )
        for u, v, cap in graph.iter_arcs():
            fh.write(f"{u} {v} {cap!r}\n")
            count += 1
    logger.info(f"Dumped {count} arcs to {path}")
    return count
