"""Phase-boundary geometry of spin fields.

The jump set of a spin field is the set of unit lattice edges separating a +1 cell from a
-1 cell inside the box. Each edge carries the unit normal pointing from the -1 side into
the +1 side, and ``∫∇m`` over a region is the sum of ``2 · length · normal`` over the
jump edges in it, so that ``∫|∇m| = 2 × jump length``.

Edges are traced with the +1 side on the left. At a saddle vertex (four jump edges) the
path turns left, which keeps diagonally touching +1 cells on separate components.
"""

import logging
import math
from collections import defaultdict
from collections.abc import Sequence
from fractions import Fraction
from functools import cache
from pathlib import Path

import numpy as np
import pandas as pd

from ..errors import InvalidArgumentError, InvariantViolation, PreconditionError
from ..models.data_models import EnergyMode, StencilKind
from ..models.fields import BoundaryCondition, NoiseField, SpinField
from ..models.geometry_models import (
    AveragedNormal,
    BoundaryComponent,
    BoundaryCurve,
    Bubble,
    CampanatoStep,
    DensityCheck,
    EtaAudit,
    EtaBall,
    Excess,
    FewJumpsResult,
    HeightBoundCheck,
    LineConfig,
    ModulusRow,
    ModulusTable,
    TiltCheck,
)
from ..utils.seeding import make_generator
from .groundstate import ball_cells_mask
from .mincut import (
    Stencil,
    build_constrained_graph,
    decode_spins,
    pair_factor,
    solve_min_cut,
    stencil_cut_length,
)

logger = logging.getLogger(__name__)

Point = tuple[float, float]
Vertex = tuple[int, int]

NON_UNIQUE_TOLERANCE = 1e-9
FEW_JUMPS_CONSTANT = 32.0
TILT_CONSTANT = 8.0
DENSITY_PERIMETER_CONSTANT = 1.0
TILT_LINE_REACH = 0.25
TILT_MAX_DISTANCE = 0.25


# ============================================================================
# JUMP EDGES AND TRACING
# ============================================================================


def jump_edges(spin: SpinField) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Oriented jump edges as ``(tails, heads, normals)``, each of shape (n, 2).

    Traversal runs from tail to head with the +1 cell on the left.
    """
    v = spin.values
    ox, oy = spin.origin
    mids, normals = [], []

    rows, cols = np.nonzero(v[:, 1:] != v[:, :-1])
    nx = np.where(v[rows, cols + 1] == 1, 1.0, -1.0)
    mids.append(np.column_stack([ox + cols + 1.0, oy + rows + 0.5]))
    normals.append(np.column_stack([nx, np.zeros_like(nx)]))

    rows, cols = np.nonzero(v[1:, :] != v[:-1, :])
    ny = np.where(v[rows + 1, cols] == 1, 1.0, -1.0)
    mids.append(np.column_stack([ox + cols + 0.5, oy + rows + 1.0]))
    normals.append(np.column_stack([np.zeros_like(ny), ny]))

    mid = np.concatenate(mids)
    normal = np.concatenate(normals)
    direction = np.column_stack([normal[:, 1], -normal[:, 0]])
    return mid - direction / 2, mid + direction / 2, normal


def _rot_left(t: Vertex) -> Vertex:
    return (-t[1], t[0])


def _rot_right(t: Vertex) -> Vertex:
    return (t[1], -t[0])


def _edge_key(tail: Vertex, head: Vertex) -> tuple[str, int, int]:
    """Unoriented key: ('v', X, Y) for (X,Y)-(X,Y+1), ('h', X, Y) for (X,Y)-(X+1,Y)."""
    if tail[0] == head[0]:
        return ("v", tail[0], min(tail[1], head[1]))
    return ("h", min(tail[0], head[0]), tail[1])


@cache
def _crossed_elements(dx: int, dy: int) -> tuple[tuple[str, int, int], ...]:
    """Lattice edges and vertices met by the segment between the centers of two cells.

    Coordinates are relative to the tail cell's lower-left corner.
    """
    elements = set()
    half = Fraction(1, 2)
    if dx:
        for k in range(math.ceil(min(half, half + dx)), math.floor(max(half, half + dx)) + 1):
            s = (k - half) / dx
            y = half + dy * s
            elements.add(("p", k, int(y)) if y.denominator == 1 else ("v", k, math.floor(y)))
    if dy:
        for k in range(math.ceil(min(half, half + dy)), math.floor(max(half, half + dy)) + 1):
            s = (k - half) / dy
            x = half + dx * s
            elements.add(("p", int(x), k) if x.denominator == 1 else ("h", math.floor(x), k))
    return tuple(sorted(elements))


def _trace_paths(spin: SpinField) -> list[tuple[list[Vertex], bool]]:
    tails, heads, _ = jump_edges(spin)
    edges = [
        ((int(round(a[0])), int(round(a[1]))), (int(round(b[0])), int(round(b[1]))))
        for a, b in zip(tails, heads)
    ]
    outgoing: dict[Vertex, dict[Vertex, int]] = defaultdict(dict)
    for index, (tail, head) in enumerate(edges):
        outgoing[tail][(head[0] - tail[0], head[1] - tail[1])] = index

    def successor(index: int) -> int | None:
        tail, head = edges[index]
        t = (head[0] - tail[0], head[1] - tail[1])
        options = outgoing.get(head, {})
        for turn in (_rot_left(t), t, _rot_right(t)):
            if turn in options:
                return options[turn]
        return None

    used = [False] * len(edges)

    def follow(start: int) -> tuple[list[Vertex], bool]:
        path = list(edges[start])
        used[start] = True
        current = start
        while True:
            nxt = successor(current)
            if nxt is None:
                return path, False
            if nxt == start:
                return path, True
            if used[nxt]:
                raise InvariantViolation(f"Jump-set tracing revisited edge {edges[nxt]}")
            used[nxt] = True
            path.append(edges[nxt][1])
            current = nxt

    ox, oy = spin.origin
    x_end, y_end = ox + spin.width, oy + spin.height

    def on_box_boundary(v: Vertex) -> bool:
        return v[0] in (ox, x_end) or v[1] in (oy, y_end)

    order = sorted(range(len(edges)), key=lambda i: edges[i])
    paths = [follow(i) for i in order if on_box_boundary(edges[i][0]) and not used[i]]
    paths += [follow(i) for i in order if not used[i]]
    return paths


def extract_jump_set(spin: SpinField, stencil: Stencil | StencilKind | str | None = None) -> BoundaryCurve:
    """Trace all jump edges into maximal paths and loops.

    Each component gets its number of unit edges and its share of the stencil cut length.
    A disagreeing stencil pair is shared equally among the components owning the jump
    edges and vertices its center-to-center segment meets.
    """
    stencil = _as_stencil(stencil or spin.stencil or StencilKind.LATTICE4)
    paths = _trace_paths(spin)

    edge_owner: dict[tuple[str, int, int], int] = {}
    vertex_owners: dict[Vertex, set[int]] = defaultdict(set)
    for cid, (vertices, _) in enumerate(paths):
        for tail, head in zip(vertices, vertices[1:]):
            edge_owner[_edge_key(tail, head)] = cid
        for vertex in vertices:
            vertex_owners[vertex].add(cid)

    shares = [0.0] * len(paths)
    v = spin.values
    ox, oy = spin.origin
    h, w = spin.shape
    for (dx, dy), weight in stencil.items():
        r0, r1 = max(0, -dy), h - max(0, dy)
        c0, c1 = max(0, -dx), w - max(0, dx)
        tail_block = v[r0:r1, c0:c1]
        head_block = v[r0 + dy : r1 + dy, c0 + dx : c1 + dx]
        for row, col in zip(*np.nonzero(tail_block != head_block)):
            x, y = ox + c0 + int(col), oy + r0 + int(row)
            owners: set[int] = set()
            for kind, ex, ey in _crossed_elements(dx, dy):
                if kind == "p":
                    owners |= vertex_owners.get((x + ex, y + ey), set())
                elif (kind, x + ex, y + ey) in edge_owner:
                    owners.add(edge_owner[(kind, x + ex, y + ey)])
            if not owners:
                logger.warning(f"Stencil pair at ({x}, {y}) meets no traced component")
                continue
            for cid in owners:
                shares[cid] += weight / len(owners)

    components = [
        BoundaryComponent(
            vertices=vertices,
            closed=closed,
            lattice_length=float(len(vertices) - 1),
            stencil_length=share,
        )
        for (vertices, closed), share in zip(paths, shares)
    ]
    return BoundaryCurve(
        components=components,
        stencil=stencil.kind,
        total_lattice_length=float(sum(c.lattice_length for c in components)),
        total_stencil_length=stencil_cut_length(v, stencil),
    )


def boundary_curve_csv(curve: BoundaryCurve, path: str | Path) -> None:
    """Write ordered vertex lists as ``component,x,y`` rows."""
    rows = [
        (cid, x, y)
        for cid, component in enumerate(curve.components)
        for x, y in component.vertices
    ]
    pd.DataFrame(rows, columns=["component", "x", "y"]).to_csv(path, index=False)


# ============================================================================
# HELPERS
# ============================================================================


def _as_stencil(stencil: Stencil | StencilKind | str) -> Stencil:
    return stencil if isinstance(stencil, Stencil) else Stencil.from_kind(stencil)


def _segment_distances(tails: np.ndarray, heads: np.ndarray, point: Point) -> np.ndarray:
    p = np.asarray(point, dtype=float)
    d = heads - tails
    length2 = np.einsum("ij,ij->i", d, d)
    t = np.clip(np.einsum("ij,ij->i", p - tails, d) / np.where(length2 > 0, length2, 1.0), 0.0, 1.0)
    return np.hypot(*(tails + t[:, None] * d - p).T)


def _clipped_lengths(tails: np.ndarray, heads: np.ndarray, center: Point, radius: float) -> np.ndarray:
    """Length of each segment inside the closed disc."""
    d = heads - tails
    f = tails - np.asarray(center, dtype=float)
    a = np.einsum("ij,ij->i", d, d)
    b = 2.0 * np.einsum("ij,ij->i", f, d)
    c = np.einsum("ij,ij->i", f, f) - radius * radius
    disc = b * b - 4.0 * a * c
    root = np.sqrt(np.maximum(disc, 0.0))
    t1 = (-b - root) / (2.0 * a)
    t2 = (-b + root) / (2.0 * a)
    overlap = np.clip(np.minimum(t2, 1.0) - np.maximum(t1, 0.0), 0.0, None)
    return np.where(disc > 0, overlap * np.sqrt(a), 0.0)


def _ball_values(spin: SpinField, center: Point, R: float) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Centers (x, y) and spins of the cells whose centers lie within R of ``center``."""
    cx, cy = center
    xs = np.arange(math.floor(cx - R - 0.5), math.ceil(cx + R) + 1)
    ys = np.arange(math.floor(cy - R - 0.5), math.ceil(cy + R) + 1)
    gx, gy = np.meshgrid(xs, ys)
    keep = (gx + 0.5 - cx) ** 2 + (gy + 0.5 - cy) ** 2 <= R * R
    gx, gy = gx[keep], gy[keep]
    ox, oy = spin.origin
    if gx.size == 0:
        raise InvalidArgumentError(f"Ball of radius {R} at {center} holds no cell")
    if gx.min() < ox or gy.min() < oy or gx.max() >= ox + spin.width or gy.max() >= oy + spin.height:
        raise InvalidArgumentError(f"Ball of radius {R} at {center} leaves the box")
    return gx + 0.5, gy + 0.5, spin.values[gy - oy, gx - ox].astype(np.int64)


def _line_values(line: LineConfig, px: np.ndarray, py: np.ndarray) -> np.ndarray:
    s = (px - line.anchor[0]) * line.normal[0] + (py - line.anchor[1]) * line.normal[1]
    return np.where(s >= 0, line.orientation, -line.orientation)


def rasterize_line(
    line: LineConfig,
    shape: tuple[int, int],
    origin: tuple[int, int] = (0, 0),
    bc: BoundaryCondition | None = None,
) -> SpinField:
    """Spin field equal to m_line at every cell center."""
    rows, cols = np.indices(shape)
    values = _line_values(line, origin[0] + cols + 0.5, origin[1] + rows + 0.5)
    return SpinField.from_array(values, origin=origin, bc=bc)


# ============================================================================
# NORMALS AND EXCESS
# ============================================================================


def averaged_normal(spin: SpinField, x: Point, radius: float = 1.0) -> AveragedNormal:
    """ν̄ = ∫_{B(x)} ∇m / |∫_{B(x)} ∇m|, non-unique when the integral vanishes.

    Raises:
        InvalidArgumentError: if no jump edge comes within ``radius`` of x.
    """
    tails, heads, normals = jump_edges(spin)
    if len(tails) == 0 or _segment_distances(tails, heads, x).min() > radius:
        raise InvalidArgumentError(f"Point {x} is not within {radius} of the jump set")
    lengths = _clipped_lengths(tails, heads, x, radius)
    integral = (2.0 * lengths[:, None] * normals).sum(axis=0)
    magnitude = float(np.hypot(*integral))
    unique = magnitude >= NON_UNIQUE_TOLERANCE
    return AveragedNormal(
        vector=(float(integral[0] / magnitude), float(integral[1] / magnitude)) if unique else None,
        unique=unique,
        integral=(float(integral[0]), float(integral[1])),
        magnitude=magnitude,
    )


def l1_excess(spin: SpinField, line: LineConfig, center: Point, R: float) -> float:
    """(1/R²) Σ over the ball's cells of |m - m_line(cell center)|."""
    px, py, m = _ball_values(spin, center, R)
    return float(np.abs(m - _line_values(line, px, py)).sum()) / (R * R)


def excess(spin: SpinField, line: LineConfig, center: Point, R: float) -> Excess:
    """l1 excess with the interface flag."""
    _, _, m = _ball_values(spin, center, R)
    return Excess(
        l1_excess=l1_excess(spin, line, center, R),
        center=center,
        radius=R,
        interface_present=bool(np.any(m != m[0])),
    )


def best_line_fit(
    spin: SpinField, center: Point, R: float, n_theta: int, n_d: int
) -> tuple[LineConfig, Excess]:
    """Exhaustive search over oriented lines θ_i = πi/n_θ, offsets d_j = R·j/n_d, |j| ≤ n_d.

    Ties go to the smallest (angle index, offset index, orientation) with orientation +1
    before -1. Angles and offsets are built from reduced fractions so a refined grid
    reproduces the coarse candidates exactly.
    """
    if n_theta < 1 or n_d < 1:
        raise InvalidArgumentError("n_theta and n_d must be >= 1")
    px, py, m = _ball_values(spin, center, R)
    n_cells = m.size
    offsets = np.array([R * float(Fraction(j, n_d)) for j in range(-n_d, n_d + 1)])

    best: tuple[float, int, int, int] | None = None
    for i in range(n_theta):
        theta = math.pi * float(Fraction(i, n_theta))
        nu = (math.cos(theta), math.sin(theta))
        ax = center[0] + offsets[:, None] * nu[0]
        ay = center[1] + offsets[:, None] * nu[1]
        plus_side = (px[None, :] - ax) * nu[0] + (py[None, :] - ay) * nu[1] >= 0
        mismatches = np.count_nonzero(plus_side != (m[None, :] == 1), axis=1)
        for j, mism in enumerate(mismatches):
            for orientation, wrong in ((1, int(mism)), (-1, n_cells - int(mism))):
                value = 2.0 * wrong / (R * R)
                if best is None or value < best[0]:
                    best = (value, i, j, orientation)

    assert best is not None
    _, i, j, orientation = best
    theta = math.pi * float(Fraction(i, n_theta))
    nu = (math.cos(theta), math.sin(theta))
    d = float(offsets[j])
    line = LineConfig(
        anchor=(center[0] + d * nu[0], center[1] + d * nu[1]), normal=nu, orientation=orientation
    )
    return line, excess(spin, line, center, R)


def strong_excess(spin: SpinField, nu_bar: Point, center: Point, r: float) -> float:
    """(1/r) Σ over jump edges in the ball of |ν_e - ν̄|² · 2 · (length inside the ball)."""
    if abs(math.hypot(*nu_bar) - 1.0) > 1e-9:
        raise InvalidArgumentError(f"nu_bar must be a unit vector, got {nu_bar}")
    _ball_values(spin, center, r)
    tails, heads, normals = jump_edges(spin)
    if len(tails) == 0:
        return 0.0
    lengths = _clipped_lengths(tails, heads, center, r)
    squared = ((normals - np.asarray(nu_bar)) ** 2).sum(axis=1)
    return float((squared * 2.0 * lengths).sum()) / r


# ============================================================================
# FEW JUMPS AND CAMPANATO STEP
# ============================================================================


def _scan_radii(R: float) -> list[int]:
    start = math.floor(R / 16) + 1
    return [r for r in range(max(start, 1), math.ceil(15 * R / 16)) if r < 15 * R / 16]


def _circle_trace(
    spin: SpinField, line: LineConfig, center: Point, r: float
) -> tuple[int, float, list[Point]]:
    """Crossings, ∫_{∂B_r} |m - m_line| and crossing points along the sampled circle."""
    n = max(64, math.ceil(16 * math.pi * r))
    phi = 2.0 * math.pi * np.arange(n) / n
    px = center[0] + r * np.cos(phi)
    py = center[1] + r * np.sin(phi)
    cx, cy = np.floor(px).astype(np.int64), np.floor(py).astype(np.int64)
    ox, oy = spin.origin
    if cx.min() < ox or cy.min() < oy or cx.max() >= ox + spin.width or cy.max() >= oy + spin.height:
        raise InvalidArgumentError(f"Circle of radius {r} at {center} leaves the box")
    m = spin.values[cy - oy, cx - ox].astype(np.int64)
    boundary_l1 = float(np.abs(m - _line_values(line, cx + 0.5, cy + 0.5)).sum()) * 2.0 * math.pi * r / n

    changes = np.flatnonzero(m != np.roll(m, 1))
    points = []
    for k in changes:
        angle = 2.0 * math.pi * (k - 0.5) / n
        points.append((center[0] + r * math.cos(angle), center[1] + r * math.sin(angle)))
    return len(changes), boundary_l1, points


def _qualifying_radii(
    spin: SpinField, line: LineConfig, center: Point, R: float, allowed: set[int], first_only: bool
) -> tuple[float, list[FewJumpsResult]]:
    threshold = FEW_JUMPS_CONSTANT * R * l1_excess(spin, line, center, R)
    found = []
    scanned = 0
    for r in _scan_radii(R):
        scanned += 1
        crossings, boundary_l1, points = _circle_trace(spin, line, center, r)
        if crossings in allowed and boundary_l1 <= threshold + 1e-12:
            found.append(
                FewJumpsResult(
                    found=True,
                    radius=float(r),
                    crossings=crossings,
                    boundary_l1=boundary_l1,
                    threshold=threshold,
                    crossing_points=points,
                    radii_scanned=scanned,
                )
            )
            if first_only:
                break
    return threshold, found


def few_jumps_radius(
    spin: SpinField,
    line: LineConfig,
    center: Point,
    R: float,
    require_crossings: int | None = None,
) -> FewJumpsResult:
    """First radius in (R/16, 15R/16) where the circle meets the jump set 0 or 2 times cheaply.

    ``found=False`` means no radius qualified; that is an outcome, not an error.
    """
    allowed = {require_crossings} if require_crossings is not None else {0, 2}
    threshold, found = _qualifying_radii(spin, line, center, R, allowed, first_only=True)
    if found:
        return found[0]
    return FewJumpsResult(found=False, threshold=threshold, radii_scanned=len(_scan_radii(R)))


def campanato_step(spin: SpinField, center: Point, R: float, line: LineConfig) -> CampanatoStep:
    """Replace ``line`` by the line through the two crossing points on the largest good circle.

    Raises:
        PreconditionError: if no radius qualifies with exactly two crossings.
    """
    _, found = _qualifying_radii(spin, line, center, R, {2}, first_only=False)
    if not found:
        raise PreconditionError(f"No radius in (R/16, 15R/16) with two crossings for R={R}")
    chosen = found[-1]
    (x1, y1), (x2, y2) = chosen.crossing_points
    length = math.hypot(x2 - x1, y2 - y1)
    normal = (-(y2 - y1) / length, (x2 - x1) / length)
    nu = line.effective_normal
    if normal[0] * nu[0] + normal[1] * nu[1] < 0:
        normal = (-normal[0], -normal[1])
    new_line = LineConfig(anchor=(x1, y1), normal=normal, orientation=1)
    assert chosen.radius is not None
    return CampanatoStep(
        radius=chosen.radius,
        new_line=new_line,
        tilt=math.hypot(nu[0] - normal[0], nu[1] - normal[1]),
        excess_out=l1_excess(spin, new_line, center, chosen.radius),
    )


# ============================================================================
# ETA AUDIT AND DENSITY
# ============================================================================


def constrained_min_perimeter(
    spin: SpinField, inside: np.ndarray, stencil: Stencil | StencilKind | str
) -> tuple[float, np.ndarray]:
    """Least per(·; B̄) among configurations equal to ``spin`` outside the mask.

    per(·; B̄) counts stencil pairs of the box with at least one cell in the mask.
    """
    stencil = _as_stencil(stencil)
    graph = build_constrained_graph(spin.values, inside, stencil)
    competitor = decode_spins(graph, solve_min_cut(graph), spin.shape)
    return stencil_cut_length(competitor, stencil, region=inside), competitor


def _perimeter_ratio(perimeter: float, competitor: float) -> float:
    if competitor <= 0:
        return 1.0 if perimeter <= 0 else math.inf
    return perimeter / competitor


def eta_audit(
    spin: SpinField,
    center: tuple[int, int],
    R: float,
    n_balls: int,
    seed: int,
    stencil: Stencil | StencilKind | str | None = None,
    balls: Sequence[tuple[tuple[int, int], float]] | None = None,
) -> EtaAudit:
    """η̂ = max over balls of per(m; B̄)/per(m*; B̄) - 1, with 0/0 read as ratio 1.

    Random balls have radii in [max(2, R/8), max(2, R/2)] and centers drawn among the
    cells keeping them inside B_R(center). ``balls`` replaces the random draw.
    """
    stencil = _as_stencil(stencil or spin.stencil or StencilKind.LATTICE4)
    reach = math.floor(R)
    cx, cy = center
    if not (spin.contains(cx - reach, cy - reach) and spin.contains(cx + reach, cy + reach)):
        raise InvalidArgumentError(f"B_R with R={R} around {center} does not fit in the field extent")
    if balls is None:
        rng = make_generator(seed)
        lo, hi = max(2.0, R / 8), max(2.0, R / 2)
        balls = []
        for _ in range(n_balls):
            radius = float(rng.uniform(lo, hi))
            room = R - radius
            if room < 0:
                raise InvalidArgumentError(f"Ball radius {radius:.2f} does not fit in B_R with R={R}")
            while True:
                dx, dy = (int(v) for v in rng.integers(-math.floor(room), math.floor(room) + 1, size=2))
                if dx * dx + dy * dy <= room * room:
                    break
            balls.append(((center[0] + dx, center[1] + dy), radius))

    audited = []
    for cell, radius in balls:
        row, col = spin.index_of(*cell)
        inside = ball_cells_mask(spin.shape, (row, col), radius)
        perimeter = stencil_cut_length(spin.values, stencil, region=inside)
        competitor, _ = constrained_min_perimeter(spin, inside, stencil)
        audited.append(
            EtaBall(
                center=cell,
                radius=radius,
                perimeter=perimeter,
                competitor_perimeter=competitor,
                ratio=_perimeter_ratio(perimeter, competitor),
            )
        )
    eta_hat = max((ball.ratio - 1.0 for ball in audited), default=0.0)
    return EtaAudit(eta_hat=max(eta_hat, 0.0), balls=audited)


def density_check(
    spin: SpinField, x: Point, r: float, eta_hat: float, tolerance: float = 1e-9
) -> DensityCheck:
    """Volume and perimeter density bounds of the phases on B_r(x).

    Perimeter bounds: ``r/(2+η̂) ≤ ∫_{B_r}|∇m| ≤ 2(1+η̂)·2πr``.
    """
    if r < 2:
        raise InvalidArgumentError(f"Density radius must be >= 2, got {r}")
    tails, heads, normals = jump_edges(spin)
    on_jump_set = len(tails) > 0 and bool(_segment_distances(tails, heads, x).min() <= tolerance)
    if not on_jump_set:
        logger.warning(f"Density check point {x} is not on the jump set")

    _, _, m = _ball_values(spin, x, r)
    plus = float(np.mean(m == 1))
    minus = 1.0 - plus
    perimeter = 2.0 * float(_clipped_lengths(tails, heads, x, r).sum()) if len(tails) else 0.0
    volume_lower = 1.0 / (2.0 + eta_hat) ** 2
    perimeter_lower = DENSITY_PERIMETER_CONSTANT * r / (2.0 + eta_hat)
    perimeter_upper = 2.0 * (1.0 + eta_hat) * 2.0 * math.pi * r
    return DensityCheck(
        on_jump_set=on_jump_set,
        volume_ratio_lo_ok=min(plus, minus) >= volume_lower,
        volume_ratio_hi_ok=max(plus, minus) <= 1.0 - volume_lower,
        perimeter_lo_ok=perimeter >= perimeter_lower,
        perimeter_hi_ok=perimeter <= perimeter_upper,
        plus_fraction=plus,
        minus_fraction=minus,
        perimeter=perimeter,
        perimeter_lower=perimeter_lower,
        perimeter_upper=perimeter_upper,
        volume_lower=volume_lower,
        volume_upper=1.0 - volume_lower,
    )


# ============================================================================
# HEIGHT, TILT AND MODULUS
# ============================================================================


def _distance_to_segment(p: Point, a: Point, b: Point) -> float:
    return float(_segment_distances(np.array([a]), np.array([b]), p)[0])


def height_bound_check(A: Point, B: Point, eta: float, polyline: Sequence[Point]) -> HeightBoundCheck:
    """Compare the polyline's distance from [A, B] with √(η² + 2η)·|AB|.

    Raises:
        InvalidArgumentError: for η outside [0, 1], wrong endpoints or a polyline longer
            than (1 + η)|AB|.
    """
    if not 0 <= eta <= 1:
        raise InvalidArgumentError(f"eta must lie in [0, 1], got {eta}")
    if len(polyline) < 2:
        raise InvalidArgumentError("polyline needs at least two points")
    pts = np.asarray(polyline, dtype=float)
    if np.hypot(*(pts[0] - A)) > 1e-12 or np.hypot(*(pts[-1] - B)) > 1e-12:
        raise InvalidArgumentError("polyline must start at A and end at B")
    chord = math.dist(A, B)
    length = float(np.hypot(*np.diff(pts, axis=0).T).sum())
    if length > (1.0 + eta) * chord * (1.0 + 1e-12) + 1e-12:
        raise InvalidArgumentError(f"polyline length {length} exceeds (1+η)|AB| = {(1 + eta) * chord}")
    h = max(_distance_to_segment(tuple(p), A, B) for p in pts)
    bound = math.sqrt(eta * eta + 2.0 * eta) * chord
    return HeightBoundCheck(h=h, bound=bound, ok=h <= bound + 1e-9)


def _unit_circle_chord(line: LineConfig) -> tuple[float, tuple[Point, Point] | None]:
    """Distance of the line from the origin and its endpoints on the unit circle."""
    nx, ny = line.normal
    s0 = -(line.anchor[0] * nx + line.anchor[1] * ny)
    if abs(s0) > 1.0:
        return abs(s0), None
    foot = (-s0 * nx, -s0 * ny)
    half = math.sqrt(1.0 - s0 * s0)
    return abs(s0), (
        (foot[0] - half * ny, foot[1] + half * nx),
        (foot[0] + half * ny, foot[1] - half * nx),
    )


def normal_tilt_check(line_a: LineConfig, line_b: LineConfig) -> TiltCheck:
    """Tilt |ν - ν′| against the distance d of the two chords of the unit disc.

    d is the larger endpoint distance under the better matching of chord endpoints.
    Pairs outside the hypotheses (line A farther than 1/4 from the origin, line B missing
    the disc, d > 1/4) are reported as skipped.
    """
    dist_a, chord_a = _unit_circle_chord(line_a)
    _, chord_b = _unit_circle_chord(line_b)
    if dist_a > TILT_LINE_REACH or chord_a is None:
        return TiltCheck(d=None, tilt=None, ok=True, skipped=True, reason="line A misses B_1/4")
    if chord_b is None:
        return TiltCheck(d=None, tilt=None, ok=True, skipped=True, reason="line B misses B_1")
    (p1, p2), (q1, q2) = chord_a, chord_b
    d = min(
        max(math.dist(p1, q1), math.dist(p2, q2)),
        max(math.dist(p1, q2), math.dist(p2, q1)),
    )
    if d > TILT_MAX_DISTANCE:
        return TiltCheck(d=d, tilt=None, ok=True, skipped=True, reason="d > 1/4")
    nu, nu_b = line_a.normal, line_b.normal
    if nu[0] * nu_b[0] + nu[1] * nu_b[1] < 0:
        nu_b = (-nu_b[0], -nu_b[1])
    tilt = math.hypot(nu[0] - nu_b[0], nu[1] - nu_b[1])
    return TiltCheck(d=d, tilt=tilt, ok=tilt <= TILT_CONSTANT * d + 1e-12)


def modulus_shape(x: Point, y: Point, epsilon: float) -> float:
    """(ε·(log(|x|₊ + |y|₊))^(1/2)·(log |x - y|₊)^(11/4))^(1/2), |z|₊ = max(|z|, 2)."""
    size = math.log(max(math.hypot(*x), 2.0) + max(math.hypot(*y), 2.0)) ** 0.5
    separation = math.log(max(math.dist(x, y), 2.0)) ** 2.75
    return math.sqrt(epsilon * size * separation)


def modulus_table(
    spin: SpinField,
    pairs: Sequence[tuple[Point, Point]],
    epsilon: float,
    radius: float = 1.0,
    reference: Point | None = None,
) -> ModulusTable:
    """|ν̄(x) - ν̄(y)| against the modulus shape for each pair of jump points.

    Positions entering the shape are measured from ``reference``, by default the center of
    the box.
    """
    if reference is None:
        reference = (spin.origin[0] + spin.width / 2, spin.origin[1] + spin.height / 2)
    table = ModulusTable()
    for x, y in pairs:
        nx_, ny_ = averaged_normal(spin, x, radius), averaged_normal(spin, y, radius)
        if not (nx_.unique and ny_.unique):
            table.excluded_non_unique += 1
            continue
        assert nx_.vector is not None and ny_.vector is not None
        difference = math.dist(nx_.vector, ny_.vector)
        shape = modulus_shape(
            (x[0] - reference[0], x[1] - reference[1]),
            (y[0] - reference[0], y[1] - reference[1]),
            epsilon,
        )
        table.rows.append(
            ModulusRow(
                x=x,
                y=y,
                distance=math.dist(x, y),
                difference=difference,
                shape=shape,
                ratio=difference / shape if shape > 0 else None,
            )
        )
    return table


# ============================================================================
# BUBBLES
# ============================================================================


def _cells_inside(vertices: Sequence[Vertex]) -> list[Vertex]:
    """Cells whose centers lie inside a closed lattice polygon (even-odd rule)."""
    poly = np.asarray(vertices[:-1], dtype=float)
    xs = np.arange(int(poly[:, 0].min()), int(poly[:, 0].max()))
    ys = np.arange(int(poly[:, 1].min()), int(poly[:, 1].max()))
    gx, gy = np.meshgrid(xs + 0.5, ys + 0.5)
    inside = np.zeros(gx.shape, dtype=bool)
    for (x1, y1), (x2, y2) in zip(poly, np.roll(poly, -1, axis=0)):
        if y1 == y2:
            continue
        straddles = (y1 > gy) != (y2 > gy)
        crossing = x1 + (gy - y1) * (x2 - x1) / (y2 - y1)
        inside ^= straddles & (gx < crossing)
    return [(int(x - 0.5), int(y - 0.5)) for x, y in zip(gx[inside], gy[inside])]


def bubble_detect(
    spin: SpinField,
    center: Point,
    R: float,
    noise: NoiseField | None = None,
    epsilon: float | None = None,
    stencil: Stencil | StencilKind | str | None = None,
    energy_mode: EnergyMode | str | None = None,
    check: bool = True,
) -> list[Bubble]:
    """Closed jump-set components lying entirely inside B_R(center).

    Two perimeters are reported in different units. ``lattice_perimeter`` counts the unit
    lattice edges of the traced loop and ignores stencil and energy mode. ``perimeter`` is the
    pair-energy drop from flipping every enclosed cell: the stencil cut length times the pair
    factor of the energy mode (4 for rfim, 2 for continuum-bv). A single lattice4 cell thus has
    ``lattice_perimeter`` 4 and ``perimeter`` 16 or 8.

    With noise and ε given, a local minimizer must satisfy ``perimeter <= 2ε Σ_B ξσ``; a
    failure raises InvariantViolation when ``check`` is set.
    """
    stencil = _as_stencil(stencil or spin.stencil or StencilKind.LATTICE4)
    factor = pair_factor(energy_mode or spin.energy_mode or EnergyMode.CONTINUUM_BV)
    h, w = spin.shape
    margin = stencil.reach if spin.bc.is_fixed else 0
    padded = spin.bc.frame(h, w, margin).astype(np.int64)
    padded[margin : margin + h, margin : margin + w] = spin.values
    ox, oy = spin.origin

    bubbles = []
    for vertices, closed in _trace_paths(spin):
        if not closed or any(math.dist(v, center) > R for v in vertices):
            continue
        cells = _cells_inside(vertices)
        region = np.zeros(padded.shape, dtype=bool)
        for x, y in cells:
            region[y - oy + margin, x - ox + margin] = True
        flipped = np.where(region, -padded, padded)
        perimeter = factor * (
            stencil_cut_length(padded, stencil, region) - stencil_cut_length(flipped, stencil, region)
        )
        poly = np.asarray(vertices, dtype=float)
        area = 0.5 * abs(float(np.dot(poly[:-1, 0], poly[1:, 1]) - np.dot(poly[1:, 0], poly[:-1, 1])))

        field_integral = energy_ok = None
        if noise is not None and epsilon is not None:
            box_region = region[margin : margin + h, margin : margin + w]
            xi = noise.values * noise.spacing**2
            field_integral = float(xi[box_region].sum())
            gain = 2.0 * epsilon * float((xi * spin.values)[box_region].sum())
            energy_ok = perimeter <= gain + 1e-9 * (1.0 + abs(gain))
            if check and not energy_ok:
                raise InvariantViolation(
                    f"Bubble of area {area} has pair energy {perimeter} above its field gain {gain}"
                )
        bubbles.append(
            Bubble(
                vertices=vertices,
                cells=sorted(cells),
                area=area,
                lattice_perimeter=float(len(vertices) - 1),
                perimeter=perimeter,
                field_integral=field_integral,
                energy_ok=energy_ok,
            )
        )
    return bubbles
