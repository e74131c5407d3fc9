"""Experiment registry, per-sample measurements and the resumable runner.

Every experiment expands its parameters into a list of parameter points. Sample ``i`` of
every point uses the seed derived from ``(master_seed, experiment, i)``, so all points of
a sweep see the same noise realizations. Records are written by the parent process in
task order.
"""

import logging
import math
import time
from collections.abc import Callable
from dataclasses import dataclass
from pathlib import Path
from typing import Any

import numpy as np

from ..errors import ConfigurationError
from ..models.data_models import BoundaryKind, ExperimentName, ExperimentRecord, NoiseKind, record_key
from ..models.experiment_config import (
    ExperimentConfig,
    ExperimentParams,
    GeometrySuiteParams,
    LemmaSuiteParams,
    LstarParams,
    MlSweepParams,
    NoiseCheckParams,
    OracleSuiteParams,
    PinnedSupParams,
    SrScalingParams,
    SrTailsParams,
)
from ..models.fields import BoundaryCondition, NoiseField, SpinField
from ..models.geometry_models import LineConfig
from ..models.record_store import RecordStore
from ..models.settings import get_settings
from ..utils.parallel import map_ordered
from ..utils.seeding import derive_sample_seed, make_generator
from .geometry import (
    averaged_normal,
    bubble_detect,
    constrained_min_perimeter,
    density_check,
    eta_audit,
    height_bound_check,
    jump_edges,
    modulus_table,
    normal_tilt_check,
    rasterize_line,
    strong_excess,
)
from .groundstate import as_stencil, ball_cells_mask, ground_state, local_minimality_audit
from .mincut import CutGraph, GridArcs, configuration_energy, head_in_range, solve_min_cut
from .noise import sample_noise
from .oracle import (
    enumerate_constrained_perimeter,
    enumerate_ground_state,
    enumerate_min_cut,
    enumerate_sr,
)
from .weaknorm import dyadic_scales, encode_cells_rle, pinned_sup_scales, pinned_sup_space, s_r

logger = logging.getLogger(__name__)

AGREEMENT_TOLERANCE = 1e-9

Parameters = dict[str, Any]
Scalars = dict[str, Any]


# ============================================================================
# SAMPLE MEASUREMENTS
# ============================================================================


def _noise_check(p: Parameters, seed: int) -> Scalars:
    size = p["size"]
    values = sample_noise(p["noise_kind"], size, size, seed).values
    scalars: Scalars = {
        "value": float(values[size // 2, size // 2]),
        "mean": float(values.mean()),
        "second_moment": float((values**2).mean()),
    }
    for lag in p["lags"]:
        scalars[f"lag{lag}_product"] = float((values[:, :-lag] * values[:, lag:]).mean())
    return scalars


def _ml_sweep(p: Parameters, seed: int) -> Scalars:
    L, epsilon = p["L"], p["epsilon"]
    noise = NoiseField.zeros(L, L) if epsilon == 0 else sample_noise(p["noise_kind"], L, L, seed)
    plus = ground_state(noise, epsilon, BoundaryCondition.plus(), p["stencil"], p["energy_mode"])
    minus = ground_state(noise, epsilon, BoundaryCondition.minus(), p["stencil"], p["energy_mode"])
    row, col = L // 2, L // 2
    return {
        "disagreement": int(plus.values[row, col] != minus.values[row, col]),
        "coupling_violations": int(np.count_nonzero(plus.values < minus.values)),
        "plus_fraction": float(np.mean(plus.values == 1)),
    }


def _sr(p: Parameters, seed: int) -> Scalars:
    R = p["R"]
    side = 2 * R + 1
    result = s_r(sample_noise(p["noise_kind"], side, side, seed), R, None, p["stencil"])
    return {
        "s_r": result.value,
        "iterations": result.iterations,
        "sign": result.sign,
        "optimizer_size": len(result.optimizer),
        "optimizer_rle": [list(run) for run in encode_cells_rle(result.optimizer)],
    }


def _pinned_sup(p: Parameters, seed: int) -> Scalars:
    R_max, W = p["R_max"], p["W"]
    largest = dyadic_scales(R_max)[-1]
    side = 2 * (W + largest) + 1
    noise = sample_noise(p["noise_kind"], side, side, seed)
    scales = pinned_sup_scales(noise, None, R_max, p["stencil"])
    space = pinned_sup_space(noise, R_max, W, p["stencil"])
    single = s_r(noise, largest, None, p["stencil"]).value
    violations = int(space.value < math.log(2.0) ** -0.5 * scales.value - 1e-12)
    violations += int(scales.value < math.log(largest) ** -0.75 * single - 1e-12)
    return {
        "pinned_scales": scales.value,
        "pinned_space": space.value,
        "s_r_max": single,
        "violations": violations,
    }


def _edge_midpoints(spin: SpinField, center: tuple[float, float], reach: float) -> np.ndarray:
    tails, heads, _ = jump_edges(spin)
    mids = (tails + heads) / 2
    if len(mids) == 0:
        return mids
    near = np.hypot(mids[:, 0] - center[0], mids[:, 1] - center[1]) <= reach
    return mids[near]


def _geometry_suite(p: Parameters, seed: int) -> Scalars:
    L, epsilon = p["L"], p["epsilon"]
    noise = sample_noise(p["noise_kind"], L, L, seed)
    spin = ground_state(noise, epsilon, BoundaryCondition.plus(), p["stencil"], p["energy_mode"])
    cx, cy = spin.central_cell
    center = (cx + 0.5, cy + 0.5)
    R = L / 4
    rng = make_generator(seed, stream=1)

    audit = eta_audit(spin, (cx, cy), R, p["n_balls"], derive_sample_seed(seed, "eta-balls", 0))
    candidates = _edge_midpoints(spin, center, R)

    n_density = min(p["n_density_points"], len(candidates))
    chosen = rng.choice(len(candidates), size=n_density, replace=False) if n_density else []
    density_passes = sum(
        int(density_check(spin, tuple(candidates[k]), p["density_radius"], audit.eta_hat).all_ok)
        for k in chosen
    )

    pairs = []
    if len(candidates) >= 2:
        for _ in range(p["modulus_pairs"]):
            i, j = rng.choice(len(candidates), size=2, replace=False)
            pairs.append((tuple(candidates[i]), tuple(candidates[j])))
    table = modulus_table(spin, pairs, epsilon)
    ratios = [row.ratio for row in table.rows if row.ratio is not None]

    bubbles = bubble_detect(spin, center, R, noise, epsilon, check=False)
    minimality = local_minimality_audit(
        spin, noise, epsilon, p["n_balls"], derive_sample_seed(seed, "minimality-balls", 0)
    )
    return {
        "eta_hat": audit.eta_hat,
        "interface_edges": int(len(jump_edges(spin)[0])),
        "density_points": n_density,
        "density_passes": density_passes,
        "modulus_pairs": len(table.rows),
        "modulus_excluded": table.excluded_non_unique,
        "modulus_max_difference": table.max_difference,
        "modulus_max_ratio": max(ratios, default=0.0),
        "bubbles": len(bubbles),
        "bubble_energy_violations": sum(1 for b in bubbles if b.energy_ok is False),
        "minimality_violations": len(minimality.violations),
    }


def _admissible_polyline(
    rng: np.random.Generator, chord: float, eta: float, points: int
) -> list[tuple[float, float]]:
    """Random polyline from (0, 0) to (chord, 0) no longer than (1 + η)·chord."""
    xs = np.sort(rng.uniform(0.0, chord, points))
    ys = rng.normal(0.0, chord, points)

    def build(scale: float) -> np.ndarray:
        inner = np.column_stack([xs, scale * ys])
        return np.vstack([[0.0, 0.0], inner, [chord, 0.0]])

    def length(pts: np.ndarray) -> float:
        return float(np.hypot(*np.diff(pts, axis=0).T).sum())

    target = (1.0 + eta) * chord
    lo, hi = 0.0, 1.0
    if length(build(hi)) <= target:
        lo = hi
    else:
        for _ in range(60):
            mid = (lo + hi) / 2
            if length(build(mid)) <= target:
                lo = mid
            else:
                hi = mid
    return [(float(x), float(y)) for x, y in build(lo)]


def _lemma_suite(p: Parameters, seed: int) -> Scalars:
    rng = make_generator(seed)

    eta = float(rng.uniform(0.0, 1.0))
    chord = float(rng.uniform(0.5, 10.0))
    polyline = _admissible_polyline(rng, chord, eta, p["polyline_points"])
    height = height_bound_check((0.0, 0.0), (chord, 0.0), eta, polyline)

    theta = float(rng.uniform(0.0, 2.0 * math.pi))
    offset = float(rng.uniform(-0.25, 0.25))
    line_a = LineConfig.from_angle(theta, (offset * math.cos(theta), offset * math.sin(theta)))
    theta_b = theta + float(rng.uniform(-0.2, 0.2))
    shift = float(rng.uniform(-0.1, 0.1))
    line_b = LineConfig.from_angle(
        theta_b, ((offset + shift) * math.cos(theta_b), (offset + shift) * math.sin(theta_b))
    )
    tilt = normal_tilt_check(line_a, line_b)

    # averaged normal minimizes the strong excess over all unit vectors
    size = 16
    phi = float(rng.uniform(0.0, 2.0 * math.pi))
    anchor = (size / 2 + float(rng.uniform(-1, 1)), size / 2 + float(rng.uniform(-1, 1)))
    values = rasterize_line(LineConfig.from_angle(phi, anchor), (size, size)).values.copy()
    flips = rng.integers(0, size, size=(3, 2))
    values[flips[:, 0], flips[:, 1]] *= -1
    spin = SpinField.from_array(values)
    mids = _edge_midpoints(spin, (size / 2, size / 2), size)
    identity_ok = True
    if len(mids):
        nearest = mids[np.argmin(np.hypot(mids[:, 0] - size / 2, mids[:, 1] - size / 2))]
        x = (float(nearest[0]), float(nearest[1]))
        normal = averaged_normal(spin, x, 3.0)
        if normal.unique and normal.vector is not None:
            at_normal = strong_excess(spin, normal.vector, x, 3.0)
            grid = min(
                strong_excess(spin, (math.cos(a), math.sin(a)), x, 3.0)
                for a in np.linspace(0.0, 2.0 * math.pi, 360, endpoint=False)
            )
            identity_ok = at_normal <= grid + 1e-9

    violations = int(not height.ok) + int(not tilt.ok) + int(not identity_ok)
    return {
        "eta": eta,
        "height_ok": height.ok,
        "height_ratio": height.h / height.bound if height.bound > 0 else 0.0,
        "tilt_ok": tilt.ok,
        "tilt_skipped": tilt.skipped,
        "normal_identity_ok": identity_ok,
        "violations": violations,
    }


def _random_grid_graph(rng: np.random.Generator, side: int) -> CutGraph:
    """Grid network with random terminal and 4-neighbour capacities, rounded to create ties."""
    shape = (side, side)
    families = tuple(
        GridArcs(offset, np.where(head_in_range(shape, *offset), rng.uniform(0.0, 1.0, shape).round(1), 0.0))
        for offset in ((1, 0), (-1, 0), (0, 1), (0, -1))
    )
    return CutGraph(
        shape=shape,
        source_caps=rng.uniform(0.0, 2.0, shape).round(1),
        sink_caps=rng.uniform(0.0, 2.0, shape).round(1),
        grid_arcs=families,
    )


_FRAMES = {
    BoundaryKind.PLUS: BoundaryCondition.plus,
    BoundaryKind.MINUS: BoundaryCondition.minus,
    BoundaryKind.FREE: BoundaryCondition.free,
}


def _oracle_suite(p: Parameters, seed: int) -> Scalars:
    rng = make_generator(seed, stream=1)
    size, epsilon, stencil, mode = p["size"], p["epsilon"], p["stencil"], p["energy_mode"]

    noise = sample_noise(NoiseKind.DISCRETIZED_WN, size, size, seed)
    bc = _FRAMES[BoundaryKind(p["boundary"])]()
    state = ground_state(noise, epsilon, bc, stencil, mode)
    energy = configuration_energy(state.values, noise, epsilon, bc, as_stencil(stencil), mode)
    oracle_energy, argmins = enumerate_ground_state(noise, epsilon, bc, stencil, mode)
    agree_ground_state = abs(energy - oracle_energy) <= AGREEMENT_TOLERANCE * (1 + abs(energy)) and any(
        np.array_equal(state.values, a) for a in argmins
    )

    radius = p["ball_radius"]
    side = 2 * math.floor(radius) + 1
    ball_noise = sample_noise(NoiseKind.DISCRETIZED_WN, side, side, derive_sample_seed(seed, "ball", 0))
    solver_sr = s_r(ball_noise, radius, None, stencil).value
    oracle_sr, _ = enumerate_sr(ball_noise, radius, None, stencil)
    agree_sr = abs(solver_sr - oracle_sr) <= AGREEMENT_TOLERANCE

    box = 5
    spin = SpinField.from_array(np.where(rng.random((box, box)) < 0.5, 1, -1))
    inside = ball_cells_mask(spin.shape, (box // 2, box // 2), radius)
    solver_per, _ = constrained_min_perimeter(spin, inside, stencil)
    oracle_per, _ = enumerate_constrained_perimeter(spin, inside, stencil)
    agree_constrained = abs(solver_per - oracle_per) <= AGREEMENT_TOLERANCE

    graph = _random_grid_graph(rng, 3)
    cut = solve_min_cut(graph)
    oracle_cut, minimizers = enumerate_min_cut(graph)
    canonical = np.logical_and.reduce(minimizers)
    agree_min_cut = abs(cut.value - oracle_cut) <= AGREEMENT_TOLERANCE and bool(
        np.array_equal(cut.mask, canonical)
    )

    agreements = [agree_ground_state, agree_sr, agree_constrained, agree_min_cut]
    return {
        "agree_ground_state": bool(agree_ground_state),
        "agree_sr": bool(agree_sr),
        "agree_constrained": bool(agree_constrained),
        "agree_min_cut": bool(agree_min_cut),
        "violations": sum(1 for ok in agreements if not ok),
    }


# ============================================================================
# REGISTRY
# ============================================================================


def _ml_points(params: MlSweepParams) -> list[Parameters]:
    extra = {"threshold": params.threshold} if isinstance(params, LstarParams) else {}
    return [
        {
            "epsilon": epsilon,
            "L": L,
            "stencil": params.stencil.value,
            "energy_mode": params.energy_mode.value,
            "noise_kind": params.noise_kind.value,
            **extra,
        }
        for epsilon in params.epsilons
        for L in params.L_grid
    ]


def _noise_points(params: NoiseCheckParams) -> list[Parameters]:
    if any(not 1 <= lag < params.size for lag in params.lags):
        raise ConfigurationError(f"lags must lie in [1, {params.size})", key_path="params.lags")
    return [
        {"noise_kind": kind.value, "size": params.size, "lags": list(params.lags)}
        for kind in params.noise_kinds
    ]


def _sr_scaling_points(params: SrScalingParams) -> list[Parameters]:
    return [
        {"R": R, "noise_kind": params.noise_kind.value, "stencil": params.stencil.value}
        for R in params.R_list
    ]


def _sr_tails_points(params: SrTailsParams) -> list[Parameters]:
    return [
        {
            "R": params.R,
            "noise_kind": params.noise_kind.value,
            "stencil": params.stencil.value,
            "t_grid": list(params.t_grid),
            "sigma2": params.sigma2,
        }
    ]


def _pinned_points(params: PinnedSupParams) -> list[Parameters]:
    return [
        {
            "R_max": params.R_max,
            "W": params.W,
            "noise_kind": params.noise_kind.value,
            "stencil": params.stencil.value,
            "t_grid": list(params.t_grid),
            "sigma2": params.sigma2,
        }
    ]


def _geometry_points(params: GeometrySuiteParams) -> list[Parameters]:
    shared = params.model_dump(mode="json", exclude={"epsilons", "n_samples"})
    return [{"epsilon": epsilon, **shared} for epsilon in params.epsilons]


def _lemma_points(params: LemmaSuiteParams) -> list[Parameters]:
    return [{"polyline_points": params.polyline_points}]


def _oracle_points(params: OracleSuiteParams) -> list[Parameters]:
    return [
        {
            "epsilon": epsilon,
            "stencil": stencil.value,
            "size": params.size,
            "energy_mode": mode.value,
            "boundary": boundary.value,
            "ball_radius": params.ball_radius,
        }
        for stencil in params.stencils
        for mode in params.energy_modes
        for boundary in params.boundaries
        for epsilon in params.epsilons
    ]


@dataclass(frozen=True)
class ExperimentDefinition:
    """How an experiment expands its parameters and measures one sample."""

    points: Callable[[Any], list[Parameters]]
    sample: Callable[[Parameters, int], Scalars]


EXPERIMENTS: dict[ExperimentName, ExperimentDefinition] = {
    ExperimentName.NOISE_CHECK: ExperimentDefinition(_noise_points, _noise_check),
    ExperimentName.ML_SWEEP: ExperimentDefinition(_ml_points, _ml_sweep),
    ExperimentName.LSTAR: ExperimentDefinition(_ml_points, _ml_sweep),
    ExperimentName.SR_SCALING: ExperimentDefinition(_sr_scaling_points, _sr),
    ExperimentName.SR_TAILS: ExperimentDefinition(_sr_tails_points, _sr),
    ExperimentName.PINNED_SUP: ExperimentDefinition(_pinned_points, _pinned_sup),
    ExperimentName.GEOMETRY_SUITE: ExperimentDefinition(_geometry_points, _geometry_suite),
    ExperimentName.LEMMA_SUITE: ExperimentDefinition(_lemma_points, _lemma_suite),
    ExperimentName.ORACLE_SUITE: ExperimentDefinition(_oracle_points, _oracle_suite),
}


# ============================================================================
# RUNNER
# ============================================================================

Task = tuple[str, int, int, Parameters]


def build_tasks(experiment: ExperimentName, master_seed: int, params: ExperimentParams) -> list[Task]:
    """All (experiment, master seed, sample index, parameters) tasks in record order."""
    points = EXPERIMENTS[experiment].points(params)
    return [
        (experiment.value, master_seed, index, point)
        for point in points
        for index in range(params.n_samples)
    ]


def run_task(task: Task) -> ExperimentRecord:
    """Measure one sample; module-level so worker processes can run it."""
    experiment, master_seed, index, parameters = task
    name = ExperimentName(experiment)
    seed = derive_sample_seed(master_seed, experiment, index)
    started = time.perf_counter()
    scalars = EXPERIMENTS[name].sample(parameters, seed)
    return ExperimentRecord(
        experiment=name,
        master_seed=master_seed,
        sample_index=index,
        parameters=parameters,
        scalars=scalars,
        wall_time=time.perf_counter() - started,
    )


@dataclass
class RunResult:
    """Where a run wrote its records and how many it added or skipped."""

    path: Path
    written: int
    skipped: int
    records: list[ExperimentRecord]


def default_output_path(config: ExperimentConfig) -> Path:
    if config.output:
        return Path(config.output)
    return Path(get_settings().output_dir) / f"{config.experiment.value}.jsonl"


def run_experiment(
    config: ExperimentConfig,
    params: ExperimentParams,
    output: str | Path | None = None,
    workers: int | None = None,
) -> RunResult:
    """Run the configured experiment, resuming from any records already on disk."""
    path = Path(output) if output is not None else default_output_path(config)
    store = RecordStore(path)
    done = store.completed_keys()
    tasks = build_tasks(config.experiment, config.master_seed, params)
    pending = [task for task in tasks if record_key(*task) not in done]
    skipped = len(tasks) - len(pending)
    if skipped:
        logger.info(f"Resuming {config.experiment.value}: {skipped} of {len(tasks)} samples already recorded")
    logger.info(f"Running {config.experiment.value}: {len(pending)} samples -> {path}")

    n_workers = workers or config.workers
    written = store.extend(map_ordered(run_task, pending, n_workers))
    logger.info(f"Finished {config.experiment.value}: wrote {written} records")
    return RunResult(path=path, written=written, skipped=skipped, records=store.read())
