"""Zero-temperature ground states, the order parameter m(L) and the correlation length."""

import logging
import math
from collections.abc import Sequence

import numpy as np

from ..errors import InvalidArgumentError, InvariantViolation
from ..models.data_models import (
    CorrelationLengthEstimate,
    EnergyMode,
    MinimalityAudit,
    MinimalityViolation,
    NoiseKind,
    OrderParameterEstimate,
    StencilKind,
)
from ..models.fields import BoundaryCondition, NoiseField, SpinField
from ..utils.parallel import map_ordered
from ..utils.seeding import derive_sample_seed, make_generator
from ..utils.validators import require, validate_epsilon, validate_increasing
from .mincut import (
    Stencil,
    build_energy_graph,
    configuration_energy,
    decode_spins,
    solve_min_cut,
)
from .noise import sample_noise

logger = logging.getLogger(__name__)

DEFAULT_STENCIL = StencilKind.CROFTON8
DEFAULT_ENERGY_MODE = EnergyMode.CONTINUUM_BV
IMPROVEMENT_TOLERANCE = 1e-9
SYMMETRY_TOLERANCE = 1e-9


def as_stencil(stencil: Stencil | StencilKind | str) -> Stencil:
    return stencil if isinstance(stencil, Stencil) else Stencil.from_kind(stencil)


def ground_state(
    noise: NoiseField,
    epsilon: float,
    bc: BoundaryCondition,
    stencil: Stencil | StencilKind | str = DEFAULT_STENCIL,
    energy_mode: EnergyMode | str = DEFAULT_ENERGY_MODE,
    frozen: np.ndarray | None = None,
) -> SpinField:
    """Global minimizer of the boxed energy, the canonical one among ties."""
    require(validate_epsilon(epsilon))
    stencil = as_stencil(stencil)
    graph = build_energy_graph(noise, epsilon, bc, stencil, energy_mode, frozen)
    result = solve_min_cut(graph)
    return SpinField(
        values=decode_spins(graph, result, noise.shape),
        origin=noise.origin,
        bc=bc,
        noise_seed=noise.seed,
        epsilon=epsilon,
        stencil=stencil.kind,
        energy_mode=EnergyMode(energy_mode),
    )


def ground_state_energy(spin: SpinField, noise: NoiseField) -> float:
    """Energy of a spin field under the parameters it was computed with."""
    if spin.epsilon is None or spin.stencil is None or spin.energy_mode is None:
        raise InvalidArgumentError("Spin field carries no energy provenance")
    return configuration_energy(
        spin.values, noise, spin.epsilon, spin.bc, Stencil.from_kind(spin.stencil), spin.energy_mode
    )


def paired_ground_states(
    noise: NoiseField,
    epsilon: float,
    stencil: Stencil | StencilKind | str = DEFAULT_STENCIL,
    energy_mode: EnergyMode | str = DEFAULT_ENERGY_MODE,
) -> tuple[SpinField, SpinField]:
    """Plus- and minus-boundary ground states on the same noise.

    Raises:
        InvariantViolation: if the plus state does not dominate the minus state pointwise.
    """
    plus = ground_state(noise, epsilon, BoundaryCondition.plus(), stencil, energy_mode)
    minus = ground_state(noise, epsilon, BoundaryCondition.minus(), stencil, energy_mode)
    violations = int(np.count_nonzero(plus.values < minus.values))
    if violations:
        raise InvariantViolation(
            f"Monotone coupling violated at {violations} cells (seed {noise.seed}, ε={epsilon})"
        )
    return plus, minus


def flip_symmetry_check(
    noise: NoiseField,
    epsilon: float,
    bc: BoundaryCondition,
    stencil: Stencil | StencilKind | str = DEFAULT_STENCIL,
    energy_mode: EnergyMode | str = DEFAULT_ENERGY_MODE,
) -> tuple[float, float]:
    """Ground-state energies for (ξ, τ) and (-ξ, -τ); they must coincide.

    Raises:
        InvariantViolation: if the energies differ, or if the flipped state of one problem
            does not reproduce the energy of the other exactly.
    """
    stencil = as_stencil(stencil)
    state = ground_state(noise, epsilon, bc, stencil, energy_mode)
    flipped_noise = noise.negated()
    flipped_bc = bc.flipped()
    flipped_state = ground_state(flipped_noise, epsilon, flipped_bc, stencil, energy_mode)

    energy = configuration_energy(state.values, noise, epsilon, bc, stencil, energy_mode)
    mirrored = configuration_energy(
        -state.values.astype(np.int64), flipped_noise, epsilon, flipped_bc, stencil, energy_mode
    )
    flipped_energy = configuration_energy(
        flipped_state.values, flipped_noise, epsilon, flipped_bc, stencil, energy_mode
    )
    if mirrored != energy:
        raise InvariantViolation(f"Flipped configuration energy {mirrored} != {energy}")
    if abs(flipped_energy - energy) > SYMMETRY_TOLERANCE * (1.0 + abs(energy)):
        raise InvariantViolation(f"Ground-state energies {energy} and {flipped_energy} differ")
    return energy, flipped_energy


def origin_disagreement(
    noise: NoiseField,
    epsilon: float,
    stencil: Stencil | StencilKind | str = DEFAULT_STENCIL,
    energy_mode: EnergyMode | str = DEFAULT_ENERGY_MODE,
) -> bool:
    """Whether σ⁺ and σ⁻ differ at the central cell of the box."""
    plus, minus = paired_ground_states(noise, epsilon, stencil, energy_mode)
    row, col = noise.height // 2, noise.width // 2
    return bool(plus.values[row, col] != minus.values[row, col])


def _order_parameter_sample(task: tuple) -> int:
    epsilon, L, seed, noise_kind, stencil_kind, energy_mode = task
    if epsilon == 0:
        noise = NoiseField.zeros(L, L)
    else:
        noise = sample_noise(noise_kind, L, L, seed)
    return int(origin_disagreement(noise, epsilon, stencil_kind, energy_mode))


def order_parameter(
    epsilon: float,
    L: int,
    n_samples: int,
    master_seed: int,
    stencil: StencilKind | str = DEFAULT_STENCIL,
    energy_mode: EnergyMode | str = DEFAULT_ENERGY_MODE,
    noise_kind: NoiseKind | str = NoiseKind.DISCRETIZED_WN,
    workers: int | None = None,
    experiment: str = "ml-sweep",
) -> OrderParameterEstimate:
    """Fraction of samples where the central spin depends on the boundary condition.

    The noise of sample ``i`` is seeded by ``(master_seed, experiment, i)`` only, so every
    (ε, L) point of a sweep sees common random numbers.
    """
    require(validate_epsilon(epsilon))
    if n_samples < 1:
        raise InvalidArgumentError(f"n_samples must be >= 1, got {n_samples}")
    if L < 1:
        raise InvalidArgumentError(f"Box size must be >= 1, got {L}")

    tasks = [
        (
            epsilon,
            L,
            derive_sample_seed(master_seed, experiment, i),
            NoiseKind(noise_kind),
            StencilKind(stencil),
            EnergyMode(energy_mode),
        )
        for i in range(n_samples)
    ]
    disagreements = sum(map_ordered(_order_parameter_sample, tasks, workers))
    m_hat = disagreements / n_samples
    std_err = math.sqrt(m_hat * (1.0 - m_hat) / n_samples)
    logger.info(f"m({L}) at ε={epsilon}: {m_hat:.4f} ± {std_err:.4f} over {n_samples} samples")
    return OrderParameterEstimate(
        epsilon=epsilon,
        L=L,
        n_samples=n_samples,
        disagreements=disagreements,
        m_hat=m_hat,
        std_err=std_err,
    )


def correlation_length(
    epsilon: float,
    threshold: float,
    L_grid: Sequence[int],
    n_samples: int,
    master_seed: int,
    stencil: StencilKind | str = DEFAULT_STENCIL,
    energy_mode: EnergyMode | str = DEFAULT_ENERGY_MODE,
    noise_kind: NoiseKind | str = NoiseKind.DISCRETIZED_WN,
    workers: int | None = None,
) -> CorrelationLengthEstimate:
    """Smallest L in the grid with m_hat(L) + 2·std_err < threshold.

    The binomial interval is only meaningful when ``n_samples`` is large enough that
    ``threshold`` is several standard errors away from 0 and 1; choosing it is up to the
    caller. The full m_hat(L) table is returned in either case.
    """
    require(validate_increasing(list(L_grid), "L_grid"))
    if not 0 < threshold < 1:
        raise InvalidArgumentError(f"threshold must lie in (0, 1), got {threshold}")

    table = [
        order_parameter(
            epsilon, L, n_samples, master_seed, stencil, energy_mode, noise_kind, workers
        )
        for L in L_grid
    ]
    return correlation_length_from_table(epsilon, threshold, table)


def correlation_length_from_table(
    epsilon: float, threshold: float, table: Sequence[OrderParameterEstimate]
) -> CorrelationLengthEstimate:
    """Apply the threshold rule to an already measured m_hat(L) table."""
    L_star = next(
        (row.L for row in table if row.m_hat + 2.0 * row.std_err < threshold),
        None,
    )
    return CorrelationLengthEstimate(
        epsilon=epsilon,
        threshold=threshold,
        L_star=L_star,
        reached=L_star is not None,
        table=list(table),
    )


def ball_cells_mask(
    shape: tuple[int, int], center_index: tuple[int, int], radius: float
) -> np.ndarray:
    """Cells (by array index) whose centers lie within ``radius`` of the center cell's center."""
    rows, cols = np.indices(shape)
    crow, ccol = center_index
    return (rows - crow) ** 2 + (cols - ccol) ** 2 <= radius * radius


def local_minimality_audit(
    spin: SpinField,
    noise: NoiseField,
    epsilon: float,
    n_balls: int,
    seed: int,
    stencil: Stencil | StencilKind | str | None = None,
    energy_mode: EnergyMode | str | None = None,
    balls: Sequence[tuple[tuple[int, int], float]] | None = None,
    radius_range: tuple[float, float] | None = None,
) -> MinimalityAudit:
    """Look for balls in which a constrained re-solve strictly lowers the energy.

    Args:
        spin: Configuration to audit.
        noise: The noise it was computed with.
        epsilon: Disorder strength.
        n_balls: Number of random balls (ignored when ``balls`` is given).
        seed: Seed for the ball sampling.
        stencil: Defaults to the spin field's own stencil.
        energy_mode: Defaults to the spin field's own mode.
        balls: Explicit ``((x, y), radius)`` balls, centers given as lattice cells.
        radius_range: Radius bounds for random balls, default ``[1.5, L/4]``.

    Returns:
        MinimalityAudit with every violation and the counts of checked and skipped balls.
    """
    stencil = as_stencil(stencil or spin.stencil or DEFAULT_STENCIL)
    energy_mode = EnergyMode(energy_mode or spin.energy_mode or DEFAULT_ENERGY_MODE)
    if spin.shape != noise.shape:
        raise InvalidArgumentError("Spin field and noise extents differ")

    if balls is None:
        rng = make_generator(seed)
        lo, hi = radius_range or (1.5, max(1.5, min(spin.shape) / 4.0))
        balls = [
            (
                (
                    spin.origin[0] + int(rng.integers(spin.width)),
                    spin.origin[1] + int(rng.integers(spin.height)),
                ),
                float(rng.uniform(lo, hi)),
            )
            for _ in range(n_balls)
        ]

    audit = MinimalityAudit()
    energy_before = configuration_energy(spin.values, noise, epsilon, spin.bc, stencil, energy_mode)
    for center, radius in balls:
        row, col = center[1] - spin.origin[1], center[0] - spin.origin[0]
        reach = math.floor(radius)
        if not (
            reach <= row < spin.height - reach and reach <= col < spin.width - reach
        ):
            audit.balls_skipped += 1
            logger.warning(f"Ball at {center} with radius {radius:.2f} leaves the box, skipped")
            continue

        inside = ball_cells_mask(spin.shape, (row, col), radius)
        frozen = np.where(inside, 0, spin.values).astype(np.int8)
        graph = build_energy_graph(noise, epsilon, spin.bc, stencil, energy_mode, frozen)
        energy_after = solve_min_cut(graph).energy
        audit.balls_checked += 1
        improvement = energy_before - energy_after
        if improvement > IMPROVEMENT_TOLERANCE:
            audit.violations.append(
                MinimalityViolation(
                    center=center,
                    radius=radius,
                    energy_before=energy_before,
                    energy_after=energy_after,
                    improvement=improvement,
                )
            )
    if audit.violations:
        logger.warning(f"Local minimality audit found {len(audit.violations)} violations")
    return audit
