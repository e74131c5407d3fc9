"""MCP-facing operations: validate inputs, run a computation, wrap the outcome."""

import logging
from typing import Any

import numpy as np
from fastmcp import Context

from ..models.data_models import (
    BoundaryKind,
    EnergyMode,
    NoiseKind,
    OperationResult,
    StencilKind,
)
from ..models.experiment_config import load_config
from ..models.fields import BoundaryCondition
from ..models.record_store import RecordStore
from .experiments import run_experiment as _run_experiment
from .geometry import extract_jump_set
from .groundstate import ground_state, ground_state_energy, order_parameter
from .noise import sample_noise
from .reporting import summarize
from .weaknorm import s_r

logger = logging.getLogger(__name__)

MAX_RETURNED_CELLS = 4096

_BOUNDARY_CONDITIONS = {
    BoundaryKind.PLUS: BoundaryCondition.plus,
    BoundaryKind.MINUS: BoundaryCondition.minus,
    BoundaryKind.FREE: BoundaryCondition.free,
}


def _spin_rows(values: np.ndarray) -> list[str]:
    """Top row first, '+' and '-' per cell."""
    return ["".join("+" if v == 1 else "-" for v in row) for row in values[::-1]]


async def sample_noise_summary(
    noise_kind: str = NoiseKind.DISCRETIZED_WN.value,
    width: int = 64,
    height: int = 64,
    seed: int = 0,
    ctx: Context = None,
) -> dict[str, Any]:
    """Sample a noise field and report its empirical moments."""
    try:
        noise = sample_noise(noise_kind, width, height, seed)
        values = noise.values
        if ctx:
            await ctx.info(f"Sampled {noise_kind} noise of size {width}x{height}")
        return OperationResult(
            success=True,
            message=f"Sampled {width}x{height} {noise.kind.value} field",
            data={
                "kind": noise.kind.value,
                "seed": seed,
                "mean": float(values.mean()),
                "variance": float(values.var()),
                "min": float(values.min()),
                "max": float(values.max()),
                "integral": float(values.sum() * noise.spacing**2),
            },
        ).model_dump()
    except Exception as e:
        if ctx:
            await ctx.error(f"Failed to sample noise: {e!s}")
        return OperationResult(success=False, message="Failed to sample noise", error=str(e)).model_dump()


async def compute_ground_state(
    L: int,
    epsilon: float,
    seed: int = 0,
    boundary: str = BoundaryKind.PLUS.value,
    stencil: str = StencilKind.CROFTON8.value,
    energy_mode: str = EnergyMode.CONTINUUM_BV.value,
    noise_kind: str = NoiseKind.DISCRETIZED_WN.value,
    ctx: Context = None,
) -> dict[str, Any]:
    """Ground state of an L×L box for one noise sample."""
    try:
        bc_kind = BoundaryKind(boundary)
        if bc_kind not in _BOUNDARY_CONDITIONS:
            return OperationResult(
                success=False,
                message="Unsupported boundary condition",
                error=f"Use one of {[k.value for k in _BOUNDARY_CONDITIONS]}",
            ).model_dump()
        noise = sample_noise(noise_kind, L, L, seed)
        spin = ground_state(noise, epsilon, _BOUNDARY_CONDITIONS[bc_kind](), stencil, energy_mode)
        curve = extract_jump_set(spin)
        data: dict[str, Any] = {
            "energy": ground_state_energy(spin, noise),
            "plus_fraction": float(np.mean(spin.values == 1)),
            "interface_length": curve.total_lattice_length,
            "components": len(curve.components),
        }
        warnings = None
        if spin.values.size <= MAX_RETURNED_CELLS:
            data["spins"] = _spin_rows(spin.values)
        else:
            warnings = [f"Configuration above {MAX_RETURNED_CELLS} cells not returned"]
        if ctx:
            await ctx.info(f"Solved ground state for L={L}, epsilon={epsilon}")
        return OperationResult(
            success=True, message="Ground state computed", data=data, warnings=warnings
        ).model_dump()
    except Exception as e:
        if ctx:
            await ctx.error(f"Failed to compute ground state: {e!s}")
        return OperationResult(
            success=False, message="Failed to compute ground state", error=str(e)
        ).model_dump()


async def compute_order_parameter(
    epsilon: float,
    L: int,
    n_samples: int = 100,
    master_seed: int = 0,
    stencil: str = StencilKind.CROFTON8.value,
    energy_mode: str = EnergyMode.CONTINUUM_BV.value,
    noise_kind: str = NoiseKind.DISCRETIZED_WN.value,
    ctx: Context = None,
) -> dict[str, Any]:
    """Monte-Carlo estimate of the probability that the two boundary conditions disagree at the origin."""
    try:
        estimate = order_parameter(
            epsilon, L, n_samples, master_seed, stencil, energy_mode, noise_kind
        )
        if ctx:
            await ctx.info(f"m_hat={estimate.m_hat:.4f} over {n_samples} samples")
        return OperationResult(
            success=True, message="Order parameter estimated", data=estimate.model_dump()
        ).model_dump()
    except Exception as e:
        if ctx:
            await ctx.error(f"Failed to estimate order parameter: {e!s}")
        return OperationResult(
            success=False, message="Failed to estimate order parameter", error=str(e)
        ).model_dump()


async def compute_weak_norm(
    R: float,
    seed: int = 0,
    noise_kind: str = NoiseKind.DISCRETIZED_WN.value,
    stencil: str = StencilKind.LATTICE4.value,
    ctx: Context = None,
) -> dict[str, Any]:
    """Exact S_R of one noise sample on the ball of radius R around the origin cell."""
    try:
        side = 2 * int(R) + 1
        result = s_r(sample_noise(noise_kind, side, side, seed), R, None, stencil)
        if ctx:
            await ctx.info(f"S_R={result.value:.6f} after {result.iterations} parametric solves")
        return OperationResult(
            success=True, message="Weak norm computed", data=result.model_dump()
        ).model_dump()
    except Exception as e:
        if ctx:
            await ctx.error(f"Failed to compute weak norm: {e!s}")
        return OperationResult(
            success=False, message="Failed to compute weak norm", error=str(e)
        ).model_dump()


async def run_experiment(
    config_path: str,
    output: str | None = None,
    workers: int | None = None,
    ctx: Context = None,
) -> dict[str, Any]:
    """Run or resume an experiment from a YAML configuration file."""
    try:
        config, params = load_config(config_path)
        result = _run_experiment(config, params, output=output, workers=workers)
        summaries = summarize(result.records)
        failures = [f for summary in summaries for f in summary.failures]
        if ctx:
            await ctx.info(f"{config.experiment.value}: {result.written} records written")
        return OperationResult(
            success=not failures,
            message=f"Experiment {config.experiment.value} finished",
            data={
                "records_path": str(result.path),
                "written": result.written,
                "skipped": result.skipped,
                "summary": "\n".join(summary.to_markdown() for summary in summaries),
            },
            error="; ".join(failures) if failures else None,
        ).model_dump()
    except Exception as e:
        if ctx:
            await ctx.error(f"Failed to run experiment: {e!s}")
        return OperationResult(success=False, message="Failed to run experiment", error=str(e)).model_dump()


async def summarize_records(records_path: str, ctx: Context = None) -> dict[str, Any]:
    """Summary tables and invariant failures of a record file."""
    try:
        summaries = summarize(RecordStore(records_path).read())
        if ctx:
            await ctx.info(f"Summarized {len(summaries)} experiments from {records_path}")
        return OperationResult(
            success=True,
            message=f"Summarized {records_path}",
            data={
                summary.experiment.value: {
                    "table": summary.table.to_dict(orient="records"),
                    "notes": {k: str(v) for k, v in summary.notes.items()},
                    "failures": summary.failures,
                }
                for summary in summaries
            },
        ).model_dump()
    except Exception as e:
        if ctx:
            await ctx.error(f"Failed to summarize records: {e!s}")
        return OperationResult(
            success=False, message="Failed to summarize records", error=str(e)
        ).model_dump()
