"""FastMCP server exposing ground states, weak norms and experiment runs."""

import logging
from typing import Any

from fastmcp import Context, FastMCP

from . import __version__
from .models.settings import get_settings

# Configure logging
logging.basicConfig(
    level=logging.INFO, format="%(asctime)s - %(name)s - %(levelname)s - %(message)s"
)
logger = logging.getLogger(__name__)

# Initialize FastMCP server
mcp = FastMCP("randcurve")

# ============================================================================
# HEALTH
# ============================================================================


@mcp.tool
async def health_check(ctx: Context) -> dict[str, Any]:
    """Check the health status of the server."""
    try:
        settings = get_settings()
        if ctx:
            await ctx.info("Health check performed successfully")
        return {
            "success": True,
            "status": "healthy",
            "version": __version__,
            "workers": settings.workers,
            "output_dir": settings.output_dir,
            "debug_checks": settings.debug_checks,
        }
    except Exception as e:
        if ctx:
            await ctx.error(f"Health check failed: {e!s}")
        return {"success": False, "status": "error", "error": str(e)}


# ============================================================================
# COMPUTATION TOOLS
# ============================================================================

from .tools.operations import compute_ground_state as _compute_ground_state
from .tools.operations import compute_order_parameter as _compute_order_parameter
from .tools.operations import compute_weak_norm as _compute_weak_norm
from .tools.operations import run_experiment as _run_experiment
from .tools.operations import sample_noise_summary as _sample_noise_summary
from .tools.operations import summarize_records as _summarize_records


@mcp.tool
async def sample_noise_summary(
    noise_kind: str = "discretized-wn",
    width: int = 64,
    height: int = 64,
    seed: int = 0,
    ctx: Context = None,
) -> dict[str, Any]:
    """Sample a Gaussian noise field and report its empirical moments."""
    return await _sample_noise_summary(noise_kind, width, height, seed, ctx=ctx)


@mcp.tool
async def compute_ground_state(
    L: int,
    epsilon: float,
    seed: int = 0,
    boundary: str = "plus",
    stencil: str = "crofton8",
    energy_mode: str = "continuum-bv",
    noise_kind: str = "discretized-wn",
    ctx: Context = None,
) -> dict[str, Any]:
    """Exact ground state of an L×L box with plus, minus or free boundary."""
    return await _compute_ground_state(
        L, epsilon, seed, boundary, stencil, energy_mode, noise_kind, ctx=ctx
    )


@mcp.tool
async def compute_order_parameter(
    epsilon: float,
    L: int,
    n_samples: int = 100,
    master_seed: int = 0,
    stencil: str = "crofton8",
    energy_mode: str = "continuum-bv",
    noise_kind: str = "discretized-wn",
    ctx: Context = None,
) -> dict[str, Any]:
    """Estimate the probability that plus and minus ground states disagree at the origin."""
    return await _compute_order_parameter(
        epsilon, L, n_samples, master_seed, stencil, energy_mode, noise_kind, ctx=ctx
    )


@mcp.tool
async def compute_weak_norm(
    R: float,
    seed: int = 0,
    noise_kind: str = "discretized-wn",
    stencil: str = "lattice4",
    ctx: Context = None,
) -> dict[str, Any]:
    """Exact weak norm S_R of one noise sample."""
    return await _compute_weak_norm(R, seed, noise_kind, stencil, ctx=ctx)


# ============================================================================
# EXPERIMENT TOOLS
# ============================================================================


@mcp.tool
async def run_experiment(
    config_path: str,
    output: str | None = None,
    workers: int | None = None,
    ctx: Context = None,
) -> dict[str, Any]:
    """Run or resume an experiment described by a YAML configuration file."""
    return await _run_experiment(config_path, output, workers, ctx=ctx)


@mcp.tool
async def summarize_records(records_path: str, ctx: Context = None) -> dict[str, Any]:
    """Summarize a JSON-lines record file and list failed invariants."""
    return await _summarize_records(records_path, ctx=ctx)


# ============================================================================
# MAIN ENTRY POINT
# ============================================================================


def main(argv: list[str] | None = None):
    """Main entry point for the server."""
    import argparse

    parser = argparse.ArgumentParser(description="randcurve MCP server")
    parser.add_argument(
        "--transport", choices=["stdio", "http"], default="stdio", help="Transport: stdio or http"
    )
    parser.add_argument("--host", default="127.0.0.1", help="Host for HTTP transport")
    parser.add_argument("--port", type=int, default=8000, help="Port for HTTP transport")
    parser.add_argument(
        "--log-level",
        choices=["DEBUG", "INFO", "WARNING", "ERROR"],
        default="INFO",
        help="Logging level",
    )

    args = parser.parse_args(argv)

    # Set logging level
    logging.getLogger().setLevel(getattr(logging, args.log_level))

    logger.info(f"Starting randcurve server with {args.transport} transport")

    if args.transport == "stdio":
        mcp.run()
    else:
        mcp.run(transport=args.transport, host=args.host, port=args.port)


if __name__ == "__main__":
    main()
