"""
FastMCP Server exposing the Novikov lab
Runs presets, cross-checks solvers and reports Hamiltonian and analyticity diagnostics
"""

import argparse
from typing import Annotated, Literal, Optional

from pydantic import Field
from fastmcp import FastMCP

from .handlers import LabHandlers
from ..core.config import LabConfig
from ..core.models import BiHamiltonianStudy, CompareReport, RadiusTrack, RunSummary


# Create the MCP server
mcp = FastMCP("Novikov Lab MCP")
handlers = LabHandlers()

Solver = Literal["eulerian", "flowmap", "conservative"]


@mcp.tool(
    tags={"simulation"},
    annotations={
        "title": "Run Preset",
        "readOnlyHint": False,
        "openWorldHint": False,
        "idempotentHint": True
    }
)
def run_preset(
    name: Annotated[str, Field(
        description="Preset name: constant, reference, positive, smooth, fast, analytic-small, sign-changing"
    )],
    solver: Annotated[Optional[Solver], Field(
        description="Solver overriding the preset's (default: the preset's solver)"
    )] = None,
    t_end: Annotated[Optional[float], Field(
        description="Final time overriding the preset's",
        gt=0,
        le=10
    )] = None
) -> RunSummary:
    """
    Integrate a preset, write its snapshots and diagnostics, and summarize the outcome.

    Returns:
        Run summary with outcome, final time, invariant drifts and file paths
    """
    return handlers.run_preset(name, solver, t_end)


@mcp.tool(
    tags={"simulation", "verification"},
    annotations={
        "title": "Compare Solvers",
        "readOnlyHint": True,
        "openWorldHint": False,
        "idempotentHint": True
    }
)
def compare_solvers(
    name: Annotated[str, Field(description="Preset name shared by both runs")],
    solver_a: Annotated[Solver, Field(description="First solver")] = "eulerian",
    solver_b: Annotated[Solver, Field(description="Second solver")] = "conservative",
    t_end: Annotated[Optional[float], Field(
        description="Final time overriding the preset's",
        gt=0,
        le=10
    )] = None,
    norm: Annotated[Literal["sup", "l2", "hs"], Field(description="Distance norm")] = "sup"
) -> CompareReport:
    """
    Run one preset with two solvers and measure their distance at every probe.

    Returns:
        Probe times, distances and the maximum distance
    """
    return handlers.compare_solvers(name, solver_a, solver_b, t_end, norm)


@mcp.tool(
    tags={"verification", "hamiltonian"},
    annotations={
        "title": "Bi-Hamiltonian Report",
        "readOnlyHint": True,
        "openWorldHint": False,
        "idempotentHint": True
    }
)
def bihamiltonian_report(
    name: Annotated[str, Field(description="Preset with strictly positive momentum")] = "positive",
    refine: Annotated[bool, Field(description="Double the grid size")] = False
) -> BiHamiltonianStudy:
    """
    Check the Hamiltonian forms of the equation at t = 0 and three later probes.

    Returns:
        Residuals per probe and the probes where the check could not run
    """
    return handlers.bihamiltonian_report(name, refine)


@mcp.tool(
    tags={"analyticity"},
    annotations={
        "title": "Radius Track",
        "readOnlyHint": True,
        "openWorldHint": False,
        "idempotentHint": True
    }
)
def radius_track_preset(
    name: Annotated[str, Field(description="Preset name")] = "analytic-small",
    t_end: Annotated[Optional[float], Field(
        description="Final time overriding the preset's",
        gt=0,
        le=10
    )] = None
) -> RadiusTrack:
    """
    Fit the Fourier decay rate of every probed state of a preset run.

    Returns:
        Radius estimates over time and the E_s norm of the final state
    """
    return handlers.radius_track_preset(name, t_end)


def run_server():
    """Run the MCP server with appropriate transport and configurable port."""
    # args
    parser = argparse.ArgumentParser(description="Run the Novikov lab MCP server")
    parser.add_argument('--port', type=int, default=LabConfig.MCP_PORT,
                        help=f'Port number for HTTP transport (default: {LabConfig.MCP_PORT})')
    parser.add_argument('--http', action='store_true', help='Run server with HTTP transport')
    parser.add_argument('--sse', action='store_true', help='Run server with SSE transport')
    args = parser.parse_args()

    if args.sse:
        print(f"Server starting on http://0.0.0.0:{args.port} with SSE transport")
        mcp.run(transport="sse", host="0.0.0.0", port=args.port)
    else:
        print(f"Server starting on http://0.0.0.0:{args.port} with HTTP transport")
        mcp.run(transport="http", host="0.0.0.0", port=args.port)


if __name__ == "__main__":
    run_server()
