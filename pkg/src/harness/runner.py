"""
Run orchestration: solver dispatch, outcome handling, file emission and comparisons
"""

import logging
import math
from dataclasses import dataclass
from pathlib import Path
from typing import Dict, List, Optional

from .. import __version__
from ..core.analyticity import es_norm_profile, radius_track
from ..core.config import (
    LabConfig,
    BlowupDetectedError,
    JacobianNonpositiveError,
    MaxStepsExceededError,
    ProbeMisalignmentError,
)
from ..core.eulerian import IntegrationResult, integrate
from ..core.lagrangian import integrate_conservative, integrate_flowmap, lagrangian_rows
from ..core.models import CompareReport, EsNormConfig, RadiusTrack, RunSummary
from ..core.spectral import PeriodicField, l2_norm, resample, sobolev_norm, sup_norm
from . import io
from .settings import RunConfig, build_initial

INTEGRATORS = {
    "eulerian": integrate,
    "flowmap": integrate_flowmap,
    "conservative": integrate_conservative,
}

DRIFT_COLUMNS = ("h1", "h2", "h1_energy")


@dataclass
class Simulation:
    """A finished or stopped run: probed states plus how it ended."""
    config: RunConfig
    result: IntegrationResult
    outcome: str = "completed"
    reason: Optional[str] = None
    error: Optional[Exception] = None

    @property
    def final_time(self) -> float:
        if self.result.trajectory:
            return self.result.final.t
        return 0.0

    @property
    def final(self) -> PeriodicField:
        return self.result.final.u

    def raise_for_outcome(self):
        """Re-raise the stopping exception of a run that did not complete."""
        if self.error is not None:
            raise self.error


def distance(a: PeriodicField, b: PeriodicField, norm: str = "sup", s: float = LabConfig.DEFAULT_SOBOLEV_S) -> float:
    """Distance between two fields, measured on the finer of their grids."""
    grid = a.grid if a.grid.n >= b.grid.n else b.grid
    difference = resample(a, grid) - resample(b, grid)
    if norm == "sup":
        return sup_norm(difference)
    if norm == "l2":
        return l2_norm(difference)
    if norm == "hs":
        return sobolev_norm(difference, s)
    raise ValueError(f"Unknown norm '{norm}', expected sup, l2 or hs")


class LabRunner:
    """Executes run configurations and writes their output files."""

    def __init__(self, out_dir: Optional[str] = None):
        self.out_dir = out_dir
        self.logger = logging.getLogger(__name__)

    def output_dir(self, config: RunConfig, name: str = "") -> Path:
        base = Path(self.out_dir or config.output.dir or LabConfig.OUTPUT_DIR)
        return base / name if name else base

    def simulate(self, config: RunConfig, u0: Optional[PeriodicField] = None) -> Simulation:
        """
        Integrate a configuration with its selected solver.

        Blow-up and breakdown do not raise; they come back as the outcome of
        the Simulation, together with the states probed before stopping.

        Args:
            config: Validated run configuration
            u0: Initial velocity overriding the configured initial data

        Returns:
            Simulation with outcome completed, blowup or breakdown
        """
        u0 = build_initial(config) if u0 is None else u0
        integrator = INTEGRATORS[config.solver]
        self.logger.info(f"Simulating solver={config.solver} n={config.grid.n} t_end={config.time.t_end}")
        try:
            result = integrator(
                u0,
                config.time.stepper(),
                policy=config.blowup.policy(),
                stride=config.probes.stride,
                sobolev_s=config.sobolev_s,
            )
            return Simulation(config, result)
        except BlowupDetectedError as e:
            return Simulation(config, e.partial or IntegrationResult(), "blowup", e.reason or "blowup", e)
        except MaxStepsExceededError as e:
            return Simulation(config, e.partial or IntegrationResult(), "blowup", "max_steps", e)
        except JacobianNonpositiveError as e:
            return Simulation(config, e.partial or IntegrationResult(), "breakdown", "jacobian_nonpositive", e)

    def write_outputs(self, simulation: Simulation, directory: Path) -> Dict[str, str]:
        """Snapshots, Lagrangian snapshots, diagnostics and the optional radius track."""
        files: Dict[str, str] = {}
        for index, state in enumerate(simulation.result.trajectory):
            io.write_snapshot(directory / "snapshots" / io.snapshot_name(index, state.t), state.u)
        if simulation.result.trajectory:
            files["snapshots"] = str(directory / "snapshots")
        for index, state in enumerate(simulation.result.lagrangian):
            io.write_lagrangian(directory / "lagrangian" / io.lagrangian_name(index, state.t), lagrangian_rows(state))
        if simulation.result.lagrangian:
            files["lagrangian"] = str(directory / "lagrangian")
        files["diagnostics"] = str(io.write_diagnostics(directory / "diagnostics.csv", simulation.result.record))

        settings = simulation.config.analyticity
        if settings.enabled and simulation.result.trajectory:
            track = RadiusTrack(
                estimates=radius_track(simulation.result.trajectory),
                es_norm=es_norm_profile(simulation.final, EsNormConfig(s=settings.s, k_max=settings.k_max)),
            )
            files["radius"] = str(io.write_json(directory / "radius.json", track))
        return files

    def summarize(self, simulation: Simulation, files: Dict[str, str]) -> RunSummary:
        record = simulation.result.record
        drifts = {column: record.relative_drift(column) for column in DRIFT_COLUMNS}
        return RunSummary(
            outcome=simulation.outcome,
            solver=simulation.config.solver,
            final_time=simulation.final_time,
            t_end=simulation.config.time.t_end,
            reason=simulation.reason,
            drifts=drifts,
            files=files,
            config=simulation.config.model_dump(),
            version=__version__,
        )

    def run(self, config: RunConfig, name: str = "") -> RunSummary:
        """
        Execute a configuration and write every output file plus run.json.

        Args:
            config: Validated run configuration
            name: Optional subdirectory of the output directory

        Returns:
            RunSummary; the outcome carries blow-up or breakdown
        """
        directory = self.output_dir(config, name)
        simulation = self.simulate(config)
        files = self.write_outputs(simulation, directory)
        run_json = directory / "run.json"
        files["summary"] = str(run_json)
        summary = self.summarize(simulation, files)
        io.write_json(run_json, summary)
        if simulation.outcome == "completed":
            self.logger.info(f"Run completed at t={summary.final_time:.6g}, files in {directory}")
        else:
            self.logger.warning(
                f"Run ended with {simulation.outcome} ({simulation.reason}) at t={summary.final_time:.6g}"
            )
        return summary

    def compare(self, config_a: RunConfig, config_b: RunConfig, norm: str = "sup") -> CompareReport:
        """
        Per-probe distances between the velocity fields of two runs.

        Raises:
            ProbeMisalignmentError: The runs were probed at different times
        """
        first = self.simulate(config_a)
        second = self.simulate(config_b)
        first.raise_for_outcome()
        second.raise_for_outcome()
        return compare_trajectories(first.result.trajectory, second.result.trajectory, norm, config_a.sobolev_s)


def compare_trajectories(first: List, second: List, norm: str = "sup", s: float = LabConfig.DEFAULT_SOBOLEV_S) -> CompareReport:
    """Distances between two probed trajectories with matching times."""
    if len(first) != len(second):
        raise ProbeMisalignmentError(f"Runs have {len(first)} and {len(second)} probes")
    times, distances = [], []
    for a, b in zip(first, second):
        if not math.isclose(a.t, b.t, rel_tol=1e-12, abs_tol=1e-12):
            raise ProbeMisalignmentError(f"Probe times differ: {a.t!r} vs {b.t!r}")
        times.append(a.t)
        distances.append(distance(a.u, b.u, norm, s))
    return CompareReport(norm=norm, times=times, distances=distances, max_distance=max(distances, default=0.0))
