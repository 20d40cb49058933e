"""
MCP tool handlers for the Novikov lab
"""

import logging
from typing import Optional

from fastmcp.exceptions import ToolError

from ..core.config import LabException
from ..core.models import BiHamiltonianStudy, CompareReport, RadiusTrack, RunSummary
from ..harness.presets import PRESETS, preset
from ..harness.runner import LabRunner
from ..harness.settings import RunConfig, with_overrides
from ..harness.studies import analyticity_study, bihamiltonian_study

SOLVERS = ("eulerian", "flowmap", "conservative")


class LabHandlers:
    """Handlers for MCP lab tools."""

    def __init__(self, out_dir: Optional[str] = None):
        self.runner = LabRunner(out_dir=out_dir)
        self.logger = logging.getLogger(__name__)

    def _config(self, name: str, solver: Optional[str] = None, t_end: Optional[float] = None) -> RunConfig:
        if name not in PRESETS:
            raise ToolError(f"Unknown preset '{name}', choose from {', '.join(sorted(PRESETS))}")
        if solver is not None and solver not in SOLVERS:
            raise ToolError(f"Unknown solver '{solver}', choose from {', '.join(SOLVERS)}")
        config = preset(name)
        overrides = {}
        if solver is not None:
            overrides["solver"] = solver
        if t_end is not None:
            overrides["time.t_end"] = t_end
        return with_overrides(config, **overrides) if overrides else config

    def run_preset(self, name: str, solver: Optional[str] = None, t_end: Optional[float] = None) -> RunSummary:
        """
        Run a preset and write its files.

        Args:
            name: Preset name
            solver: Solver overriding the preset's
            t_end: Final time overriding the preset's

        Returns:
            RunSummary; blow-up and breakdown are outcomes, not errors
        """
        try:
            config = self._config(name, solver, t_end)
            return self.runner.run(config, name=f"{name}-{config.solver}")
        except ToolError:
            raise
        except LabException as e:
            raise ToolError(f"Run failed: {str(e)}")
        except Exception as e:
            raise ToolError(f"Unexpected error: {str(e)}")

    def compare_solvers(
        self,
        name: str,
        solver_a: str = "eulerian",
        solver_b: str = "conservative",
        t_end: Optional[float] = None,
        norm: str = "sup",
    ) -> CompareReport:
        """
        Per-probe distances between two solvers started from the same preset.

        Returns:
            CompareReport with the distance at every probe time
        """
        if norm not in ("sup", "l2", "hs"):
            raise ToolError(f"Unknown norm '{norm}', choose from sup, l2, hs")
        try:
            first = self._config(name, solver_a, t_end)
            second = self._config(name, solver_b, t_end)
            return self.runner.compare(first, second, norm)
        except ToolError:
            raise
        except LabException as e:
            raise ToolError(f"Comparison failed: {str(e)}")
        except Exception as e:
            raise ToolError(f"Unexpected error: {str(e)}")

    def bihamiltonian_report(self, name: str = "positive", refine: bool = False) -> BiHamiltonianStudy:
        """Bi-Hamiltonian residuals at t = 0 and three later probes of a preset run."""
        try:
            return bihamiltonian_study(self._config(name), refine=refine, runner=self.runner)
        except ToolError:
            raise
        except LabException as e:
            raise ToolError(f"Bi-Hamiltonian check failed: {str(e)}")
        except Exception as e:
            raise ToolError(f"Unexpected error: {str(e)}")

    def radius_track_preset(self, name: str = "analytic-small", t_end: Optional[float] = None) -> RadiusTrack:
        """Radius of analyticity along a preset run."""
        try:
            return analyticity_study(self._config(name, t_end=t_end), runner=self.runner)
        except ToolError:
            raise
        except LabException as e:
            raise ToolError(f"Radius tracking failed: {str(e)}")
        except Exception as e:
            raise ToolError(f"Unexpected error: {str(e)}")
