"""
Multi-run studies: convergence, continuous dependence, Hamiltonian checks and
the analyticity suites
"""

import logging
import math
from typing import List, Optional, Sequence, Tuple

import numpy as np

from ..core.analyticity import (
    ck_lipschitz_check,
    ck_source_check,
    es_norm_profile,
    es_property_suite,
    radius_track,
    random_sample,
)
from ..core.config import (
    InsufficientLevelsError,
    MomentumVanishesError,
    NonpositiveMomentumError,
)
from ..core.hamiltonian import bihamiltonian_check
from ..core.models import (
    BiHamiltonianStudy,
    CkCheckReport,
    ConvergenceReport,
    EsNormConfig,
    EsPropsStudy,
    PerturbationReport,
    RadiusTrack,
)
from ..core.spectral import PeriodicGrid, random_trig_polynomial, sobolev_norm
from .runner import LabRunner, distance
from .settings import RunConfig, build_initial, with_overrides

logger = logging.getLogger(__name__)

Pairs = Sequence[Tuple[float, float]]
DEFAULT_PAIRS: List[Tuple[float, float]] = [(0.4, 0.2), (0.3, 0.15), (0.2, 0.1)]


def _fit_order(levels: Sequence[float], errors: Sequence[float]) -> Optional[float]:
    if len(errors) < 2 or any(error <= 0 or not math.isfinite(error) for error in errors):
        return None
    slope, _ = np.polyfit(np.log(levels), np.log(errors), 1)
    return float(slope)


def converge(
    base: RunConfig,
    axis: str,
    levels: Sequence[float],
    runner: Optional[LabRunner] = None,
) -> ConvergenceReport:
    """
    Errors of the final field against the finest level, with a fitted order.

    For axis "dt" the order is the slope of log error against log dt; for
    axis "n" it is the slope against log n (negative for convergent runs).
    The order is None when an error vanishes.

    Raises:
        InsufficientLevelsError: Fewer than 3 levels
        BlowupDetectedError, JacobianNonpositiveError, MaxStepsExceededError:
            A member run did not complete
    """
    if len(levels) < 3:
        raise InsufficientLevelsError(f"Convergence study needs at least 3 levels, got {len(levels)}")
    if axis not in ("dt", "n"):
        raise ValueError(f"Unknown axis '{axis}', expected dt or n")
    runner = runner or LabRunner()

    if axis == "dt":
        ordered = sorted((float(level) for level in levels), reverse=True)
        configs = [with_overrides(base, **{"time.dt": level, "time.cfl": None}) for level in ordered]
    else:
        ordered = sorted(float(int(level)) for level in levels)
        configs = [with_overrides(base, **{"grid.n": int(level)}) for level in ordered]

    finals = []
    for level, config in zip(ordered, configs):
        simulation = runner.simulate(config)
        simulation.raise_for_outcome()
        finals.append(simulation.final)
        logger.info(f"Convergence level {axis}={level:g} done")

    reference = finals[-1]
    errors = [distance(final, reference) for final in finals[:-1]]
    ratios = [
        errors[i] / errors[i + 1] if errors[i + 1] > 0 else math.inf
        for i in range(len(errors) - 1)
    ]
    order = _fit_order(ordered[:-1], errors)
    if order is None:
        logger.warning(f"Convergence order along {axis} is undefined (zero errors)")
    return ConvergenceReport(axis=axis, levels=ordered, errors=errors, ratios=ratios, order=order)


def perturbation_study(
    config: RunConfig,
    amplitudes: Sequence[float],
    seed: int,
    runner: Optional[LabRunner] = None,
) -> PerturbationReport:
    """
    Final sup-distances d(a) between runs from u0 and u0 + a*phi.

    phi is a random mean-free trig polynomial of unit H^s norm, drawn once
    per seed and shared by all amplitudes.

    Raises:
        ValueError: Negative or non-decreasing amplitudes
    """
    amplitudes = [float(a) for a in amplitudes]
    if any(a < 0 for a in amplitudes):
        raise ValueError("Amplitudes must be nonnegative")
    if any(later >= earlier for earlier, later in zip(amplitudes, amplitudes[1:])):
        raise ValueError("Amplitudes must be strictly decreasing")
    runner = runner or LabRunner()

    u0 = build_initial(config)
    rng = np.random.default_rng(seed)
    direction = random_trig_polynomial(u0.grid, rng, include_mean=False)
    direction = direction / sobolev_norm(direction, config.sobolev_s)

    base = runner.simulate(config, u0)
    base.raise_for_outcome()
    distances, normalized = [], []
    for a in amplitudes:
        member = runner.simulate(config, u0 + direction * a)
        member.raise_for_outcome()
        d = distance(member.final, base.final)
        distances.append(d)
        normalized.append(d / a if a > 0 else math.nan)
        logger.info(f"Perturbation a={a:g}: d={d:.6g}")

    monotone = all(later < earlier for earlier, later in zip(distances, distances[1:]))
    return PerturbationReport(
        seed=seed, amplitudes=amplitudes, distances=distances, normalized=normalized, monotone=monotone
    )


def _probe_indices(count: int, wanted: int = 4) -> List[int]:
    return sorted(set(int(round(i)) for i in np.linspace(0, count - 1, min(wanted, count))))


def bihamiltonian_study(
    config: RunConfig,
    refine: bool = False,
    runner: Optional[LabRunner] = None,
) -> BiHamiltonianStudy:
    """
    Bi-Hamiltonian checks at t = 0 and three later probes of a run.

    Probes where the momentum is not positive are recorded as failures.

    Args:
        config: Run configuration with sign-condition initial data
        refine: Double grid.n before running
    """
    if refine:
        config = with_overrides(config, **{"grid.n": 2 * config.grid.n})
    runner = runner or LabRunner()
    simulation = runner.simulate(config)
    trajectory = simulation.result.trajectory

    study = BiHamiltonianStudy(n=config.grid.n)
    for index in _probe_indices(len(trajectory)):
        state = trajectory[index]
        try:
            study.reports.append(bihamiltonian_check(state.u, seed=config.seed, time=state.t))
        except (NonpositiveMomentumError, MomentumVanishesError) as e:
            logger.warning(f"Bi-Hamiltonian check skipped at t={state.t:.6g}: {e}")
            study.failures[f"{state.t:.6g}"] = str(e)
    if simulation.outcome != "completed":
        study.failures["run"] = f"{simulation.outcome}: {simulation.error}"
    return study


def analyticity_study(config: RunConfig, runner: Optional[LabRunner] = None) -> RadiusTrack:
    """Radius of analyticity along a run and the E_s norm of its last state."""
    runner = runner or LabRunner()
    simulation = runner.simulate(config)
    simulation.raise_for_outcome()
    settings = config.analyticity
    return RadiusTrack(
        estimates=radius_track(simulation.result.trajectory),
        es_norm=es_norm_profile(simulation.final, EsNormConfig(s=settings.s, k_max=settings.k_max)),
    )


def es_props_study(pairs: Pairs = DEFAULT_PAIRS, count: int = 8, seed: int = 0, n: int = 64) -> EsPropsStudy:
    """
    Scale-estimate constants for each (s, s') pair.

    Every pair draws from the same seed, so the samples differ between pairs
    only through the E_s weighting of their modes.
    """
    grid = PeriodicGrid(n)
    reports = []
    for s, s_prime in pairs:
        rng = np.random.default_rng(seed)
        samples = [random_sample(grid, rng, s) for _ in range(count)]
        reports.append(es_property_suite(samples, s, s_prime, seed=seed))
    return EsPropsStudy(seed=seed, n=n, reports=reports)


def ck_check_study(
    pairs: Pairs = DEFAULT_PAIRS,
    radius: float = 1.0,
    trials: int = 50,
    seed: int = 0,
    literal: bool = False,
) -> CkCheckReport:
    """Lipschitz sweep and source checks of the first-order system for each pair."""
    report = CkCheckReport()
    for s, s_prime in pairs:
        report.lipschitz.append(ck_lipschitz_check(s, s_prime, radius, trials, seed, literal=literal))
        report.source.append(ck_source_check(s, s_prime, trials, seed, radius=radius))
    return report
