"""
Eulerian pseudo-spectral solver for the nonlocal form of the Novikov equation

    u_t + u^2 u_x = -Lambda^{-2}(3 u^2 u_x + 2 u_x^3 + 3 u u_x u_xx)
"""

import logging
from dataclasses import dataclass, field
from typing import Callable, Dict, List, Optional, Sequence

import numpy as np

from .config import (
    LabConfig,
    BlowupDetectedError,
    InvalidFieldError,
    MaxStepsExceededError,
)
from .diagnostics import persistence_ratio_series, probe_values
from .models import BlowupPolicy, DiagnosticsRecord, TimeStepper
from .spectral import (
    PeriodicField,
    c1_norm,
    dealiased_product,
    derivative,
    helmholtz,
    helmholtz_inverse,
)

logger = logging.getLogger(__name__)

# A probe hook maps a state to extra diagnostic columns
ProbeHook = Callable[["EulerianState"], Dict[str, float]]


@dataclass(frozen=True)
class EulerianState:
    t: float
    u: PeriodicField

    @property
    def m(self) -> PeriodicField:
        return helmholtz(self.u)


@dataclass
class IntegrationResult:
    """Probed states of a run and the diagnostics gathered at the probes."""
    trajectory: List = field(default_factory=list)
    record: DiagnosticsRecord = field(default_factory=DiagnosticsRecord)
    steps: int = 0
    # Label-space states, filled by the Lagrangian integrators
    lagrangian: List = field(default_factory=list)

    @property
    def final(self):
        return self.trajectory[-1]


# ---------------------------------------------------------------------------
# Right-hand sides
# ---------------------------------------------------------------------------

def nonlocal_source(u: PeriodicField) -> PeriodicField:
    """3 u^2 u_x + 2 u_x^3 + 3 u u_x u_xx."""
    ux = derivative(u, 1)
    uxx = derivative(u, 2)
    return (
        3.0 * dealiased_product([u, u, ux])
        + 2.0 * dealiased_product([ux, ux, ux])
        + 3.0 * dealiased_product([u, ux, uxx])
    )


def nonlocal_source_divergence(u: PeriodicField) -> PeriodicField:
    """The same source written as d/dx(u^3 + (3/2) u u_x^2) + (1/2) u_x^3."""
    ux = derivative(u, 1)
    flux = dealiased_product([u, u, u]) + 1.5 * dealiased_product([u, ux, ux])
    return derivative(flux, 1) + 0.5 * dealiased_product([ux, ux, ux])


def rhs_nonlocal(u: PeriodicField) -> PeriodicField:
    """u_t = -u^2 u_x - Lambda^{-2}(3 u^2 u_x + 2 u_x^3 + 3 u u_x u_xx)."""
    transport = dealiased_product([u, u, derivative(u, 1)])
    return -transport - helmholtz_inverse(nonlocal_source(u))


def rhs_divergence_form(u: PeriodicField) -> PeriodicField:
    """rhs_nonlocal with the source taken in divergence form."""
    transport = dealiased_product([u, u, derivative(u, 1)])
    return -transport - helmholtz_inverse(nonlocal_source_divergence(u))


def rhs_momentum(u: PeriodicField) -> PeriodicField:
    """m_t = -(m_x u^2 + 3 m u u_x) with m = Lambda^2 u."""
    m = helmholtz(u)
    return -(dealiased_product([derivative(m, 1), u, u]) + 3.0 * dealiased_product([m, u, derivative(u, 1)]))


def from_momentum(m0: PeriodicField) -> PeriodicField:
    """Velocity u0 = Lambda^{-2} m0."""
    return helmholtz_inverse(m0)


# ---------------------------------------------------------------------------
# Time stepping
# ---------------------------------------------------------------------------

def rk4_combine(y, k1, k2, k3, k4, dt: float):
    return y + (k1 + 2.0 * k2 + 2.0 * k3 + k4) * (dt / 6.0)


def step_rk4(state: EulerianState, dt: float, reverse: bool = False) -> EulerianState:
    """
    One classical RK4 step of the nonlocal equation.

    Args:
        state: Current state
        dt: Positive step size
        reverse: Integrate the time-reversed system (negated right-hand side)

    Raises:
        BlowupDetectedError: If the step produces non-finite values
    """
    if dt <= 0:
        raise ValueError(f"Step size must be positive, got {dt}")
    sign = -1.0 if reverse else 1.0

    def rhs(u: PeriodicField) -> PeriodicField:
        return rhs_nonlocal(u) * sign

    u = state.u
    try:
        k1 = rhs(u)
        k2 = rhs(u + k1 * (dt / 2.0))
        k3 = rhs(u + k2 * (dt / 2.0))
        k4 = rhs(u + k3 * dt)
        u_next = rk4_combine(u, k1, k2, k3, k4, dt)
    except (InvalidFieldError, FloatingPointError) as e:
        raise BlowupDetectedError(
            f"Non-finite values after step from t={state.t:.6g}",
            last_state=state,
            time=state.t,
            reason="non-finite",
        ) from e
    return EulerianState(state.t + dt, u_next)


def next_step_size(stepper: TimeStepper, t: float, speed: float, spacing: float) -> float:
    """
    Size of the next step, shortened so the run lands on t_end.

    In CFL mode dt = cfl * dx / max(1, speed), with speed the largest
    characteristic speed u^2.
    """
    if stepper.dt is not None:
        dt = stepper.dt
    else:
        dt = stepper.cfl * spacing / max(1.0, speed)
    remaining = stepper.t_end - t
    if dt >= remaining or remaining - dt < 1e-9 * dt:
        return remaining
    return dt


def _is_finished(stepper: TimeStepper, t: float) -> bool:
    return t >= stepper.t_end


def integrate(
    u0: PeriodicField,
    stepper: TimeStepper,
    policy: Optional[BlowupPolicy] = None,
    probes: Optional[Sequence[ProbeHook]] = None,
    stride: int = 1,
    reverse: bool = False,
    sobolev_s: float = LabConfig.DEFAULT_SOBOLEV_S,
) -> IntegrationResult:
    """
    Integrate the nonlocal equation from u0 to stepper.t_end.

    Standard diagnostics are gathered at t = 0, every `stride` steps and at
    t_end; each probe hook adds its own columns to the same record.

    Args:
        u0: Initial velocity
        stepper: Step control
        policy: Blow-up thresholds (defaults from LabConfig)
        probes: Extra diagnostic hooks called at every probe
        stride: Steps between probes
        reverse: Integrate the time-reversed system
        sobolev_s: Index of the H^s norm recorded in the `hs` column

    Returns:
        IntegrationResult with the probed states and their diagnostics

    Raises:
        BlowupDetectedError: C^1 norm above threshold, dt below dt_min or non-finite values
        MaxStepsExceededError: More than stepper.max_steps steps needed
    """
    policy = policy or BlowupPolicy()
    probes = list(probes or [])
    result = IntegrationResult(record=DiagnosticsRecord(sobolev_s=sobolev_s))
    spacing = u0.grid.spacing

    def take_probe(state: EulerianState):
        values = probe_values(state.u, sobolev_s)
        for hook in probes:
            values.update(hook(state))
        result.trajectory.append(state)
        result.record.append(t=state.t, **values)

    state = EulerianState(0.0, u0)
    take_probe(state)
    logger.info(f"Eulerian run: n={u0.grid.n}, t_end={stepper.t_end}, reverse={reverse}")

    try:
        while not _is_finished(stepper, state.t):
            if result.steps >= stepper.max_steps:
                raise MaxStepsExceededError(
                    f"Reached {stepper.max_steps} steps at t={state.t:.6g}",
                    last_state=state,
                    time=state.t,
                )
            speed = float(np.max(state.u.samples ** 2))
            dt = next_step_size(stepper, state.t, speed, spacing)
            if stepper.cfl is not None and dt < policy.dt_min and dt < stepper.t_end - state.t:
                raise BlowupDetectedError(
                    f"Adaptive step {dt:.3e} fell below dt_min at t={state.t:.6g}",
                    last_state=state,
                    time=state.t,
                    reason="dt_min",
                )
            landing = stepper.t_end - state.t <= dt
            previous = state
            state = step_rk4(state, dt, reverse=reverse)
            if landing:
                state = EulerianState(stepper.t_end, state.u)
            result.steps += 1

            c1 = c1_norm(state.u)
            if c1 > policy.c1_threshold:
                raise BlowupDetectedError(
                    f"C1 norm {c1:.3e} exceeded threshold {policy.c1_threshold:.3e} at t={state.t:.6g}",
                    last_state=previous,
                    time=state.t,
                    reason="c1_threshold",
                )
            if result.steps % stride == 0 or landing:
                take_probe(state)
                logger.debug(f"t={state.t:.6g} step={result.steps} c1={c1:.6g}")
    except (BlowupDetectedError, MaxStepsExceededError) as e:
        finish_record(result)
        e.partial = result
        logger.warning(f"Eulerian run stopped: {e}")
        raise

    finish_record(result)
    logger.info(f"Eulerian run completed in {result.steps} steps")
    return result


def finish_record(result: IntegrationResult):
    record = result.record
    record.persistence_ratio = persistence_ratio_series(record.t, record.hs, record.c1)
