"""
Lagrangian (flow-map) formulation on the circle diffeomorphism group

The flow map eta solves d/dt eta = zeta^2 with zeta = u o eta; the velocity is
recovered as u = zeta o eta^{-1}. Momentum is transported exactly by
(m o eta) * eta_x^{3/2} = m0.
"""

import logging
from dataclasses import dataclass
from typing import List, Optional, Sequence, Tuple, Union

import numpy as np

from .config import (
    LabConfig,
    BlowupDetectedError,
    InvalidFieldError,
    JacobianNonpositiveError,
    MaxStepsExceededError,
)
from .diagnostics import probe_values
from .eulerian import (
    EulerianState,
    IntegrationResult,
    ProbeHook,
    finish_record,
    next_step_size,
    rhs_nonlocal,
)
from .models import BlowupPolicy, DiagnosticsRecord, TimeStepper
from .spectral import (
    PeriodicField,
    PeriodicGrid,
    c1_norm,
    dealiased_product,
    derivative,
    evaluate_offgrid_many,
    helmholtz,
    helmholtz_inverse,
    refine,
)

logger = logging.getLogger(__name__)


class Diffeo:
    """Orientation-preserving circle diffeomorphism eta(x) = x + theta(x), theta periodic."""

    def __init__(self, displacement: PeriodicField):
        self.grid = displacement.grid
        self.displacement = displacement
        self.jacobian = derivative(displacement, 1) + 1.0
        lowest = float(refine(self.jacobian).samples.min())
        if lowest <= 0:
            raise JacobianNonpositiveError(
                f"Jacobian of flow map is not positive (min {lowest:.3e})",
                min_jacobian=lowest,
            )
        self.min_jacobian = lowest

    @classmethod
    def identity(cls, grid: PeriodicGrid) -> "Diffeo":
        return cls(PeriodicField.zeros(grid))

    @classmethod
    def shift(cls, grid: PeriodicGrid, offset: float) -> "Diffeo":
        return cls(PeriodicField.constant(grid, offset))

    @property
    def positions(self) -> np.ndarray:
        """eta(x_j) on the lift, not reduced mod 1."""
        return self.grid.points + self.displacement.samples

    def __call__(self, xs: Sequence[float]) -> np.ndarray:
        xs = np.asarray(xs, dtype=float)
        values, _ = evaluate_offgrid_many(self.displacement, xs)
        return xs + values

    def __repr__(self) -> str:
        return f"Diffeo(n={self.grid.n}, min_jacobian={self.min_jacobian:.6g})"


@dataclass(frozen=True)
class LagrangianState:
    t: float
    eta: Diffeo
    zeta: PeriodicField


@dataclass(frozen=True)
class ConservativeState:
    t: float
    eta: Diffeo
    m0: PeriodicField


# ---------------------------------------------------------------------------
# Group operations
# ---------------------------------------------------------------------------

def _solve_monotone(theta: PeriodicField, targets: np.ndarray) -> Tuple[np.ndarray, float]:
    """
    Solve x + theta(x) = y for every target y by safeguarded Newton iteration.

    The root stays inside [y - max theta, y - min theta]; a Newton step that
    leaves the current bracket is replaced by bisection.
    """
    fine = refine(theta).samples
    margin = 1e-12 + 1e-9 * (fine.max() - fine.min())
    lo = targets - fine.max() - margin
    hi = targets - fine.min() + margin
    values, _ = evaluate_offgrid_many(theta, targets)
    x = np.clip(targets - values, lo, hi)
    residual = np.full_like(targets, np.inf)

    for _ in range(LabConfig.ROOT_MAX_ITERATIONS):
        values, slopes = evaluate_offgrid_many(theta, x, with_derivative=True)
        residual = x + values - targets
        done = np.abs(residual) < LabConfig.ROOT_TOLERANCE
        if np.all(done):
            break
        lo = np.where(residual < 0, x, lo)
        hi = np.where(residual > 0, x, hi)
        slope = 1.0 + slopes
        with np.errstate(divide="ignore", invalid="ignore"):
            newton = x - residual / slope
        unsafe = ~np.isfinite(newton) | (slope <= 0) | (newton <= lo) | (newton >= hi)
        candidate = np.where(unsafe, 0.5 * (lo + hi), newton)
        x = np.where(done, x, candidate)
    else:
        logger.warning(
            f"Inversion stopped after {LabConfig.ROOT_MAX_ITERATIONS} iterations, "
            f"max residual {np.abs(residual).max():.3e}"
        )
    return x, float(np.abs(residual).max())


def invert(eta: Diffeo) -> Diffeo:
    """
    Inverse diffeomorphism sampled on the grid.

    Args:
        eta: Diffeomorphism with positive jacobian

    Returns:
        eta^{-1} as id + psi with psi_j = eta^{-1}(y_j) - y_j

    Raises:
        JacobianNonpositiveError: If eta is not orientation preserving
    """
    if eta.min_jacobian <= 0:
        raise JacobianNonpositiveError("Cannot invert a map with nonpositive jacobian", eta.min_jacobian)
    targets = eta.grid.points
    roots, residual = _solve_monotone(eta.displacement, targets)
    logger.debug(f"Inverted diffeo on n={eta.grid.n}, residual {residual:.3e}")
    return Diffeo(PeriodicField(eta.grid, roots - targets))


def compose(f: PeriodicField, eta: Diffeo) -> PeriodicField:
    """f o eta on the grid, by exact trigonometric evaluation."""
    values, _ = evaluate_offgrid_many(f, eta.positions)
    return PeriodicField(eta.grid, values)


def conjugated_derivative(f: PeriodicField, eta: Diffeo) -> PeriodicField:
    """(d/dx (f o eta^{-1})) o eta, computed as the label quotient f_a / eta_a."""
    return PeriodicField(f.grid, derivative(f, 1).samples / eta.jacobian.samples)


def conjugated_derivative_by_composition(f: PeriodicField, eta: Diffeo) -> PeriodicField:
    """Defining double composition of the conjugated derivative (used as a cross-check)."""
    return compose(derivative(compose(f, invert(eta)), 1), eta)


def conjugated_helmholtz_inverse(g: PeriodicField, eta: Diffeo, inverse: Optional[Diffeo] = None) -> PeriodicField:
    """(Lambda^{-2}(g o eta^{-1})) o eta."""
    inverse = inverse or invert(eta)
    return compose(helmholtz_inverse(compose(g, inverse)), eta)


def f_eta_zeta(eta: Diffeo, zeta: PeriodicField, inverse: Optional[Diffeo] = None) -> PeriodicField:
    """
    Lagrangian acceleration F(eta, zeta) = -Lambda_eta^{-2} W(eta, zeta).

    W = 3 zeta^2 D zeta + 2 (D zeta)^3 + 3 zeta (D zeta) (D^2 zeta) with D the
    conjugated derivative.
    """
    first = conjugated_derivative(zeta, eta)
    second = conjugated_derivative(first, eta)
    source = (
        3.0 * dealiased_product([zeta, zeta, first])
        + 2.0 * dealiased_product([first, first, first])
        + 3.0 * dealiased_product([zeta, first, second])
    )
    return -conjugated_helmholtz_inverse(source, eta, inverse)


def reconstruct_velocity(state: LagrangianState, inverse: Optional[Diffeo] = None) -> PeriodicField:
    """u = zeta o eta^{-1}."""
    return compose(state.zeta, inverse or invert(state.eta))


def conservative_momentum(eta: Diffeo, m0: PeriodicField, inverse: Optional[Diffeo] = None) -> PeriodicField:
    """Eulerian momentum (m0 * eta_a^{-3/2}) o eta^{-1}."""
    transported = PeriodicField(m0.grid, m0.samples * eta.jacobian.samples ** -1.5)
    return compose(transported, inverse or invert(eta))


def conservative_velocity(eta: Diffeo, m0: PeriodicField, inverse: Optional[Diffeo] = None) -> PeriodicField:
    return helmholtz_inverse(conservative_momentum(eta, m0, inverse))


def orbit_residual(state: Union[LagrangianState, ConservativeState, Tuple[PeriodicField, Diffeo]], m0: PeriodicField) -> float:
    """
    max |(m o eta) * eta_x^{3/2} - m0| over the grid.

    For a flow-map state m o eta = zeta - D^2 zeta is read off in labels; a
    conservative state rebuilds the Eulerian momentum and composes it back;
    an (Eulerian u, eta) pair composes Lambda^2 u with eta.
    """
    if isinstance(state, LagrangianState):
        first = conjugated_derivative(state.zeta, state.eta)
        second = conjugated_derivative(first, state.eta)
        m_on_labels = state.zeta.samples - second.samples
        eta = state.eta
    elif isinstance(state, ConservativeState):
        eta = state.eta
        m_on_labels = compose(conservative_momentum(eta, state.m0), eta).samples
    else:
        u, eta = state
        m_on_labels = compose(helmholtz(u), eta).samples
    transported = m_on_labels * eta.jacobian.samples ** 1.5
    return float(np.abs(transported - m0.samples).max())


# ---------------------------------------------------------------------------
# Integrators
# ---------------------------------------------------------------------------

def _rk4(state_vector, rhs, dt):
    k1 = rhs(state_vector)
    k2 = rhs([y + k * (dt / 2.0) for y, k in zip(state_vector, k1)])
    k3 = rhs([y + k * (dt / 2.0) for y, k in zip(state_vector, k2)])
    k4 = rhs([y + k * dt for y, k in zip(state_vector, k3)])
    return [
        y + (a + 2.0 * b + 2.0 * c + d) * (dt / 6.0)
        for y, a, b, c, d in zip(state_vector, k1, k2, k3, k4)
    ]


def _square(field: PeriodicField) -> PeriodicField:
    # Pointwise: each label moves with its own speed
    return PeriodicField(field.grid, field.samples ** 2)


def _run_labels(
    name: str,
    initial: List[PeriodicField],
    rhs,
    build_state,
    reconstruct,
    stepper: TimeStepper,
    policy: BlowupPolicy,
    probes: Sequence[ProbeHook],
    stride: int,
    sobolev_s: float,
    speed,
) -> IntegrationResult:
    """
    Shared RK4 loop for the label-space integrators.

    The Eulerian velocity is rebuilt after every step for the C^1 check;
    speed(vector) is only evaluated in CFL mode.
    """
    result = IntegrationResult(record=DiagnosticsRecord(sobolev_s=sobolev_s))
    grid = initial[0].grid

    def eulerian_of(t: float, vector: List[PeriodicField]):
        state = build_state(t, vector)
        try:
            return state, EulerianState(t, reconstruct(state, invert(state.eta)))
        except JacobianNonpositiveError as e:
            e.time = t
            raise

    def take_probe(state, eulerian: EulerianState):
        values = probe_values(eulerian.u, sobolev_s)
        for hook in probes:
            values.update(hook(state))
        result.trajectory.append(eulerian)
        result.lagrangian.append(state)
        result.record.append(t=eulerian.t, **values)

    t = 0.0
    vector = initial
    logger.info(f"{name} run: n={grid.n}, t_end={stepper.t_end}")
    try:
        state, current = eulerian_of(t, vector)
        take_probe(state, current)
        while t < stepper.t_end:
            if result.steps >= stepper.max_steps:
                raise MaxStepsExceededError(
                    f"Reached {stepper.max_steps} steps at t={t:.6g}",
                    last_state=current,
                    time=t,
                )
            fastest = speed(vector) if stepper.cfl is not None else 0.0
            dt = next_step_size(stepper, t, fastest, grid.spacing)
            if stepper.cfl is not None and dt < policy.dt_min and dt < stepper.t_end - t:
                raise BlowupDetectedError(
                    f"Adaptive step {dt:.3e} fell below dt_min at t={t:.6g}",
                    last_state=current,
                    time=t,
                    reason="dt_min",
                )
            landing = stepper.t_end - t <= dt
            try:
                vector = _rk4(vector, rhs, dt)
            except JacobianNonpositiveError as e:
                e.time = t
                raise
            except InvalidFieldError as e:
                raise BlowupDetectedError(
                    f"Non-finite values after step from t={t:.6g}",
                    last_state=current,
                    time=t,
                    reason="non-finite",
                ) from e
            t = stepper.t_end if landing else t + dt
            result.steps += 1

            state, stepped = eulerian_of(t, vector)
            c1 = c1_norm(stepped.u)
            if c1 > policy.c1_threshold:
                raise BlowupDetectedError(
                    f"C1 norm {c1:.3e} exceeded threshold {policy.c1_threshold:.3e} at t={t:.6g}",
                    last_state=current,
                    time=t,
                    reason="c1_threshold",
                )
            current = stepped
            if result.steps % stride == 0 or landing:
                take_probe(state, current)
                logger.debug(f"{name}: t={t:.6g} step={result.steps} c1={c1:.6g}")
    except (BlowupDetectedError, MaxStepsExceededError, JacobianNonpositiveError) as e:
        finish_record(result)
        e.partial = result
        logger.warning(f"{name} run stopped: {e}")
        raise

    finish_record(result)
    logger.info(f"{name} run completed in {result.steps} steps")
    return result


def integrate_flowmap(
    u0: PeriodicField,
    stepper: TimeStepper,
    policy: Optional[BlowupPolicy] = None,
    probes: Optional[Sequence[ProbeHook]] = None,
    stride: int = 1,
    sobolev_s: float = LabConfig.DEFAULT_SOBOLEV_S,
) -> IntegrationResult:
    """
    RK4 on (theta, zeta) with theta' = zeta^2 and zeta' = F(eta, zeta).

    Probes reconstruct u = zeta o eta^{-1} and record the orbit residual
    against m0 = Lambda^2 u0, which this formulation does not enforce.

    Raises:
        JacobianNonpositiveError: The flow leaves the diffeomorphism group (time attached)
        BlowupDetectedError: Non-finite values or C^1 norm above threshold
        MaxStepsExceededError: More than stepper.max_steps steps needed
    """
    m0 = helmholtz(u0)

    def rhs(vector):
        theta, zeta = vector
        eta = Diffeo(theta)
        return [_square(zeta), f_eta_zeta(eta, zeta)]

    def build_state(t, vector):
        theta, zeta = vector
        return LagrangianState(t, Diffeo(theta), zeta)

    def residual_hook(state):
        return {"orbit_residual": orbit_residual(state, m0)}

    return _run_labels(
        "Flow-map",
        [PeriodicField.zeros(u0.grid), u0],
        rhs,
        build_state,
        lambda state, inverse: reconstruct_velocity(state, inverse),
        stepper,
        policy or BlowupPolicy(),
        [residual_hook] + list(probes or []),
        stride,
        sobolev_s,
        lambda vector: float(np.max(vector[1].samples ** 2)),
    )


def integrate_conservative(
    u0: PeriodicField,
    stepper: TimeStepper,
    policy: Optional[BlowupPolicy] = None,
    probes: Optional[Sequence[ProbeHook]] = None,
    stride: int = 1,
    sobolev_s: float = LabConfig.DEFAULT_SOBOLEV_S,
) -> IntegrationResult:
    """
    Advance eta alone, transporting momentum exactly.

    Each stage rebuilds m = (m0 eta_a^{-3/2}) o eta^{-1}, inverts the
    Helmholtz operator on the Eulerian grid and moves the labels with
    theta' = (u o eta)^2.
    """
    m0 = helmholtz(u0)

    def rhs(vector):
        (theta,) = vector
        eta = Diffeo(theta)
        u = conservative_velocity(eta, m0)
        return [_square(compose(u, eta))]

    def build_state(t, vector):
        return ConservativeState(t, Diffeo(vector[0]), m0)

    def speed(vector):
        eta = Diffeo(vector[0])
        return float(np.max(conservative_velocity(eta, m0).samples ** 2))

    def residual_hook(state):
        return {"orbit_residual": orbit_residual(state, m0)}

    return _run_labels(
        "Conservative",
        [PeriodicField.zeros(u0.grid)],
        rhs,
        build_state,
        lambda state, inverse: conservative_velocity(state.eta, state.m0, inverse),
        stepper,
        policy or BlowupPolicy(),
        [residual_hook] + list(probes or []),
        stride,
        sobolev_s,
        speed,
    )


def flow_map_of(trajectory: Sequence[EulerianState]) -> List[Diffeo]:
    """
    Flow maps of the velocity squared along an Eulerian trajectory.

    Integrates eta' = u^2 o eta between consecutive states with RK4; the
    midpoint velocity comes from cubic Hermite interpolation in time using
    u_t = rhs_nonlocal(u), which keeps the scheme fourth order when the
    trajectory was stored at every step.
    """
    if not trajectory:
        return []
    grid = trajectory[0].u.grid
    maps = [Diffeo.identity(grid)]
    theta = PeriodicField.zeros(grid)
    rate = rhs_nonlocal(trajectory[0].u)

    for before, after in zip(trajectory[:-1], trajectory[1:]):
        dt = after.t - before.t
        rate_after = rhs_nonlocal(after.u)
        midpoint = (before.u + after.u) * 0.5 + (rate - rate_after) * (dt / 8.0)

        def velocity_rhs(vector, u):
            eta = Diffeo(vector[0])
            return [_square(compose(u, eta))]

        k1 = velocity_rhs([theta], before.u)[0]
        k2 = velocity_rhs([theta + k1 * (dt / 2.0)], midpoint)[0]
        k3 = velocity_rhs([theta + k2 * (dt / 2.0)], midpoint)[0]
        k4 = velocity_rhs([theta + k3 * dt], after.u)[0]
        theta = theta + (k1 + 2.0 * k2 + 2.0 * k3 + k4) * (dt / 6.0)
        maps.append(Diffeo(theta))
        rate = rate_after
    return maps


def lagrangian_rows(state: Union[LagrangianState, ConservativeState]) -> np.ndarray:
    """Columns x, eta, eta_jacobian, zeta of a label-space snapshot."""
    eta = state.eta
    if isinstance(state, LagrangianState):
        zeta = state.zeta
    else:
        zeta = compose(conservative_velocity(eta, state.m0), eta)
    return np.column_stack([eta.grid.points, eta.positions, eta.jacobian.samples, zeta.samples])
