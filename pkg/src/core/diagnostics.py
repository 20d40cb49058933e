"""
Conserved functionals, variational derivatives and run monitors
"""

import logging
import math
from typing import Callable, Dict, List, Optional, Sequence

import numpy as np

from .config import LabConfig, NonpositiveMomentumError
from .spectral import (
    PeriodicField,
    c1_norm,
    derivative,
    helmholtz,
    helmholtz_inverse,
    refined_minimum,
    sobolev_norm,
)

logger = logging.getLogger(__name__)


# ---------------------------------------------------------------------------
# Functionals
# ---------------------------------------------------------------------------

def require_positive_momentum(m: PeriodicField) -> float:
    low = refined_minimum(m)
    if low <= LabConfig.MOMENTUM_FLOOR:
        raise NonpositiveMomentumError(f"Momentum must be positive, refined minimum is {low:.3e}")
    return low


def h1_functional(m: PeriodicField) -> float:
    """H_1 = (1/3) * integral of (m^{-8/3} m_x^2 + 9 m^{-2/3})."""
    require_positive_momentum(m)
    values = m.samples
    slope = derivative(m, 1).samples
    integrand = (values ** (-8.0 / 3.0) * slope ** 2 + 9.0 * values ** (-2.0 / 3.0)) / 3.0
    return float(integrand.mean())


def h2_functional(u: PeriodicField) -> float:
    """H_2 = (1/8) * integral of (u^4 + 2 u^2 u_x^2 - u_x^4 / 3)."""
    values = u.samples
    slope = derivative(u, 1).samples
    integrand = values ** 4 + 2.0 * values ** 2 * slope ** 2 - slope ** 4 / 3.0
    return float(integrand.mean() / 8.0)


def h2_of_momentum(m: PeriodicField) -> float:
    return h2_functional(helmholtz_inverse(m))


def h1_energy(u: PeriodicField) -> float:
    """Integral of u^2 + u_x^2."""
    slope = derivative(u, 1).samples
    return float(np.mean(u.samples ** 2 + slope ** 2))


def sign_monitor(m: PeriodicField) -> float:
    """Minimum of the momentum interpolant on the refined grid."""
    return refined_minimum(m)


# ---------------------------------------------------------------------------
# Variational derivatives
#
# Both are the exact gradients of the discrete functionals above with respect
# to the pairing <f, g> = mean(f * g), so central differences reproduce them
# up to O(eps^2) and round-off.
# ---------------------------------------------------------------------------

def variational_derivative_h1(m: PeriodicField) -> PeriodicField:
    """dH_1/dm = (1/3)[-(8/3) m^{-11/3} m_x^2 - 6 m^{-5/3}] - (2/3) d/dx(m^{-8/3} m_x)."""
    require_positive_momentum(m)
    values = m.samples
    slope = derivative(m, 1).samples
    local = (-(8.0 / 3.0) * values ** (-11.0 / 3.0) * slope ** 2 - 6.0 * values ** (-5.0 / 3.0)) / 3.0
    flux = PeriodicField(m.grid, (2.0 / 3.0) * values ** (-8.0 / 3.0) * slope)
    return PeriodicField(m.grid, local - derivative(flux, 1).samples)


def variational_derivative_h2_u(u: PeriodicField) -> PeriodicField:
    """dH_2/du = u^3/2 + u u_x^2/2 - d/dx(u^2 u_x)/2 + d/dx(u_x^3)/6."""
    values = u.samples
    slope = derivative(u, 1).samples
    local = 0.5 * values ** 3 + 0.5 * values * slope ** 2
    flux = PeriodicField(u.grid, 0.5 * values ** 2 * slope - slope ** 3 / 6.0)
    return PeriodicField(u.grid, local - derivative(flux, 1).samples)


def variational_derivative_h2(m: PeriodicField) -> PeriodicField:
    """Chain rule through u = Lambda^{-2} m (Lambda^{-2} is self-adjoint)."""
    return helmholtz_inverse(variational_derivative_h2_u(helmholtz_inverse(m)))


def gateaux_error(
    functional: Callable[[PeriodicField], float],
    gradient: PeriodicField,
    m: PeriodicField,
    direction: PeriodicField,
    epsilon: Optional[float] = None,
) -> float:
    """
    Relative mismatch between <gradient, direction> and a central difference of the functional.

    Args:
        functional: Discrete functional of the momentum
        gradient: Candidate variational derivative at m
        m: Base point
        direction: Test direction phi
        epsilon: Finite-difference step (default LabConfig.GATEAUX_EPSILON)

    Returns:
        |pairing - difference| normalised by the size of the pairing integrand
    """
    epsilon = epsilon or LabConfig.GATEAUX_EPSILON
    pairing = float(np.mean(gradient.samples * direction.samples))
    forward = functional(m + direction * epsilon)
    backward = functional(m - direction * epsilon)
    difference = (forward - backward) / (2.0 * epsilon)
    scale = max(abs(difference), float(np.mean(np.abs(gradient.samples * direction.samples))), 1e-300)
    return abs(pairing - difference) / scale


# ---------------------------------------------------------------------------
# Monitors
# ---------------------------------------------------------------------------

def green_c1_constant() -> float:
    """max G + max|G'| for the Green's function of 1 - d^2/dx^2 on the unit circle."""
    return 0.5 / math.tanh(0.5) + 0.5


def c1_bound(u: PeriodicField) -> float:
    """Green's-function bound on the C^1 norm; equals K * mean(u) when m >= 0."""
    m = helmholtz(u)
    return green_c1_constant() * float(np.mean(np.abs(m.samples)))


def persistence_ratio_series(times: Sequence[float], hs: Sequence[float], c1: Sequence[float]) -> List[float]:
    """
    d/dt ||u||^2_{H^s} / (||u||^2_{C^1} ||u||^2_{H^s}) from probe series.

    The time derivative is a second-order difference on the (possibly
    non-uniform) probe times. Probes where u vanishes give 0.
    """
    if len(times) < 3:
        return [math.nan] * len(times)
    energy = np.asarray(hs, dtype=float) ** 2
    rate = np.gradient(energy, np.asarray(times, dtype=float))
    scale = np.asarray(c1, dtype=float) ** 2 * energy
    ratios = []
    for numerator, denominator in zip(rate, scale):
        ratios.append(0.0 if denominator == 0 else float(numerator / denominator))
    return ratios


def persistence_ratio(trajectory: Sequence, s: float = LabConfig.DEFAULT_SOBOLEV_S) -> List[float]:
    """Persistence ratios along a trajectory of states carrying `t` and `u`."""
    if len(trajectory) < 3:
        raise ValueError(f"persistence ratio needs at least 3 probes, got {len(trajectory)}")
    times = [state.t for state in trajectory]
    hs = [sobolev_norm(state.u, s) for state in trajectory]
    c1 = [c1_norm(state.u) for state in trajectory]
    return persistence_ratio_series(times, hs, c1)


def probe_values(u: PeriodicField, s: float = LabConfig.DEFAULT_SOBOLEV_S) -> Dict[str, float]:
    """Standard per-probe diagnostics of an Eulerian velocity field."""
    m = helmholtz(u)
    min_m = sign_monitor(m)
    h1 = math.nan
    if min_m > LabConfig.MOMENTUM_FLOOR:
        h1 = h1_functional(m)
    else:
        logger.debug(f"H1 undefined at this probe, min m = {min_m:.3e}")
    return {
        "h1": h1,
        "h2": h2_functional(u),
        "h1_energy": h1_energy(u),
        "mean_u": float(u.samples.mean()),
        "min_m": min_m,
        "c1": c1_norm(u),
        "hs": sobolev_norm(u, s),
    }
