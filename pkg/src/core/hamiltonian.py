"""
Hamiltonian operators B_1, B_2 and the numerical check of the evolution identities

    B_2 = (1 - d^2)(1/m) d (1/m)(1 - d^2)
    B_1 = -2 (3 m d + 2 m_x)(4 d - d^3)^{-1}(3 m d + m_x)
"""

import logging
from typing import List, Optional, Tuple

import numpy as np

from .config import LabConfig, MomentumVanishesError
from .diagnostics import (
    require_positive_momentum,
    gateaux_error,
    h1_functional,
    h2_of_momentum,
    variational_derivative_h1,
    variational_derivative_h2,
)
from .eulerian import rhs_momentum
from .models import BiHamiltonianReport
from .spectral import (
    PeriodicField,
    angular_wavenumbers,
    dealiased_product,
    derivative,
    from_spectrum,
    helmholtz,
    random_trig_polynomial,
    refine,
    sup_norm,
)

logger = logging.getLogger(__name__)


def _reciprocal(m: PeriodicField) -> PeriodicField:
    smallest = float(np.abs(refine(m).samples).min())
    if smallest <= LabConfig.MOMENTUM_FLOOR:
        raise MomentumVanishesError(f"Momentum touches zero (min |m| = {smallest:.3e})")
    return PeriodicField(m.grid, 1.0 / m.samples)


def apply_b2(m: PeriodicField, f: PeriodicField) -> PeriodicField:
    """Lambda^2((1/m) d/dx((1/m) Lambda^2 f))."""
    inverse = _reciprocal(m)
    inner = dealiased_product([inverse, helmholtz(f)])
    outer = dealiased_product([inverse, derivative(inner, 1)])
    return helmholtz(outer)


def third_order(g: PeriodicField) -> PeriodicField:
    """(4 d - d^3) g."""
    return derivative(g, 1) * 4.0 - derivative(g, 3)


def third_order_inverse(g: PeriodicField) -> PeriodicField:
    """
    Inverse of 4 d - d^3 on mean-free fields.

    Symbol 1/(i kappa (4 + kappa^2)) with kappa = 2 pi k; the mean and
    Nyquist modes are set to zero.
    """
    kappa = angular_wavenumbers(g.grid)
    symbol = np.zeros(g.grid.n, dtype=complex)
    nonzero = kappa != 0
    symbol[nonzero] = 1.0 / (1j * kappa[nonzero] * (4.0 + kappa[nonzero] ** 2))
    symbol[g.grid.nyquist_index] = 0.0
    return from_spectrum(g.spectrum.apply(symbol))


def apply_b1(m: PeriodicField, f: PeriodicField) -> Tuple[PeriodicField, float]:
    """
    -2(3 m d + 2 m_x)(4 d - d^3)^{-1}(3 m d + m_x) f.

    The intermediate (3 m d + m_x) f is projected to zero mean before the
    inversion; the discarded mean is returned with the result.

    Raises:
        MomentumVanishesError: If m touches zero
    """
    _reciprocal(m)
    m_x = derivative(m, 1)
    inner = dealiased_product([m, derivative(f, 1)]) * 3.0 + dealiased_product([m_x, f])
    mean_defect = float(inner.samples.mean())
    potential = third_order_inverse(inner - mean_defect)
    outer = dealiased_product([m, derivative(potential, 1)]) * 3.0 + dealiased_product([m_x, potential]) * 2.0
    return outer * -2.0, mean_defect


def _fit_kernel_constant(residual: PeriodicField, m_x: PeriodicField) -> Tuple[PeriodicField, float]:
    """Least-squares constant C for the kernel direction -4 C m_x of B_1."""
    if sup_norm(m_x) < 1e-12:
        return residual, 0.0
    norm = float(np.mean(m_x.samples ** 2))
    constant = -float(np.mean(residual.samples * m_x.samples)) / (4.0 * norm)
    return residual + m_x * (4.0 * constant), constant


def bihamiltonian_check(
    u: PeriodicField,
    directions: int = 3,
    seed: int = 0,
    time: float = 0.0,
    epsilon: Optional[float] = None,
) -> BiHamiltonianReport:
    """
    Compare m_t from the momentum equation with the Hamiltonian forms.

    Args:
        u: Velocity field with strictly positive momentum
        directions: Number of random test directions for the Gateaux checks
        seed: Seed of the test directions
        time: Time stamp carried into the report
        epsilon: Finite-difference step for the Gateaux checks

    Returns:
        BiHamiltonianReport with residuals normalised by max(1, |m_t|_inf)

    Raises:
        NonpositiveMomentumError: If Lambda^2 u is not strictly positive
    """
    m = helmholtz(u)
    require_positive_momentum(m)
    m_t = rhs_momentum(u)
    scale = max(1.0, sup_norm(m_t))
    m_x = derivative(m, 1)

    grad_h2 = variational_derivative_h2(m)
    residual_b2 = sup_norm(m_t - apply_b2(m, grad_h2)) / scale

    grad_h1 = variational_derivative_h1(m)
    b1_h1, mean_defect = apply_b1(m, grad_h1)
    fitted, kernel_constant = _fit_kernel_constant(m_t - b1_h1, m_x)
    residual_b1 = sup_norm(fitted) / scale

    b1_energy, _ = apply_b1(m, u * 0.5)
    fitted_energy, _ = _fit_kernel_constant(m_t - b1_energy, m_x)
    residual_b1_energy = sup_norm(fitted_energy) / scale

    rng = np.random.default_rng(seed)
    errors_h1: List[float] = []
    errors_h2: List[float] = []
    floor = float(refine(m).samples.min())
    for _ in range(directions):
        direction = random_trig_polynomial(m.grid, rng, include_mean=False)
        # Keep m +/- eps * phi well inside the positive cone
        direction = direction * (0.5 * floor / max(sup_norm(direction), 1e-300))
        errors_h1.append(gateaux_error(h1_functional, grad_h1, m, direction, epsilon))
        errors_h2.append(gateaux_error(h2_of_momentum, grad_h2, m, direction, epsilon))

    report = BiHamiltonianReport(
        time=time,
        residual_b2=residual_b2,
        residual_b1=residual_b1,
        residual_b1_energy=residual_b1_energy,
        gateaux_error_h1=max(errors_h1, default=0.0),
        gateaux_error_h2=max(errors_h2, default=0.0),
        mean_defect=mean_defect,
        kernel_constant=kernel_constant,
    )
    logger.debug(f"Bi-Hamiltonian check at t={time}: {report.model_dump()}")
    return report
