"""
Scale-of-Banach-spaces machinery: truncated E_s norms, their properties, the
first-order (u, v) system and radius-of-analyticity tracking.

    |||u|||_s = sup_{k>0} ||d^k u||_{H^2} s^k (k+1)^2 / k!
"""

import logging
import math
from dataclasses import dataclass
from typing import List, Optional, Sequence

import numpy as np
from scipy.special import gammaln, logsumexp

from .config import LabConfig, IncompatibleGridError
from .models import (
    EsNormConfig,
    EsNormProfile,
    EsPropertyReport,
    LipschitzReport,
    RadiusEstimate,
    SourceCheckReport,
)
from .spectral import (
    PeriodicField,
    PeriodicGrid,
    Spectrum,
    angular_wavenumbers,
    dealiased_product,
    derivative,
    from_spectrum,
    helmholtz_inverse,
    helmholtz_symbol,
    trig_polynomial,
)

logger = logging.getLogger(__name__)


# ---------------------------------------------------------------------------
# E_s norms
# ---------------------------------------------------------------------------

def es_profile_of_spectrum(spec: Spectrum, cfg: EsNormConfig) -> EsNormProfile:
    """
    E_s norm of a spectrum, accumulated in log space.

    Modes at or below SPECTRAL_NOISE_FLOOR relative to the largest coefficient
    are treated as zero; the Nyquist mode is dropped as in every derivative.
    """
    grid = spec.grid
    magnitude = np.abs(spec.coefficients)
    kappa = angular_wavenumbers(grid)
    keep = magnitude > LabConfig.SPECTRAL_NOISE_FLOOR * max(float(magnitude.max()), 1e-300)
    keep[grid.nyquist_index] = False
    if magnitude.max() == 0:
        keep[:] = False

    terms = []
    if cfg.include_zero:
        h2 = np.sum(helmholtz_symbol(grid)[keep] ** 2 * magnitude[keep] ** 2)
        terms.append((0, math.log(math.sqrt(h2)) if h2 > 0 else -math.inf))

    active = keep & (kappa != 0)
    if np.any(active):
        log_weight = 2.0 * np.log(helmholtz_symbol(grid)[active]) + 2.0 * np.log(magnitude[active])
        log_kappa = np.log(np.abs(kappa[active]))
        for k in range(1, cfg.k_max + 1):
            log_norm = 0.5 * float(logsumexp(log_weight + 2.0 * k * log_kappa))
            log_term = log_norm + k * math.log(cfg.s) + 2.0 * math.log(k + 1) - float(gammaln(k + 1))
            terms.append((k, log_term))
    else:
        terms.extend((k, -math.inf) for k in range(1, cfg.k_max + 1))

    best_k, best_log = max(terms, key=lambda item: item[1])
    if best_log > math.log(LabConfig.ES_OVERFLOW):
        return EsNormProfile(value=math.inf, argmax=best_k, truncated=True)
    value = math.exp(best_log) if best_log > -math.inf else 0.0

    truncated = False
    if value > 0:
        threshold = best_log + math.log(LabConfig.ES_TRUNCATION_RATIO)
        truncated = any(log_term >= threshold for _, log_term in terms[-3:])
    if truncated:
        logger.warning(f"E_s norm (s={cfg.s}) not settled by k_max={cfg.k_max}")
    return EsNormProfile(value=value, argmax=best_k, truncated=truncated)


def es_norm_profile(u: PeriodicField, cfg: EsNormConfig) -> EsNormProfile:
    """Value, maximising derivative order and truncation flag of |||u|||_s."""
    return es_profile_of_spectrum(u.spectrum, cfg)


def es_norm(u: PeriodicField, cfg: EsNormConfig) -> float:
    """Truncated E_s norm; +inf when a term overflows."""
    return es_profile_of_spectrum(u.spectrum, cfg).value


def _es(u: PeriodicField, s: float, k_max: int) -> float:
    return es_norm(u, EsNormConfig(s=s, k_max=k_max))


# ---------------------------------------------------------------------------
# Samples
# ---------------------------------------------------------------------------

def mode_weight(grid: PeriodicGrid, k: int, s: float, k_max: int = LabConfig.ES_K_MAX) -> float:
    """|||cos(2 pi k x)|||_s."""
    return _es(trig_polynomial(grid, [(k, 1.0, 0.0)]), s, k_max)


def random_sample(
    grid: PeriodicGrid,
    rng: np.random.Generator,
    s: float,
    degree: int = 8,
    k_max: int = LabConfig.ES_K_MAX,
) -> PeriodicField:
    """Trig polynomial whose k-th mode has E_s norm 2^{-k} |z_k|, z_k standard complex normal."""
    if not 0 < degree < grid.n // 2:
        raise ValueError(f"Sample degree {degree} must lie in (0, {grid.n // 2})")
    coefficients = np.zeros(grid.n, dtype=complex)
    for k in range(1, degree + 1):
        z = complex(*rng.standard_normal(2))
        # cos(2 pi k x) carries coefficients 1/2 at +-k
        value = z * 2.0 ** (-k) / (2.0 * mode_weight(grid, k, s, k_max))
        coefficients[k] = value
        coefficients[-k] = np.conj(value)
    return from_spectrum(Spectrum(grid, coefficients))


@dataclass(frozen=True)
class SystemState:
    """The pair (u, v) of the first-order system; v = u_x on solutions."""
    u: PeriodicField
    v: PeriodicField

    def __post_init__(self):
        if self.u.grid != self.v.grid:
            raise IncompatibleGridError("u and v must share a grid")

    @classmethod
    def from_field(cls, u: PeriodicField) -> "SystemState":
        return cls(u, derivative(u, 1))

    def __sub__(self, other: "SystemState") -> "SystemState":
        return SystemState(self.u - other.u, self.v - other.v)

    def scaled(self, factor: float) -> "SystemState":
        return SystemState(self.u * factor, self.v * factor)


def xs_norm(state: SystemState, s: float, k_max: int = LabConfig.ES_K_MAX) -> float:
    """Norm on X_s = E_s x E_s: |||u|||_s + |||v|||_s."""
    return _es(state.u, s, k_max) + _es(state.v, s, k_max)


def random_state(
    grid: PeriodicGrid,
    rng: np.random.Generator,
    s: float,
    radius: float,
    k_max: int = LabConfig.ES_K_MAX,
) -> SystemState:
    """Random (u, v) pair scaled to a uniformly drawn X_s norm below radius."""
    state = SystemState(random_sample(grid, rng, s, k_max=k_max), random_sample(grid, rng, s, k_max=k_max))
    size = xs_norm(state, s, k_max)
    target = radius * rng.uniform(0.1, 0.99)
    return state.scaled(target / size)


# ---------------------------------------------------------------------------
# Property suites
# ---------------------------------------------------------------------------

def _apply(u: PeriodicField, multiplier: np.ndarray) -> PeriodicField:
    return from_spectrum(u.spectrum.apply(multiplier))


def es_property_suite(
    samples: Sequence[PeriodicField],
    s: float,
    s_prime: float,
    k_max: int = LabConfig.ES_K_MAX,
    seed: Optional[int] = None,
) -> EsPropertyReport:
    """
    Worst observed constants in the E_s scale estimates.

    product:   |||uv|||_s <= c |||u|||_s |||v|||_s
    dx:        |||u_x|||_{s'} <= C/(s-s') |||u|||_s   (reports C)
    lambda:    |||Lambda^{-2} u|||_{s'} <= |||u|||_s
    lambda_dx: |||Lambda^{-2} u_x|||_{s'} <= |||u|||_s

    Raises:
        ValueError: Unless 0 < s' < s < 1
    """
    if not 0 < s_prime < s < 1:
        raise ValueError(f"Need 0 < s' < s < 1, got s={s}, s'={s_prime}")
    samples = list(samples)
    norms = [_es(u, s, k_max) for u in samples]

    product_constant, worst_pair = 0.0, None
    for i in range(len(samples)):
        for j in range(i, len(samples)):
            denominator = norms[i] * norms[j]
            if denominator == 0:
                continue
            ratio = _es(dealiased_product([samples[i], samples[j]]), s, k_max) / denominator
            if ratio > product_constant:
                product_constant, worst_pair = ratio, [i, j]

    dx_constant, worst_dx = 0.0, None
    lambda_ratio = lambda_dx_ratio = 0.0
    if samples:
        grid = samples[0].grid
        dx_symbol = 1j * angular_wavenumbers(grid)
        dx_symbol[grid.nyquist_index] = 0.0
        inverse_symbol = 1.0 / helmholtz_symbol(grid)
        for index, (u, norm) in enumerate(zip(samples, norms)):
            if norm == 0:
                continue
            dx_ratio = _es(_apply(u, dx_symbol), s_prime, k_max) * (s - s_prime) / norm
            if dx_ratio > dx_constant:
                dx_constant, worst_dx = dx_ratio, index
            lambda_ratio = max(lambda_ratio, _es(_apply(u, inverse_symbol), s_prime, k_max) / norm)
            lambda_dx_ratio = max(
                lambda_dx_ratio, _es(_apply(u, inverse_symbol * dx_symbol), s_prime, k_max) / norm
            )

    return EsPropertyReport(
        s=s,
        s_prime=s_prime,
        samples=len(samples),
        product_constant=product_constant,
        dx_constant=dx_constant,
        lambda_ratio=lambda_ratio,
        lambda_dx_ratio=lambda_dx_ratio,
        worst_product_pair=worst_pair,
        worst_dx_sample=worst_dx,
        seed=seed,
    )


# ---------------------------------------------------------------------------
# First-order system
# ---------------------------------------------------------------------------

def system_rhs(state: SystemState, literal: bool = False) -> SystemState:
    """
    (F, G) of the first-order system.

    F = -u^2 v - Lambda^{-2} B,  G = -2 u v^2 - u^2 v_x - Lambda^{-2} d/dx B,
    with B = 3 u^2 v + 2 v^3 + 3 u v v_x. With literal=True the local part of
    G uses -u v^2 instead of -2 u v^2, which does not keep v = u_x.
    """
    u, v = state.u, state.v
    v_x = derivative(v, 1)
    u2v = dealiased_product([u, u, v])
    source = 3.0 * u2v + 2.0 * dealiased_product([v, v, v]) + 3.0 * dealiased_product([u, v, v_x])
    f = -u2v - helmholtz_inverse(source)
    local_factor = 1.0 if literal else 2.0
    g = (
        -local_factor * dealiased_product([u, v, v])
        - dealiased_product([u, u, v_x])
        - helmholtz_inverse(derivative(source, 1))
    )
    return SystemState(f, g)


def ck_lipschitz_check(
    s: float,
    s_prime: float,
    radius: float,
    trials: int,
    seed: int,
    n: int = 64,
    k_max: int = LabConfig.ES_K_MAX,
    literal: bool = False,
) -> LipschitzReport:
    """
    Empirical Lipschitz constant of the system in the scale of spaces.

    constant is the maximum over random pairs of
    |||RHS(w1) - RHS(w2)|||_{X_s'} (s - s') / |||w1 - w2|||_{X_s}.
    The system is cubic, so constant carries the squared size of the states;
    scaled_constant divides each ratio by max(|||w1|||_{X_s'}, |||w2|||_{X_s'})^2
    and is unchanged when both states are scaled together.
    Identical pairs are skipped.
    """
    if not 0 < s_prime < s < 1 or radius <= 0:
        raise ValueError(f"Need 0 < s' < s < 1 and radius > 0, got s={s}, s'={s_prime}, radius={radius}")
    grid = PeriodicGrid(n)
    rng = np.random.default_rng(seed)
    constant, scaled, worst, skipped = 0.0, 0.0, None, 0
    for trial in range(trials):
        first = random_state(grid, rng, s, radius, k_max)
        second = random_state(grid, rng, s, radius, k_max)
        gap = xs_norm(first - second, s, k_max)
        if gap == 0:
            skipped += 1
            continue
        change = xs_norm(system_rhs(first, literal) - system_rhs(second, literal), s_prime, k_max)
        ratio = change * (s - s_prime) / gap
        if ratio > constant:
            constant, worst = ratio, trial
        size = max(xs_norm(first, s_prime, k_max), xs_norm(second, s_prime, k_max))
        scaled = max(scaled, ratio / size ** 2)
    logger.info(
        f"Lipschitz check s={s}, s'={s_prime}: constant {constant:.4g}, "
        f"scaled {scaled:.4g} over {trials} trials"
    )
    return LipschitzReport(
        s=s, s_prime=s_prime, radius=radius, trials=trials, seed=seed,
        constant=constant, scaled_constant=scaled, skipped=skipped, worst_trial=worst,
    )


def ck_source_check(
    s: float,
    s_prime: float,
    samples: int,
    seed: int,
    n: int = 64,
    radius: float = 1.0,
    k_max: int = LabConfig.ES_K_MAX,
) -> SourceCheckReport:
    """
    Norm of the system at the zero state and its cubic growth bound.

    growth_ratio is the maximum of |||RHS(w)|||_{X_s'} (s - s') / |||w|||_{X_s}^3.
    """
    grid = PeriodicGrid(n)
    zero = SystemState(PeriodicField.zeros(grid), PeriodicField.zeros(grid))
    zero_norm = xs_norm(system_rhs(zero), s, k_max)
    rng = np.random.default_rng(seed)
    growth = 0.0
    for _ in range(samples):
        state = random_state(grid, rng, s, radius, k_max)
        size = xs_norm(state, s, k_max)
        growth = max(growth, xs_norm(system_rhs(state), s_prime, k_max) * (s - s_prime) / size ** 3)
    return SourceCheckReport(s=s, s_prime=s_prime, zero_state_norm=zero_norm, growth_ratio=growth, samples=samples)


# ---------------------------------------------------------------------------
# Radius of analyticity
# ---------------------------------------------------------------------------

def radius_of_spectrum(spec: Spectrum, time: Optional[float] = None) -> RadiusEstimate:
    """
    Fit log|c_k| = a - 2 pi sigma k over resolved modes with k >= 2.

    A tail with no resolved mode gives an undefined estimate with
    sigma = +inf. A tail with a single resolved mode k* is band-limited
    above round-off; it gets the lower bound
    sigma = log(|c_k*| / floor) / (2 pi (n/2 - k*)) and lower_bound = True.
    """
    grid = spec.grid
    magnitude = np.abs(spec.coefficients)
    k = grid.wavenumbers
    floor = LabConfig.SPECTRAL_NOISE_FLOOR * max(float(magnitude.max()), 1e-300)
    usable = (k >= LabConfig.RADIUS_MIN_WAVENUMBER) & (k < grid.n // 2) & (magnitude > floor)
    count = int(usable.sum())
    if magnitude.max() == 0 or count == 0:
        return RadiusEstimate(time=time, sigma=math.inf, fit_quality=0.0, modes_used=0, defined=False)

    if count < LabConfig.RADIUS_MIN_MODES:
        last = int(k[usable].max())
        sigma = math.log(float(magnitude[usable].max()) / floor) / (2.0 * math.pi * (grid.n // 2 - last))
        return RadiusEstimate(
            time=time,
            sigma=sigma,
            fit_quality=0.0,
            tail_floor=float(np.log10(magnitude[usable].min())),
            modes_used=count,
            lower_bound=True,
        )

    modes = k[usable].astype(float)
    logs = np.log(magnitude[usable])
    slope, intercept = np.polyfit(modes, logs, 1)
    fitted = slope * modes + intercept
    total = float(np.sum((logs - logs.mean()) ** 2))
    quality = 1.0 if total == 0 else 1.0 - float(np.sum((logs - fitted) ** 2)) / total
    return RadiusEstimate(
        time=time,
        sigma=max(0.0, -float(slope) / (2.0 * math.pi)),
        fit_quality=min(1.0, max(0.0, quality)),
        tail_floor=float(np.log10(magnitude[usable].min())),
        modes_used=int(usable.sum()),
    )


def radius_track(trajectory: Sequence) -> List[RadiusEstimate]:
    """Radius estimates for every state (objects carrying `t` and `u`) of a trajectory."""
    return [radius_of_spectrum(state.u.spectrum, state.t) for state in trajectory]
