"""
Spectral primitives on the period-1 torus T = R/Z

Fields are sampled on the uniform grid x_j = j/n; the k-th Fourier mode is
exp(2*pi*i*k*x), so d/dx acts as the multiplier 2*pi*i*k.
"""

from dataclasses import dataclass
from functools import cached_property
from typing import Callable, Iterable, List, Optional, Sequence, Tuple

import numpy as np

from .config import (
    LabConfig,
    InvalidFieldError,
    IncompatibleGridError,
    UnsupportedOrderError,
)


@dataclass(frozen=True)
class PeriodicGrid:
    """Uniform grid of n points on [0, 1)."""

    n: int

    def __post_init__(self):
        if int(self.n) != self.n or self.n < LabConfig.MIN_GRID_POINTS or self.n % 2:
            raise InvalidFieldError(
                f"Grid size must be an even integer >= {LabConfig.MIN_GRID_POINTS}, got {self.n}"
            )

    @property
    def spacing(self) -> float:
        return 1.0 / self.n

    @cached_property
    def points(self) -> np.ndarray:
        points = np.arange(self.n) / self.n
        points.flags.writeable = False
        return points

    @cached_property
    def wavenumbers(self) -> np.ndarray:
        """Integer wavenumbers in FFT order: 0, 1, ..., n/2-1, -n/2, ..., -1."""
        k = np.fft.fftfreq(self.n, d=1.0 / self.n).round().astype(int)
        k.flags.writeable = False
        return k

    @property
    def nyquist_index(self) -> int:
        return self.n // 2

    def refined(self, factor: int) -> "PeriodicGrid":
        return PeriodicGrid(self.n * factor)


class PeriodicField:
    """A real function on the circle, stored as samples on a PeriodicGrid."""

    __slots__ = ("grid", "samples", "__dict__")

    def __init__(self, grid: PeriodicGrid, samples: Iterable[float]):
        values = np.array(samples, dtype=float)
        if values.shape != (grid.n,):
            raise InvalidFieldError(
                f"Expected {grid.n} samples, got array of shape {values.shape}"
            )
        if not np.all(np.isfinite(values)):
            raise InvalidFieldError("Field samples must be finite")
        values.flags.writeable = False
        self.grid = grid
        self.samples = values

    @classmethod
    def from_function(cls, grid: PeriodicGrid, func: Callable[[np.ndarray], np.ndarray]) -> "PeriodicField":
        return cls(grid, func(grid.points))

    @classmethod
    def constant(cls, grid: PeriodicGrid, value: float) -> "PeriodicField":
        return cls(grid, np.full(grid.n, float(value)))

    @classmethod
    def zeros(cls, grid: PeriodicGrid) -> "PeriodicField":
        return cls.constant(grid, 0.0)

    @cached_property
    def spectrum(self) -> "Spectrum":
        return Spectrum(self.grid, np.fft.fft(self.samples) / self.grid.n)

    def _check_grid(self, other: "PeriodicField"):
        if other.grid != self.grid:
            raise IncompatibleGridError(
                f"Fields live on different grids (n={self.grid.n} vs n={other.grid.n})"
            )

    def __add__(self, other):
        if isinstance(other, PeriodicField):
            self._check_grid(other)
            return PeriodicField(self.grid, self.samples + other.samples)
        return PeriodicField(self.grid, self.samples + float(other))

    __radd__ = __add__

    def __sub__(self, other):
        if isinstance(other, PeriodicField):
            self._check_grid(other)
            return PeriodicField(self.grid, self.samples - other.samples)
        return PeriodicField(self.grid, self.samples - float(other))

    def __rsub__(self, other):
        return PeriodicField(self.grid, float(other) - self.samples)

    def __neg__(self):
        return PeriodicField(self.grid, -self.samples)

    def __mul__(self, scalar):
        # Field-by-field products go through dealiased_product
        if isinstance(scalar, PeriodicField):
            return NotImplemented
        return PeriodicField(self.grid, self.samples * float(scalar))

    __rmul__ = __mul__

    def __truediv__(self, scalar):
        if isinstance(scalar, PeriodicField):
            return NotImplemented
        return PeriodicField(self.grid, self.samples / float(scalar))

    def __repr__(self) -> str:
        return f"PeriodicField(n={self.grid.n}, mean={self.samples.mean():.6g})"


class Spectrum:
    """Complex Fourier coefficients c_k of a field, in FFT order."""

    def __init__(self, grid: PeriodicGrid, coefficients: np.ndarray):
        coefficients = np.asarray(coefficients, dtype=complex)
        if coefficients.shape != (grid.n,):
            raise InvalidFieldError(
                f"Expected {grid.n} coefficients, got array of shape {coefficients.shape}"
            )
        self.grid = grid
        self.coefficients = coefficients

    def coefficient(self, k: int) -> complex:
        """Amplitude of exp(2*pi*i*k*x) for k in [-n/2, n/2)."""
        half = self.grid.n // 2
        if not -half <= k < half:
            raise IndexError(f"Wavenumber {k} outside [-{half}, {half})")
        return complex(self.coefficients[k % self.grid.n])

    def hermitian_defect(self) -> float:
        """max |c_{-k} - conj(c_k)| over the non-Nyquist modes."""
        c = self.coefficients
        mirrored = np.conj(np.roll(c[::-1], 1))
        defect = np.abs(c - mirrored)
        defect[self.grid.nyquist_index] = abs(c[self.grid.nyquist_index].imag)
        return float(defect.max())

    def apply(self, multiplier: np.ndarray) -> "Spectrum":
        return Spectrum(self.grid, self.coefficients * multiplier)


# ---------------------------------------------------------------------------
# Transforms
# ---------------------------------------------------------------------------

def to_spectrum(field: PeriodicField) -> Spectrum:
    """Forward transform, normalised so that c_0 is the mean."""
    return field.spectrum


def from_spectrum(spec: Spectrum, grid: Optional[PeriodicGrid] = None) -> PeriodicField:
    """Inverse transform back to grid samples (imaginary round-off dropped)."""
    grid = grid or spec.grid
    if grid != spec.grid:
        raise IncompatibleGridError(
            f"Spectrum of size {spec.grid.n} cannot be synthesised on n={grid.n}"
        )
    samples = np.fft.ifft(spec.coefficients * grid.n).real
    return PeriodicField(grid, samples)


def _apply_multiplier(field: PeriodicField, multiplier: np.ndarray, zero_nyquist: bool = False) -> PeriodicField:
    coefficients = field.spectrum.coefficients * multiplier
    if zero_nyquist:
        coefficients[field.grid.nyquist_index] = 0.0
    return from_spectrum(Spectrum(field.grid, coefficients))


def angular_wavenumbers(grid: PeriodicGrid) -> np.ndarray:
    """2*pi*k in FFT order."""
    return 2.0 * np.pi * grid.wavenumbers


# ---------------------------------------------------------------------------
# Multiplier calculus
# ---------------------------------------------------------------------------

def derivative(field: PeriodicField, order: int = 1, max_order: Optional[int] = None) -> PeriodicField:
    """Spectral derivative of the given order; the Nyquist mode is dropped."""
    max_order = LabConfig.MAX_DERIVATIVE_ORDER if max_order is None else max_order
    if order < 0 or order > max_order:
        raise UnsupportedOrderError(
            f"Derivative order {order} outside supported range [0, {max_order}]"
        )
    if order == 0:
        return field
    multiplier = (1j * angular_wavenumbers(field.grid)) ** order
    return _apply_multiplier(field, multiplier, zero_nyquist=True)


def helmholtz_symbol(grid: PeriodicGrid) -> np.ndarray:
    """Fourier symbol 1 + (2*pi*k)^2 of Lambda^2 = 1 - d^2/dx^2."""
    return 1.0 + angular_wavenumbers(grid) ** 2


def helmholtz(field: PeriodicField) -> PeriodicField:
    """Lambda^2 f = f - f_xx."""
    return _apply_multiplier(field, helmholtz_symbol(field.grid))


def helmholtz_inverse(field: PeriodicField) -> PeriodicField:
    """Lambda^{-2} f; the symbol never vanishes."""
    return _apply_multiplier(field, 1.0 / helmholtz_symbol(field.grid))


# ---------------------------------------------------------------------------
# Norms and reductions
# ---------------------------------------------------------------------------

def mean(field: PeriodicField) -> float:
    """Integral over the unit period (uniform-grid quadrature)."""
    return float(field.samples.mean())


def integral(samples: np.ndarray) -> float:
    """Trapezoidal rule on the uniform periodic grid; exact for resolved trig polynomials."""
    return float(np.mean(samples))


def sup_norm(field: PeriodicField) -> float:
    return float(np.abs(field.samples).max())


def l2_norm(field: PeriodicField) -> float:
    return float(np.sqrt(np.mean(field.samples ** 2)))


def sobolev_norm(field: PeriodicField, s: float) -> float:
    """H^s norm in Fourier-multiplier form: sqrt(sum (1+(2 pi k)^2)^s |c_k|^2)."""
    low, high = LabConfig.SOBOLEV_S_RANGE
    if not low <= s <= high:
        raise UnsupportedOrderError(f"Sobolev index {s} outside supported range [{low}, {high}]")
    weights = helmholtz_symbol(field.grid) ** s
    return float(np.sqrt(np.sum(weights * np.abs(field.spectrum.coefficients) ** 2)))


def refine(field: PeriodicField, factor: Optional[int] = None) -> PeriodicField:
    """Trigonometric interpolant sampled on a grid `factor` times finer."""
    factor = factor or LabConfig.REFINEMENT_FACTOR
    return resample(field, field.grid.refined(factor))


def c1_norm(field: PeriodicField, factor: Optional[int] = None) -> float:
    """max|u| + max|u_x| over a refined grid."""
    fine = refine(field, factor)
    fine_dx = refine(derivative(field, 1), factor)
    return float(np.abs(fine.samples).max() + np.abs(fine_dx.samples).max())


def refined_minimum(field: PeriodicField, factor: Optional[int] = None) -> float:
    """Minimum of the trigonometric interpolant over a refined grid."""
    return float(refine(field, factor).samples.min())


# ---------------------------------------------------------------------------
# Grid transfer and off-grid evaluation
# ---------------------------------------------------------------------------

def _transfer_coefficients(coefficients: np.ndarray, source: PeriodicGrid, target: PeriodicGrid) -> np.ndarray:
    """Map coefficients between grids: zero-pad when refining, truncate when coarsening."""
    out = np.zeros(target.n, dtype=complex)
    k = source.wavenumbers
    if target.n == source.n:
        out[:] = coefficients
    elif target.n > source.n:
        interior = k != -source.n // 2
        out[k[interior] % target.n] = coefficients[interior]
        # Split the Nyquist mode so the interpolant stays real
        nyquist = coefficients[source.nyquist_index]
        out[source.n // 2] += nyquist / 2
        out[-source.n // 2 % target.n] += nyquist / 2
    else:
        keep = np.abs(k) < target.n // 2
        out[k[keep] % target.n] = coefficients[keep]
    return out


def resample(field: PeriodicField, grid: PeriodicGrid) -> PeriodicField:
    """Spectral prolongation or restriction of a field onto another grid."""
    coefficients = _transfer_coefficients(field.spectrum.coefficients, field.grid, grid)
    return from_spectrum(Spectrum(grid, coefficients))


def evaluate_offgrid_many(
    field: PeriodicField,
    xs: Sequence[float],
    with_derivative: bool = False,
) -> Tuple[np.ndarray, Optional[np.ndarray]]:
    """
    Evaluate the trigonometric interpolant (and optionally its derivative) at arbitrary points.

    Direct Fourier summation, O(n) per point.

    Args:
        field: Field whose interpolant is evaluated
        xs: Evaluation points, any reals (the interpolant is 1-periodic)
        with_derivative: Also return d/dx of the interpolant

    Returns:
        Tuple of (values, derivatives or None)
    """
    xs = np.mod(np.asarray(xs, dtype=float), 1.0)
    n = field.grid.n
    c = field.spectrum.coefficients
    half = n // 2
    k = np.arange(1, half)
    phase = np.exp(2j * np.pi * np.outer(xs, k))
    positive = c[1:half]
    nyquist = c[half].real

    values = c[0].real + 2.0 * (phase @ positive).real + nyquist * np.cos(np.pi * n * xs)
    if not with_derivative:
        return values, None
    slopes = 2.0 * (phase @ (2j * np.pi * k * positive)).real - nyquist * np.pi * n * np.sin(np.pi * n * xs)
    return values, slopes


def evaluate_offgrid(field: PeriodicField, x: float) -> float:
    """Value of the trigonometric interpolant at a single point (reduced mod 1)."""
    values, _ = evaluate_offgrid_many(field, [x])
    return float(values[0])


# ---------------------------------------------------------------------------
# Products
# ---------------------------------------------------------------------------

def dealiased_product(fields: List[PeriodicField]) -> PeriodicField:
    """
    Pointwise product of 2 or 3 fields, free of aliasing.

    Each factor is zero-padded onto a grid DEALIAS_FACTOR times finer, multiplied
    there and truncated back. Padding by 2 is exact for cubic products.
    """
    if len(fields) not in (2, 3):
        raise ValueError(f"dealiased_product takes 2 or 3 fields, got {len(fields)}")
    grid = fields[0].grid
    for other in fields[1:]:
        if other.grid != grid:
            raise IncompatibleGridError(
                f"Fields live on different grids (n={grid.n} vs n={other.grid.n})"
            )
    fine_grid = grid.refined(LabConfig.DEALIAS_FACTOR)
    product = np.ones(fine_grid.n)
    for factor in fields:
        product = product * resample(factor, fine_grid).samples
    coefficients = np.fft.fft(product) / fine_grid.n
    truncated = _transfer_coefficients(coefficients, fine_grid, grid)
    return from_spectrum(Spectrum(grid, truncated))


# ---------------------------------------------------------------------------
# Builders
# ---------------------------------------------------------------------------

def trig_polynomial(grid: PeriodicGrid, modes: Iterable[Tuple[int, float, float]]) -> PeriodicField:
    """Sum of a*cos(2 pi k x) + b*sin(2 pi k x) over (k, a, b) triples."""
    x = grid.points
    samples = np.zeros(grid.n)
    for k, a, b in modes:
        samples = samples + a * np.cos(2 * np.pi * k * x) + b * np.sin(2 * np.pi * k * x)
    return PeriodicField(grid, samples)


def random_trig_polynomial(
    grid: PeriodicGrid,
    rng: np.random.Generator,
    degree: int = 8,
    decay: float = 2.0,
    include_mean: bool = True,
) -> PeriodicField:
    """Random trig polynomial with coefficients decaying like decay^{-|k|}."""
    modes = []
    start = 0 if include_mean else 1
    for k in range(start, degree + 1):
        scale = decay ** (-k)
        a, b = rng.standard_normal(2) * scale
        modes.append((k, a, b if k else 0.0))
    return trig_polynomial(grid, modes)
