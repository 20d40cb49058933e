"""
Tests for the spectral primitives
"""

import math

import numpy as np
import pytest

from src.core.config import IncompatibleGridError, InvalidFieldError, UnsupportedOrderError
from src.core.spectral import (
    PeriodicField,
    PeriodicGrid,
    c1_norm,
    dealiased_product,
    derivative,
    evaluate_offgrid,
    evaluate_offgrid_many,
    from_spectrum,
    helmholtz,
    helmholtz_inverse,
    l2_norm,
    mean,
    random_trig_polynomial,
    refine,
    refined_minimum,
    resample,
    sobolev_norm,
    sup_norm,
    to_spectrum,
    trig_polynomial,
)


class TestPeriodicGrid:
    """Test cases for PeriodicGrid."""

    def test_points_and_wavenumbers(self):
        """Test grid points and FFT-ordered wavenumbers."""
        grid = PeriodicGrid(8)
        np.testing.assert_allclose(grid.points, np.arange(8) / 8)
        assert list(grid.wavenumbers) == [0, 1, 2, 3, -4, -3, -2, -1]
        assert grid.nyquist_index == 4
        assert grid.spacing == 0.125

    @pytest.mark.parametrize("n", [7, 6, 0, 15])
    def test_rejects_bad_sizes(self, n):
        """Test that odd or too small grids are rejected."""
        with pytest.raises(InvalidFieldError):
            PeriodicGrid(n)

    def test_grids_compare_by_size(self):
        """Test grid equality."""
        assert PeriodicGrid(16) == PeriodicGrid(16)
        assert PeriodicGrid(16).refined(2) == PeriodicGrid(32)


class TestPeriodicField:
    """Test cases for PeriodicField."""

    def setup_method(self):
        self.grid = PeriodicGrid(16)

    def test_rejects_non_finite_samples(self):
        """Test that nan samples are rejected."""
        samples = np.zeros(16)
        samples[3] = np.nan
        with pytest.raises(InvalidFieldError):
            PeriodicField(self.grid, samples)

    def test_rejects_wrong_length(self):
        """Test that the sample count must match the grid."""
        with pytest.raises(InvalidFieldError):
            PeriodicField(self.grid, np.zeros(15))

    def test_samples_are_read_only(self):
        """Test that samples cannot be mutated in place."""
        field = PeriodicField.constant(self.grid, 2.0)
        with pytest.raises(ValueError):
            field.samples[0] = 1.0

    def test_arithmetic(self):
        """Test addition, scaling and negation."""
        a = PeriodicField.constant(self.grid, 2.0)
        b = PeriodicField.constant(self.grid, 0.5)
        assert np.all((a + b).samples == 2.5)
        assert np.all((a - b).samples == 1.5)
        assert np.all((3.0 * a).samples == 6.0)
        assert np.all((a / 4).samples == 0.5)
        assert np.all((-a).samples == -2.0)
        assert np.all((1.0 - b).samples == 0.5)

    def test_field_product_requires_dealiasing(self):
        """Test that field * field is not a pointwise operator."""
        a = PeriodicField.constant(self.grid, 2.0)
        with pytest.raises(TypeError):
            a * a

    def test_mixed_grids_raise(self):
        """Test combining fields from different grids."""
        a = PeriodicField.zeros(self.grid)
        b = PeriodicField.zeros(PeriodicGrid(32))
        with pytest.raises(IncompatibleGridError):
            a + b


class TestTransforms:
    """Test cases for the forward and inverse transforms."""

    def setup_method(self):
        self.grid = PeriodicGrid(32)

    def test_mean_is_zeroth_coefficient(self):
        """Test normalisation of the spectrum."""
        field = trig_polynomial(self.grid, [(0, 1.25, 0), (3, 0.5, -0.2)])
        spectrum = to_spectrum(field)
        assert spectrum.coefficient(0) == pytest.approx(1.25)
        assert spectrum.coefficient(3) == pytest.approx(complex(0.25, 0.1))
        assert spectrum.coefficient(-3) == pytest.approx(complex(0.25, -0.1))
        assert spectrum.hermitian_defect() < 1e-14

    def test_coefficient_out_of_range(self):
        """Test that wavenumbers beyond the grid are rejected."""
        spectrum = to_spectrum(PeriodicField.zeros(self.grid))
        with pytest.raises(IndexError):
            spectrum.coefficient(16)

    def test_round_trip(self):
        """Test that synthesis inverts analysis."""
        field = random_trig_polynomial(self.grid, np.random.default_rng(1))
        back = from_spectrum(to_spectrum(field))
        np.testing.assert_allclose(back.samples, field.samples, atol=1e-14)

    def test_synthesis_on_other_grid_raises(self):
        """Test that a spectrum is tied to its grid."""
        spectrum = to_spectrum(PeriodicField.zeros(self.grid))
        with pytest.raises(IncompatibleGridError):
            from_spectrum(spectrum, PeriodicGrid(64))


class TestMultipliers:
    """Test cases for derivatives and the Helmholtz operator."""

    def setup_method(self):
        self.grid = PeriodicGrid(32)
        self.x = self.grid.points

    def test_derivative_of_sine(self):
        """Test first and second derivatives of sin(2 pi x)."""
        u = PeriodicField(self.grid, np.sin(2 * np.pi * self.x))
        np.testing.assert_allclose(derivative(u, 1).samples, 2 * np.pi * np.cos(2 * np.pi * self.x), atol=1e-12)
        np.testing.assert_allclose(derivative(u, 2).samples, -(2 * np.pi) ** 2 * u.samples, atol=1e-10)

    def test_derivative_order_zero_is_identity(self):
        """Test order 0."""
        u = PeriodicField(self.grid, np.cos(2 * np.pi * self.x))
        assert derivative(u, 0) is u

    def test_unsupported_order(self):
        """Test that orders above the limit raise."""
        u = PeriodicField.zeros(self.grid)
        with pytest.raises(UnsupportedOrderError):
            derivative(u, 9)
        with pytest.raises(UnsupportedOrderError):
            derivative(u, 3, max_order=2)

    def test_derivative_drops_nyquist(self):
        """Test that the alternating Nyquist mode has zero derivative."""
        u = PeriodicField(self.grid, (-1.0) ** np.arange(32))
        assert sup_norm(derivative(u, 1)) < 1e-12

    def test_helmholtz_eigenfunction(self):
        """Test Lambda^2 cos(2 pi k x) = (1 + 4 pi^2 k^2) cos(2 pi k x)."""
        u = PeriodicField(self.grid, np.cos(6 * np.pi * self.x))
        expected = (1 + 36 * np.pi ** 2) * u.samples
        np.testing.assert_allclose(helmholtz(u).samples, expected, atol=1e-10)

    def test_helmholtz_inverse_inverts(self):
        """Test Lambda^{-2} Lambda^2 = id on random data."""
        u = random_trig_polynomial(self.grid, np.random.default_rng(7))
        np.testing.assert_allclose(helmholtz_inverse(helmholtz(u)).samples, u.samples, atol=1e-12)


class TestNorms:
    """Test cases for norms and monitors."""

    def setup_method(self):
        self.grid = PeriodicGrid(32)
        self.x = self.grid.points

    def test_basic_norms(self):
        """Test mean, sup and L2 norms of cos(2 pi x)."""
        u = PeriodicField(self.grid, np.cos(2 * np.pi * self.x))
        assert mean(u) == pytest.approx(0.0, abs=1e-15)
        assert sup_norm(u) == pytest.approx(1.0)
        assert l2_norm(u) == pytest.approx(math.sqrt(0.5))

    def test_sobolev_norm(self):
        """Test the multiplier form of the H^s norm."""
        one = PeriodicField.constant(self.grid, 1.0)
        assert sobolev_norm(one, 3.0) == pytest.approx(1.0)
        u = PeriodicField(self.grid, np.cos(2 * np.pi * self.x))
        for s in (0.0, 1.0, 2.5):
            assert sobolev_norm(u, s) == pytest.approx(math.sqrt((1 + 4 * math.pi ** 2) ** s / 2))

    def test_sobolev_index_range(self):
        """Test that unsupported indices raise the lab error."""
        with pytest.raises(UnsupportedOrderError) as exc_info:
            sobolev_norm(PeriodicField.zeros(self.grid), 9.0)
        assert "Sobolev index 9.0" in str(exc_info.value)
        with pytest.raises(UnsupportedOrderError):
            sobolev_norm(PeriodicField.zeros(self.grid), -1.0)

    def test_c1_norm_of_sine(self):
        """Test max|u| + max|u_x| on the refined grid."""
        u = PeriodicField(self.grid, np.sin(2 * np.pi * self.x))
        assert c1_norm(u) == pytest.approx(1 + 2 * math.pi, rel=1e-12)

    def test_refined_minimum(self):
        """Test the refined minimum of 1 + cos(2 pi x)."""
        m = PeriodicField(self.grid, 1 + np.cos(2 * np.pi * self.x))
        assert refined_minimum(m) == pytest.approx(0.0, abs=1e-12)


class TestGridTransfer:
    """Test cases for resampling and off-grid evaluation."""

    def setup_method(self):
        self.grid = PeriodicGrid(16)
        self.u = random_trig_polynomial(self.grid, np.random.default_rng(3), degree=6)

    def test_refine_then_restrict(self):
        """Test that prolongation followed by restriction is the identity."""
        fine = refine(self.u, 4)
        assert fine.grid.n == 64
        np.testing.assert_allclose(resample(fine, self.grid).samples, self.u.samples, atol=1e-13)

    def test_refined_samples_match_interpolant(self):
        """Test that refined samples equal the trigonometric interpolant."""
        fine = refine(self.u, 2)
        values, _ = evaluate_offgrid_many(self.u, fine.grid.points)
        np.testing.assert_allclose(fine.samples, values, atol=1e-13)

    def test_offgrid_values_and_slopes(self):
        """Test direct evaluation of sin(2 pi x) and its derivative."""
        u = PeriodicField(self.grid, np.sin(2 * np.pi * self.grid.points))
        xs = np.array([0.123, 0.5, 0.987, 1.25, -0.3])
        values, slopes = evaluate_offgrid_many(u, xs, with_derivative=True)
        np.testing.assert_allclose(values, np.sin(2 * np.pi * xs), atol=1e-13)
        np.testing.assert_allclose(slopes, 2 * np.pi * np.cos(2 * np.pi * xs), atol=1e-12)
        assert evaluate_offgrid(u, 0.25) == pytest.approx(1.0)

    def test_nyquist_mode_is_real_under_refinement(self):
        """Test that the split Nyquist mode refines to cos(pi n x)."""
        u = PeriodicField(self.grid, (-1.0) ** np.arange(16))
        fine = refine(u, 2)
        np.testing.assert_allclose(fine.samples, np.cos(16 * np.pi * fine.grid.points), atol=1e-13)


class TestDealiasedProduct:
    """Test cases for dealiased products."""

    def setup_method(self):
        self.grid = PeriodicGrid(16)
        self.x = self.grid.points

    def test_quadratic_product(self):
        """Test cos^2 = (1 + cos 4 pi x) / 2."""
        u = PeriodicField(self.grid, np.cos(2 * np.pi * self.x))
        product = dealiased_product([u, u])
        np.testing.assert_allclose(product.samples, 0.5 * (1 + np.cos(4 * np.pi * self.x)), atol=1e-14)

    def test_cubic_product_drops_aliased_modes(self):
        """Test that a product beyond the grid resolution keeps only resolved modes."""
        u = PeriodicField(self.grid, np.cos(10 * np.pi * self.x))
        # cos^3(5 y) = (3 cos 5y + cos 15y) / 4; mode 15 is not representable on 16 points
        product = dealiased_product([u, u, u])
        np.testing.assert_allclose(product.samples, 0.75 * u.samples, atol=1e-14)

    def test_product_of_resolved_polynomials_is_exact(self):
        """Test exactness for low-degree factors."""
        rng = np.random.default_rng(11)
        grid = PeriodicGrid(64)
        a = random_trig_polynomial(grid, rng, degree=5)
        b = random_trig_polynomial(grid, rng, degree=5)
        c = random_trig_polynomial(grid, rng, degree=5)
        np.testing.assert_allclose(
            dealiased_product([a, b, c]).samples, a.samples * b.samples * c.samples, atol=1e-13
        )

    def test_argument_validation(self):
        """Test factor count and grid checks."""
        u = PeriodicField.zeros(self.grid)
        with pytest.raises(ValueError):
            dealiased_product([u])
        with pytest.raises(IncompatibleGridError):
            dealiased_product([u, PeriodicField.zeros(PeriodicGrid(32))])
