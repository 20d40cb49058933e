"""
Tests for E_s norms, the first-order system checks and radius tracking
"""

import math

import numpy as np
import pytest

from src.core.analyticity import (
    SystemState,
    ck_lipschitz_check,
    ck_source_check,
    es_norm,
    es_norm_profile,
    es_property_suite,
    radius_of_spectrum,
    radius_track,
    random_sample,
    system_rhs,
)
from src.core.eulerian import integrate, rhs_nonlocal
from src.core.models import EsNormConfig, TimeStepper
from src.core.spectral import (
    PeriodicField,
    PeriodicGrid,
    derivative,
    sup_norm,
    trig_polynomial,
)

SWEEP = [(0.4, 0.2), (0.3, 0.15), (0.2, 0.1)]


class TestEsNorm:
    """Test cases for the truncated E_s norm."""

    def setup_method(self):
        self.grid = PeriodicGrid(64)

    def test_zero_field(self):
        """Test that the zero field has norm zero."""
        assert es_norm(PeriodicField.zeros(self.grid), EsNormConfig(s=0.5)) == 0.0

    def test_single_mode_closed_form(self):
        """Test |||cos(2 pi x)|||_s against the maximising first term."""
        u = trig_polynomial(self.grid, [(1, 1, 0)])
        profile = es_norm_profile(u, EsNormConfig(s=0.1))
        h2 = (1 + 4 * math.pi ** 2) / math.sqrt(2)
        assert profile.argmax == 1
        assert profile.value == pytest.approx(h2 * 2 * math.pi * 0.1 * 4, rel=1e-12)
        assert not profile.truncated

    def test_constants_are_invisible(self):
        """Test that only derivatives of order k >= 1 contribute."""
        u = trig_polynomial(self.grid, [(1, 0.3, 0.1)])
        cfg = EsNormConfig(s=0.4)
        assert es_norm(u + 5.0, cfg) == pytest.approx(es_norm(u, cfg), rel=1e-12)

    def test_monotone_in_s(self):
        """Test that the norm grows with s."""
        u = random_sample(self.grid, np.random.default_rng(3), 0.5)
        values = [es_norm(u, EsNormConfig(s=s)) for s in (0.2, 0.4, 0.6, 0.8)]
        assert values == sorted(values)

    def test_truncation_flag(self):
        """Test that a high-frequency mode at s near 1 is not settled by k_max."""
        u = trig_polynomial(self.grid, [(10, 1, 0)])
        profile = es_norm_profile(u, EsNormConfig(s=0.9, k_max=30))
        assert profile.truncated
        assert math.isfinite(profile.value)

    def test_rejects_s_outside_unit_interval(self):
        """Test the EsNormConfig range check."""
        with pytest.raises(ValueError):
            EsNormConfig(s=1.0)
        with pytest.raises(ValueError):
            EsNormConfig(s=0.5, k_max=2)


class TestEsProperties:
    """Test cases for the scale-of-spaces property suite."""

    def setup_method(self):
        rng = np.random.default_rng(11)
        grid = PeriodicGrid(64)
        self.samples = [random_sample(grid, rng, 0.5) for _ in range(6)]

    def test_inverse_helmholtz_contracts(self):
        """Test |||Lambda^{-2} u|||_{s'} <= |||u|||_s and its derivative form."""
        for s, s_prime in [(0.5, 0.25), (0.8, 0.6)]:
            report = es_property_suite(self.samples, s, s_prime)
            assert report.lambda_ratio <= 1.0
            assert report.lambda_dx_ratio <= 1.0

    def test_constants_are_finite(self):
        """Test the product and derivative constants."""
        report = es_property_suite(self.samples, 0.5, 0.4, seed=11)
        assert 0 < report.product_constant < math.inf
        assert 0 < report.dx_constant < math.inf
        assert report.samples == 6
        assert report.seed == 11
        assert report.worst_product_pair is not None

    def test_zero_samples_are_skipped(self):
        """Test that a zero sample does not divide by zero."""
        zero = PeriodicField.zeros(self.samples[0].grid)
        report = es_property_suite([zero], 0.5, 0.25)
        assert report.product_constant == 0.0
        assert report.worst_dx_sample is None

    def test_rejects_bad_pair(self):
        """Test that s' must be below s."""
        with pytest.raises(ValueError):
            es_property_suite(self.samples, 0.4, 0.5)

    def test_sample_mode_weights(self):
        """Test that a degree-1 sample has E_s norm |z|/2."""
        grid = PeriodicGrid(64)
        z = complex(*np.random.default_rng(5).standard_normal(2))
        u = random_sample(grid, np.random.default_rng(5), 0.5, degree=1)
        assert es_norm(u, EsNormConfig(s=0.5)) == pytest.approx(abs(z) / 2, rel=1e-12)

    def test_sample_degree_guard(self):
        """Test that the sample degree must stay below n/2."""
        with pytest.raises(ValueError):
            random_sample(PeriodicGrid(16), np.random.default_rng(0), 0.5, degree=8)

    def test_dx_constant_is_stable_across_pairs(self):
        """Test that the derivative constant stays within a factor of 3 over the standard pairs."""
        grid = PeriodicGrid(64)
        constants = []
        for s, s_prime in SWEEP:
            rng = np.random.default_rng(0)
            samples = [random_sample(grid, rng, s) for _ in range(8)]
            report = es_property_suite(samples, s, s_prime)
            assert report.lambda_ratio <= 1.0
            constants.append(report.dx_constant)
        assert all(0 < c < math.inf for c in constants)
        assert max(constants) < 3 * min(constants)


class TestFirstOrderSystem:
    """Test cases for the (u, v) system and its scale-of-spaces checks."""

    def setup_method(self):
        self.grid = PeriodicGrid(64)

    def test_system_reduces_to_equation(self):
        """Test that F agrees with the Eulerian right-hand side when v = u_x."""
        u = trig_polynomial(self.grid, [(0, 1, 0), (1, 0.2, 0), (2, 0, 0.1)])
        rhs = system_rhs(SystemState.from_field(u))
        assert sup_norm(rhs.u - rhs_nonlocal(u)) < 1e-10
        assert sup_norm(rhs.v - derivative(rhs.u, 1)) < 1e-8

    def test_zero_state_is_fixed(self):
        """Test the source check at the zero state."""
        report = ck_source_check(0.5, 0.25, samples=3, seed=0)
        assert report.zero_state_norm == 0.0
        assert 0 < report.growth_ratio < math.inf

    def test_lipschitz_constant(self):
        """Test that the empirical Lipschitz constant is finite and seeded."""
        first = ck_lipschitz_check(0.5, 0.25, radius=1.0, trials=4, seed=7)
        second = ck_lipschitz_check(0.5, 0.25, radius=1.0, trials=4, seed=7)
        assert 0 < first.constant < math.inf
        assert first == second
        assert first.skipped == 0

    def test_scaled_constant_ignores_state_size(self):
        """Test that halving the ball quarters the constant and leaves the scaled constant alone."""
        large = ck_lipschitz_check(0.5, 0.25, radius=1.0, trials=4, seed=7)
        small = ck_lipschitz_check(0.5, 0.25, radius=0.5, trials=4, seed=7)
        assert small.scaled_constant == pytest.approx(large.scaled_constant, rel=1e-9)
        assert large.constant == pytest.approx(4 * small.constant, rel=1e-9)
        assert large.worst_trial == small.worst_trial

    @pytest.mark.slow
    def test_scaled_constant_is_stable_across_pairs(self):
        """Test that the scaled Lipschitz constant stays within a factor of 3 over the standard pairs."""
        reports = [ck_lipschitz_check(s, s_prime, radius=1.0, trials=50, seed=0) for s, s_prime in SWEEP]
        scaled = [r.scaled_constant for r in reports]
        assert all(0 < r.constant < math.inf for r in reports)
        assert all(0 < c < math.inf for c in scaled)
        assert max(scaled) < 3 * min(scaled)

    def test_literal_variant(self):
        """Test that the literal local term also gives a finite constant."""
        report = ck_lipschitz_check(0.5, 0.25, radius=1.0, trials=3, seed=1, literal=True)
        assert math.isfinite(report.constant)

    def test_lipschitz_rejects_bad_parameters(self):
        """Test the parameter guard."""
        with pytest.raises(ValueError):
            ck_lipschitz_check(0.5, 0.5, radius=1.0, trials=1, seed=0)
        with pytest.raises(ValueError):
            ck_lipschitz_check(0.5, 0.25, radius=0.0, trials=1, seed=0)


class TestRadius:
    """Test cases for the exponential tail fit."""

    def setup_method(self):
        self.grid = PeriodicGrid(64)

    def test_exact_exponential_tail(self):
        """Test sigma on coefficients exp(-2 pi sigma k)."""
        r = math.exp(-2 * math.pi * 0.05)
        u = trig_polynomial(self.grid, [(k, r ** k, 0) for k in range(1, 21)])
        estimate = radius_of_spectrum(u.spectrum, time=0.0)
        assert estimate.defined
        assert estimate.sigma == pytest.approx(0.05, rel=1e-8)
        assert estimate.fit_quality == pytest.approx(1.0)
        assert estimate.modes_used == 19

    def test_too_few_modes(self):
        """Test the undefined estimate on a single mode."""
        estimate = radius_of_spectrum(trig_polynomial(self.grid, [(1, 0.1, 0)]).spectrum)
        assert not estimate.defined
        assert estimate.sigma == math.inf

    def test_track_along_small_data_run(self):
        """Test that the strip width stays positive for small analytic data."""
        r = math.exp(-2 * math.pi * 0.2)
        u0 = trig_polynomial(self.grid, [(k, 0.1 * r ** k, 0) for k in range(1, 7)])
        result = integrate(u0, TimeStepper(dt=1e-3, t_end=0.1), stride=20)
        estimates = radius_track(result.trajectory)
        assert [e.time for e in estimates] == [state.t for state in result.trajectory]
        assert estimates[0].sigma == pytest.approx(0.2, rel=1e-6)
        assert all(e.defined for e in estimates)
        assert all(e.sigma > 0.1 for e in estimates)

    def test_track_along_single_mode_run(self):
        """Test the track for u0 = 0.1 cos 2 pi x, whose tail starts with two or three modes."""
        u0 = trig_polynomial(self.grid, [(1, 0.1, 0)])
        result = integrate(u0, TimeStepper(dt=1e-3, t_end=0.1), stride=1)
        estimates = radius_track(result.trajectory)
        assert not estimates[0].defined
        assert all(e.defined for e in estimates[1:])
        assert all(e.sigma > 0.1 for e in estimates[1:])
        assert estimates[-1].time == pytest.approx(0.1)

    def test_two_mode_tail_is_fitted(self):
        """Test an exact fit through two resolved tail modes."""
        r = math.exp(-2 * math.pi * 0.1)
        u = trig_polynomial(self.grid, [(1, 1, 0), (2, r ** 2, 0), (4, r ** 4, 0)])
        estimate = radius_of_spectrum(u.spectrum)
        assert estimate.defined
        assert not estimate.lower_bound
        assert estimate.modes_used == 2
        assert estimate.sigma == pytest.approx(0.1, rel=1e-8)

    def test_single_tail_mode_gives_lower_bound(self):
        """Test the lower bound when one tail mode sits above round-off."""
        u = trig_polynomial(self.grid, [(1, 1, 0), (3, 1e-3, 0)])
        estimate = radius_of_spectrum(u.spectrum, time=0.5)
        expected = math.log(0.5e-3 / (1e-13 * 0.5)) / (2 * math.pi * 29)
        assert estimate.defined
        assert estimate.lower_bound
        assert estimate.modes_used == 1
        assert estimate.time == 0.5
        assert estimate.sigma == pytest.approx(expected, rel=1e-9)
