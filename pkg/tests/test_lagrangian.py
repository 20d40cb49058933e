"""
Tests for the flow-map formulation
"""

from unittest.mock import patch

import numpy as np
import pytest

from src.core.config import BlowupDetectedError, JacobianNonpositiveError
from src.core.eulerian import from_momentum, integrate, rhs_nonlocal
from src.core.lagrangian import (
    ConservativeState,
    Diffeo,
    LagrangianState,
    compose,
    conjugated_derivative,
    conjugated_derivative_by_composition,
    conjugated_helmholtz_inverse,
    conservative_velocity,
    f_eta_zeta,
    flow_map_of,
    integrate_conservative,
    integrate_flowmap,
    invert,
    lagrangian_rows,
    orbit_residual,
    reconstruct_velocity,
)
from src.core.models import BlowupPolicy, TimeStepper
from src.core.spectral import (
    PeriodicField,
    PeriodicGrid,
    c1_norm,
    dealiased_product,
    derivative,
    helmholtz,
    helmholtz_inverse,
    resample,
    sup_norm,
    trig_polynomial,
)


class TestDiffeo:
    """Test cases for circle diffeomorphisms."""

    def setup_method(self):
        self.grid = PeriodicGrid(64)
        self.x = self.grid.points

    def test_identity(self):
        """Test the identity map."""
        eta = Diffeo.identity(self.grid)
        np.testing.assert_array_equal(eta.positions, self.x)
        assert eta.min_jacobian == pytest.approx(1.0)

    def test_nonpositive_jacobian_rejected(self):
        """Test that folding maps are not diffeomorphisms."""
        theta = PeriodicField(self.grid, 0.3 * np.sin(2 * np.pi * self.x))
        with pytest.raises(JacobianNonpositiveError) as exc_info:
            Diffeo(theta)
        assert exc_info.value.min_jacobian < 0

    def test_call_matches_positions(self):
        """Test off-grid evaluation on the lift."""
        eta = Diffeo(PeriodicField(self.grid, 0.05 * np.sin(2 * np.pi * self.x)))
        np.testing.assert_allclose(eta(self.x), eta.positions, atol=1e-14)
        assert eta([1.25])[0] == pytest.approx(1.25 + 0.05)


class TestGroupOperations:
    """Test cases for inversion, composition and conjugated operators."""

    def setup_method(self):
        self.grid = PeriodicGrid(64)
        self.x = self.grid.points
        self.eta = Diffeo(PeriodicField(self.grid, 0.05 * np.sin(2 * np.pi * self.x) + 0.1))

    def test_inverse_solves_eta(self):
        """Test eta(eta^{-1}(y)) = y on the grid."""
        inverse = invert(self.eta)
        np.testing.assert_allclose(self.eta(inverse.positions), self.x, atol=1e-11)

    def test_inverse_of_shift(self):
        """Test the inverse of a rigid rotation."""
        inverse = invert(Diffeo.shift(self.grid, 0.3))
        np.testing.assert_allclose(inverse.displacement.samples, -0.3, atol=1e-12)

    def test_compose_with_shift(self):
        """Test cos(2 pi (x + 1/4)) = -sin(2 pi x)."""
        f = PeriodicField(self.grid, np.cos(2 * np.pi * self.x))
        composed = compose(f, Diffeo.shift(self.grid, 0.25))
        np.testing.assert_allclose(composed.samples, -np.sin(2 * np.pi * self.x), atol=1e-13)

    def test_conjugated_derivative_on_identity(self):
        """Test that conjugation by the identity is the plain derivative."""
        f = trig_polynomial(self.grid, [(1, 0.3, 0.2), (2, 0.1, 0)])
        identity = Diffeo.identity(self.grid)
        np.testing.assert_allclose(conjugated_derivative(f, identity).samples, derivative(f, 1).samples, atol=1e-12)

    def test_label_quotient_matches_double_composition(self):
        """Test both constructions of the conjugated derivative."""
        f = PeriodicField(self.grid, np.sin(2 * np.pi * self.x))
        quotient = conjugated_derivative(f, self.eta)
        composed = conjugated_derivative_by_composition(f, self.eta)
        assert sup_norm(quotient - composed) < 1e-8

    def test_conjugated_helmholtz_inverse_on_shift(self):
        """Test that rotations commute with Lambda^{-2}."""
        g = trig_polynomial(self.grid, [(0, 1, 0), (1, 0.5, 0)])
        result = conjugated_helmholtz_inverse(g, Diffeo.shift(self.grid, 0.2))
        np.testing.assert_allclose(result.samples, helmholtz_inverse(g).samples, atol=1e-12)

    def test_acceleration_on_identity(self):
        """Test that F(id, u) is the nonlocal part of the Eulerian right-hand side."""
        u = trig_polynomial(self.grid, [(0, 1, 0), (1, 0.3, 0.1), (2, 0.05, 0)])
        identity = Diffeo.identity(self.grid)
        expected = rhs_nonlocal(u) + dealiased_product([u, u, derivative(u, 1)])
        assert sup_norm(f_eta_zeta(identity, u) - expected) < 1e-10


class TestOrbitResidual:
    """Test cases for the momentum transport check."""

    def setup_method(self):
        self.grid = PeriodicGrid(64)
        self.u0 = from_momentum(trig_polynomial(self.grid, [(0, 1, 0), (1, 0.5, 0)]))
        self.m0 = helmholtz(self.u0)

    def test_zero_at_start(self):
        """Test the residual of the initial state in every representation."""
        identity = Diffeo.identity(self.grid)
        assert orbit_residual(LagrangianState(0.0, identity, self.u0), self.m0) < 1e-10
        assert orbit_residual(ConservativeState(0.0, identity, self.m0), self.m0) < 1e-10
        assert orbit_residual((self.u0, identity), self.m0) < 1e-10

    def test_reconstruction_on_identity(self):
        """Test u = zeta o id and the conservative velocity at t = 0."""
        identity = Diffeo.identity(self.grid)
        state = LagrangianState(0.0, identity, self.u0)
        np.testing.assert_allclose(reconstruct_velocity(state).samples, self.u0.samples, atol=1e-13)
        np.testing.assert_allclose(conservative_velocity(identity, self.m0).samples, self.u0.samples, atol=1e-13)


class TestLabelIntegrators:
    """Test cases for the flow-map and conservative integrators."""

    def setup_method(self):
        self.grid = PeriodicGrid(32)

    @pytest.mark.parametrize("integrator", [integrate_flowmap, integrate_conservative])
    def test_constant_data_is_preserved(self, integrator):
        """Test that u = 1.5 moves the labels rigidly and stays constant."""
        u0 = PeriodicField.constant(self.grid, 1.5)
        result = integrator(u0, TimeStepper(dt=0.01, t_end=1.0), stride=25)
        assert result.final.t == 1.0
        assert sup_norm(result.final.u - 1.5) < 1e-12
        final_labels = result.lagrangian[-1]
        np.testing.assert_allclose(final_labels.eta.displacement.samples, 2.25, atol=1e-10)
        assert max(result.record.orbit_residual) < 1e-10

    def test_lagrangian_rows(self):
        """Test the x, eta, eta_jacobian, zeta snapshot columns."""
        u0 = PeriodicField.constant(self.grid, 1.5)
        result = integrate_flowmap(u0, TimeStepper(dt=0.1, t_end=0.2))
        rows = lagrangian_rows(result.lagrangian[-1])
        assert rows.shape == (32, 4)
        np.testing.assert_allclose(rows[:, 1] - rows[:, 0], 0.45, atol=1e-12)
        np.testing.assert_allclose(rows[:, 2], 1.0, atol=1e-12)
        np.testing.assert_allclose(rows[:, 3], 1.5, atol=1e-12)

    def test_conservative_rows_carry_zeta(self):
        """Test that conservative snapshots rebuild zeta = u o eta."""
        u0 = PeriodicField.constant(self.grid, 1.5)
        result = integrate_conservative(u0, TimeStepper(dt=0.1, t_end=0.2))
        rows = lagrangian_rows(result.lagrangian[-1])
        np.testing.assert_allclose(rows[:, 3], 1.5, atol=1e-12)

    def test_flow_map_of_constant_trajectory(self):
        """Test eta = x + u^2 t for constant velocity."""
        u0 = PeriodicField.constant(self.grid, 1.5)
        trajectory = integrate(u0, TimeStepper(dt=0.1, t_end=0.2)).trajectory
        maps = flow_map_of(trajectory)
        assert len(maps) == 3
        np.testing.assert_allclose(maps[-1].displacement.samples, 0.45, atol=1e-12)
        assert flow_map_of([]) == []


@pytest.mark.slow
class TestCrossSolver:
    """Test cases comparing the three formulations."""

    def setup_method(self):
        self.grid = PeriodicGrid(64)
        self.u0 = from_momentum(trig_polynomial(self.grid, [(0, 1, 0), (1, 0.5, 0)]))
        self.m0 = helmholtz(self.u0)
        self.stepper = TimeStepper(dt=1e-3, t_end=0.2)

    def test_solvers_agree(self):
        """Test pairwise sup distances between Eulerian, flow-map and conservative runs."""
        eulerian = integrate(self.u0, self.stepper, stride=50)
        flowmap = integrate_flowmap(self.u0, self.stepper, stride=50)
        conservative = integrate_conservative(self.u0, self.stepper, stride=50)
        assert eulerian.record.t == flowmap.record.t == conservative.record.t
        for a, b in [(eulerian, flowmap), (eulerian, conservative), (flowmap, conservative)]:
            assert sup_norm(a.final.u - b.final.u) < 1e-6

    def test_orbit_invariant_along_flowmap(self):
        """Test (m o eta) eta_x^{3/2} = m0 along an unconstrained flow-map run."""
        result = integrate_flowmap(self.u0, TimeStepper(dt=1e-3, t_end=0.5), stride=100)
        assert max(result.record.orbit_residual) < 1e-6

    def test_orbit_invariant_from_eulerian_output(self):
        """Test the transport law using flow maps rebuilt from an Eulerian run."""
        result = integrate(self.u0, TimeStepper(dt=1e-3, t_end=0.1))
        maps = flow_map_of(result.trajectory)
        final = result.trajectory[-1]
        assert orbit_residual((final.u, maps[-1]), self.m0) < 1e-6

    def test_refined_grid_agrees(self):
        """Test that doubling the grid changes the Eulerian solution negligibly."""
        coarse = integrate(self.u0, self.stepper, stride=200)
        fine = integrate(resample(self.u0, PeriodicGrid(128)), self.stepper, stride=200)
        assert sup_norm(resample(fine.final.u, self.grid) - coarse.final.u) < 1e-8


class TestLabelStopping:
    """Test cases for the stopping rules of the label-space integrators."""

    def setup_method(self):
        self.grid = PeriodicGrid(64)
        self.u0 = from_momentum(trig_polynomial(self.grid, [(0, 1, 0), (1, 0.5, 0)]))

    @pytest.mark.parametrize("integrator", [integrate_flowmap, integrate_conservative])
    def test_c1_threshold_checked_after_every_step(self, integrator):
        """Test that the threshold trips on the first step even between probes."""
        policy = BlowupPolicy(c1_threshold=0.5 * c1_norm(self.u0))
        with pytest.raises(BlowupDetectedError) as exc_info:
            integrator(self.u0, TimeStepper(dt=1e-3, t_end=1.0), policy=policy, stride=1000)
        error = exc_info.value
        assert error.reason == "c1_threshold"
        assert error.time == pytest.approx(1e-3)
        assert error.last_state.t == 0.0
        assert error.partial.record.t == [0.0]

    def test_fixed_step_skips_speed_evaluation(self):
        """Test that a fixed-dt conservative step rebuilds the velocity only for stages and probes."""
        with patch("src.core.lagrangian.conservative_velocity", wraps=conservative_velocity) as velocity:
            integrate_conservative(self.u0, TimeStepper(dt=0.005, t_end=0.005))
        # one rebuild per RK4 stage plus one per reconstructed state
        assert velocity.call_count == 6

    def test_cfl_step_evaluates_speed_once(self):
        """Test that CFL mode adds one velocity rebuild per step."""
        with patch("src.core.lagrangian.conservative_velocity", wraps=conservative_velocity) as velocity:
            result = integrate_conservative(self.u0, TimeStepper(cfl=0.5, t_end=0.005))
        assert result.steps == 1
        assert velocity.call_count == 7


class TestGroupRefinement:
    """Test cases checking group operations against finer grids."""

    def setup_method(self):
        self.coarse = PeriodicGrid(64)
        self.fine = PeriodicGrid(256)
        theta = trig_polynomial(self.coarse, [(0, 0.1, 0), (1, 0, 0.1 / (2 * np.pi))])
        self.eta = Diffeo(theta)
        self.eta_fine = Diffeo(resample(theta, self.fine))

    def test_double_inverse(self):
        """Test invert(invert(eta)) = eta."""
        twice = invert(invert(self.eta))
        np.testing.assert_allclose(twice.displacement.samples, self.eta.displacement.samples, atol=1e-9)

    def test_conjugated_helmholtz_inverse_refines(self):
        """Test that the conjugated Lambda^{-2} agrees with its value on a 4x finer grid."""
        g = trig_polynomial(self.coarse, [(0, 1, 0), (1, 0.3, 0.2), (2, 0, 0.1), (3, 0.05, 0)])
        coarse = conjugated_helmholtz_inverse(g, self.eta)
        fine = conjugated_helmholtz_inverse(resample(g, self.fine), self.eta_fine)
        np.testing.assert_allclose(fine.samples[::4], coarse.samples, atol=1e-8)
