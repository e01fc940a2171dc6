"""Tests for observable functions, measures, transport, and conservation."""

import math

import numpy as np
import pytest

from eqm_lab.flow import IntegratorConfig, linear_propagator, propagate
from eqm_lab.hamiltonians import linear, mean_field
from eqm_lab.hilbert import (
    SIGMA_X,
    SIGMA_Z,
    DensityMatrix,
    HermitianOperator,
    StateVector,
    max_abs,
    projector,
    trace_pairing,
)
from eqm_lab.observables import (
    ObservableFunction,
    StateMeasure,
    conservation_residual,
    constant_observable,
    expectation,
    heisenberg_transform,
    pushforward_state,
    trace_scaled_observable,
)
from conftest import random_density, random_hermitian


@pytest.fixture
def cfg():
    return IntegratorConfig(dt=1e-3, t_final=1.0)


@pytest.fixture
def h_mf(sx, sz):
    return mean_field(sx, sz, 1.0)


class TestBuilders:
    def test_constant_ignores_state(self, sz, rng):
        f = constant_observable(sz)
        for _ in range(3):
            assert max_abs(f.eval(random_density(rng, 2)).matrix - SIGMA_Z) == 0.0

    def test_constant_expectation_at_dirac(self, rng):
        a = random_hermitian(rng, 3)
        rho = random_density(rng, 3)
        value = expectation(StateMeasure.dirac(rho), constant_observable(a))
        assert value == pytest.approx(trace_pairing(rho, a), abs=1e-13)

    def test_trace_scaled_values(self, sx, sz, qubit_up):
        f = trace_scaled_observable(sz, sx)
        np.testing.assert_allclose(f.eval(qubit_up).matrix, SIGMA_X, atol=1e-14)
        mixed = DensityMatrix(np.eye(2) / 2)
        assert max_abs(f.eval(mixed).matrix) < 1e-14

    def test_trace_scaled_dimension_mismatch(self, sx):
        with pytest.raises(ValueError, match="dimension mismatch"):
            trace_scaled_observable(sx, HermitianOperator(np.eye(3)))


class TestStateMeasure:
    def test_requires_normalized_weights(self, qubit_up):
        with pytest.raises(ValueError, match="sum to 1"):
            StateMeasure(support=(qubit_up,), weights=np.array([0.7]))

    def test_rejects_negative_weights(self, qubit_up, qubit_plus):
        with pytest.raises(ValueError, match="nonnegative"):
            StateMeasure(support=(qubit_up, qubit_plus), weights=np.array([1.5, -0.5]))

    def test_rejects_empty_support(self):
        with pytest.raises(ValueError, match="nonempty"):
            StateMeasure(support=(), weights=np.array([]))

    def test_rejects_mixed_dimensions(self, qubit_up):
        other = DensityMatrix(np.eye(3) / 3)
        with pytest.raises(ValueError, match="dimension mismatch"):
            StateMeasure(support=(qubit_up, other), weights=np.array([0.5, 0.5]))

    def test_two_point_sigma_z_expectation(self, sz, qubit_up):
        down = DensityMatrix(np.diag([0.0, 1.0]).astype(complex))
        omega = StateMeasure(support=(qubit_up, down), weights=np.array([0.5, 0.5]))
        assert expectation(omega, constant_observable(sz)) == pytest.approx(0.0, abs=1e-14)

    def test_genuine_mixture_differs_from_barycenter(self, sz, qubit_up):
        # Same average state, different measure: a state-dependent observable
        # separates them, which is the reason observables depend on the state.
        down = DensityMatrix(np.diag([0.0, 1.0]).astype(complex))
        omega = StateMeasure(support=(qubit_up, down), weights=np.array([0.5, 0.5]))
        barycenter = StateMeasure.dirac(DensityMatrix(np.eye(2) / 2))
        f = trace_scaled_observable(sz, sz)
        assert expectation(omega, f) == pytest.approx(1.0, abs=1e-13)
        assert expectation(barycenter, f) == pytest.approx(0.0, abs=1e-13)


class TestHeisenbergTransform:
    def test_zero_time_is_identity(self, h_mf, cfg, sx, rng):
        f = constant_observable(sx)
        rho = random_density(rng, 2)
        moved = heisenberg_transform(f, h_mf, 0.0, cfg)
        assert max_abs(moved.eval(rho).matrix - SIGMA_X) == 0.0

    def test_linear_case_collapses_to_conjugation(self, sz, sx, cfg, rng):
        # For a state-independent generator the transported observable is the
        # same conjugated matrix at every state.
        h = linear(sz)
        f = constant_observable(sx)
        moved = heisenberg_transform(f, h, 0.7, cfg)
        u = linear_propagator(sz, 0.7)
        expected = u.matrix.conj().T @ SIGMA_X @ u.matrix
        for rho in (random_density(rng, 2), random_density(rng, 2)):
            assert max_abs(moved.eval(rho).matrix - expected) < 1e-8

    def test_group_law_on_mean_field(self, h_mf, cfg, sx, qubit_up):
        f = constant_observable(sx)
        once = heisenberg_transform(heisenberg_transform(f, h_mf, 0.5, cfg), h_mf, 0.7, cfg)
        direct = heisenberg_transform(f, h_mf, 1.2, cfg)
        assert max_abs(once.eval(qubit_up).matrix - direct.eval(qubit_up).matrix) < 1e-7

    def test_linearity_pointwise(self, h_mf, cfg, sx, sz, qubit_up):
        f, g = constant_observable(sx), trace_scaled_observable(sz, sz)
        alpha, beta = 1.3, -0.6

        def combo_eval(rho):
            return HermitianOperator(alpha * f.eval(rho).matrix + beta * g.eval(rho).matrix)

        combo = ObservableFunction(eval=combo_eval, label="combo")
        lhs = heisenberg_transform(combo, h_mf, 0.4, cfg).eval(qubit_up).matrix
        rhs = (alpha * heisenberg_transform(f, h_mf, 0.4, cfg).eval(qubit_up).matrix
               + beta * heisenberg_transform(g, h_mf, 0.4, cfg).eval(qubit_up).matrix)
        assert max_abs(lhs - rhs) < 1e-12

    def test_preserves_identity(self, h_mf, cfg, qubit_up):
        f = constant_observable(HermitianOperator(np.eye(2)))
        moved = heisenberg_transform(f, h_mf, 1.0, cfg)
        assert max_abs(moved.eval(qubit_up).matrix - np.eye(2)) < 1e-10

    def test_preserves_positivity(self, h_mf, cfg, rng):
        a = random_hermitian(rng, 2)
        psd = constant_observable(HermitianOperator(a.matrix @ a.matrix))
        moved = heisenberg_transform(psd, h_mf, 1.0, cfg)
        lowest = float(np.linalg.eigvalsh(moved.eval(random_density(rng, 2)).matrix)[0])
        assert lowest >= -1e-10

    def test_preserves_products_pointwise(self, h_mf, cfg, rng):
        # On raw matrices: conjugating a product equals the product of the
        # conjugations, which makes the transport multiplicative.
        rho = random_density(rng, 2)
        rho_t, u = propagate(h_mf, rho, 0.8, cfg)
        a, b = random_hermitian(rng, 2).matrix, random_hermitian(rng, 2).matrix
        ud = u.matrix.conj().T
        lhs = ud @ (a @ b) @ u.matrix
        rhs = (ud @ a @ u.matrix) @ (ud @ b @ u.matrix)
        assert max_abs(lhs - rhs) < 1e-10


class TestPushforward:
    def test_zero_time(self, h_mf, cfg, qubit_up, qubit_plus):
        omega = StateMeasure(support=(qubit_up, qubit_plus), weights=np.array([0.3, 0.7]))
        moved = pushforward_state(omega, h_mf, 0.0, cfg)
        assert max_abs(moved.support[0].matrix - qubit_up.matrix) == 0.0
        np.testing.assert_array_equal(moved.weights, omega.weights)

    def test_dirac_moves_to_evolved_state(self, h_mf, cfg, qubit_up):
        moved = pushforward_state(StateMeasure.dirac(qubit_up), h_mf, 0.5, cfg)
        endpoint, _ = propagate(h_mf, qubit_up, 0.5, cfg)
        assert max_abs(moved.support[0].matrix - endpoint.matrix) < 1e-14

    def test_two_point_linear_flow_mixes_rabi_curves(self, sz, sx, cfg):
        plus = projector(StateVector(np.array([1.0, 1.0]) / np.sqrt(2)))
        tilted = projector(StateVector(np.array([math.cos(0.3), math.sin(0.3)])))
        omega = StateMeasure(support=(plus, tilted), weights=np.array([0.4, 0.6]))
        h = linear(sz)
        f = constant_observable(sx)
        for t in (0.3, 0.9):
            moved = pushforward_state(omega, h, t, cfg)
            # each support point follows its own exact precession curve
            expected = 0.4 * math.cos(2 * t) + 0.6 * math.sin(0.6) * math.cos(2 * t)
            assert expectation(moved, f) == pytest.approx(expected, abs=1e-8)

    def test_duality_with_observable_transport(self, h_mf, cfg, sx, sz, qubit_up, qubit_plus):
        omega = StateMeasure(support=(qubit_up, qubit_plus), weights=np.array([0.25, 0.75]))
        f = trace_scaled_observable(sz, sx)
        for t in (0.5, 1.0):
            lhs = expectation(pushforward_state(omega, h_mf, t, cfg), f)
            rhs = expectation(omega, heisenberg_transform(f, h_mf, t, cfg))
            assert abs(lhs - rhs) <= 1e-8


class TestConservationResidual:
    def test_zero_time_is_exactly_zero(self, h_mf, cfg, sx, qubit_up):
        assert conservation_residual(constant_observable(sx), h_mf, qubit_up, 0.0, cfg) == 0.0

    def test_linear_flow_cancels_exactly(self, sz, sx, cfg, rng):
        residual = conservation_residual(constant_observable(sx), linear(sz),
                                         random_density(rng, 2), 1.0, cfg)
        assert residual <= 1e-10

    def test_mean_field_with_state_dependent_observable(self, h_mf, cfg, sx, sz, qubit_up):
        f = trace_scaled_observable(sz, sx)
        assert conservation_residual(f, h_mf, qubit_up, 2.0, cfg) <= 1e-7
