import numpy as np
from django.test import SimpleTestCase
from hypothesis import given, settings, strategies as st
from numpy.testing import assert_allclose

from realization import generators, grids, numkit, systems, transforms
from realization.exceptions import (
    DimensionMismatch,
    InfeasibleCoupler,
    InvalidParameter,
    MinimalityRequired,
    NotContraction,
    OutsideCutPlane,
)
from realization.rsclass import gamma_transform, to_nfunction

seeds = st.integers(min_value=0, max_value=2**32 - 1)
inputs = st.integers(min_value=1, max_value=3)
states = st.integers(min_value=0, max_value=4)
parameters = st.sampled_from([-0.7, -0.3, 0.3, 0.7])
JACOBI_POINT = 0.5j


def shift_system():
    return generators.inner_system([[0.0]])


def transfer_of(sys):
    return lambda z: systems.transfer(sys, z)


class PhiTests(SimpleTestCase):
    def test_pointwise_values(self):
        for z in grids.sample_grid():
            assert_allclose(transforms.phi_eval(generators.constant_system([[0.0]]), z), [[z]], atol=1e-12)
            assert_allclose(transforms.phi_eval(shift_system(), z), [[0.0]], atol=1e-12)
            assert_allclose(transforms.phi_eval(generators.inner_system([[0.3]]), z), [[-0.3]], atol=1e-10)

    def test_zero_function_realized_by_shift(self):
        realized = transforms.phi_realize(generators.constant_system([[0.0]]))
        assert_allclose(realized.matrix, [[0.0, 1.0], [1.0, 0.0]])

    def test_unitary_source_gives_stateless_result(self):
        realized = transforms.phi_realize(generators.inner_system([[0.6]]))
        self.assertEqual(realized.dim_state, 0)
        assert_allclose(realized.D, [[-0.6]], atol=1e-12)

    def test_realization_stays_passive_for_seed_3(self):
        sys = generators.random_selfadjoint_system(generators.rng(3), 1, 3)
        realized = transforms.phi_realize(sys)
        self.assertLessEqual(numkit.opnorm(realized.matrix), 1 + 1e-10)
        self.assertTrue(systems.krylov_analysis(realized).minimal)

    @settings(max_examples=100, deadline=None)
    @given(seed=seeds, m=inputs, n=states)
    def test_realization_matches_pointwise_transform(self, seed, m, n):
        sys = generators.random_selfadjoint_system(generators.rng(seed), m, n)
        realized = transforms.phi_realize(sys)
        self.assertTrue(realized.selfadjoint)
        self.assertLess(
            systems.transfer_gap(transfer_of(realized), lambda z: transforms.phi_eval(sys, z), grids.sample_grid()),
            1e-9,
        )
        self.assertTrue(systems.krylov_analysis(realized).minimal)

    @settings(max_examples=100, deadline=None)
    @given(seed=seeds, m=inputs, n=states)
    def test_involution(self, seed, m, n):
        sys = generators.random_selfadjoint_system(generators.rng(seed), m, n)
        twice = transforms.phi_realize(transforms.phi_realize(sys))
        self.assertLess(systems.transfer_gap(transfer_of(twice), transfer_of(sys), grids.sample_grid()), 1e-9)
        self.assertTrue(systems.krylov_analysis(twice).minimal)


class XiTests(SimpleTestCase):
    def test_zero_parameter_is_identity(self):
        sys = generators.random_selfadjoint_system(generators.rng(6), 2, 3)
        assert_allclose(transforms.xi_realize(sys, 0).matrix, sys.matrix, atol=1e-12)

    def test_shift(self):
        z = 1j
        assert_allclose(systems.transfer(transforms.xi_realize(shift_system(), 0.5), z), [[(z + 0.5) / (1 + 0.5 * z)]])

    def test_parameter_range(self):
        for a in (1.0, -1.0, 2.0, float('nan')):
            with self.assertRaises(InvalidParameter):
                transforms.xi_realize(shift_system(), a)

    @settings(max_examples=15, deadline=None)
    @given(seed=seeds, m=inputs, n=states, a=parameters)
    def test_composition_with_moebius_map(self, seed, m, n, a):
        sys = generators.random_selfadjoint_system(generators.rng(seed), m, n)
        realized = transforms.xi_realize(sys, a)
        self.assertLess(
            systems.transfer_gap(
                transfer_of(realized), lambda z: systems.transfer(sys, grids.moebius_point(z, a)), grids.disk_grid()
            ),
            1e-9,
        )
        self.assertTrue(systems.krylov_analysis(realized).minimal)

    def test_group_law(self):
        sys = generators.random_selfadjoint_system(generators.rng(9), 1, 3)
        twice = transforms.xi_realize(transforms.xi_realize(sys, 0.5), 0.5)
        once = transforms.xi_realize(sys, 0.8)
        self.assertLess(systems.transfer_gap(transfer_of(twice), transfer_of(once), grids.sample_grid()), 1e-9)


class OperatorMoebiusTests(SimpleTestCase):
    def test_fundamental_symmetry_is_fixed(self):
        J = np.diag([1.0, -1.0])
        assert_allclose(transforms.moebius_operator(J, 0.3), J, atol=1e-12)

    def test_stateless_zero(self):
        moved = transforms.operator_moebius(generators.constant_system([[0.0]]), 0.5)
        assert_allclose(moved.matrix, [[-0.5]])

    def test_inverse_parameter_undoes_the_map(self):
        T = generators.random_hermitian_contraction(generators.rng(12), 4)
        there = transforms.moebius_operator(T, 0.4)
        assert_allclose(transforms.moebius_operator(there, -0.4), T, atol=1e-10)

    @settings(max_examples=15, deadline=None)
    @given(seed=seeds, m=inputs, n=states, a=parameters)
    def test_block_form(self, seed, m, n, a):
        sys = generators.random_selfadjoint_system(generators.rng(seed), m, n)
        assert_allclose(transforms.attrns_blocks(sys, a), transforms.operator_moebius(sys, a).matrix, atol=1e-9)

    @settings(max_examples=15, deadline=None)
    @given(seed=seeds, m=inputs, n=states, a=parameters)
    def test_redheffer_of_xi_realization(self, seed, m, n, a):
        sys = generators.random_selfadjoint_system(generators.rng(seed), m, n)
        coupled = transforms.redheffer(transforms.k_a_coupler(-a, m), transforms.xi_realize(sys, a))
        assert_allclose(coupled.matrix, transforms.operator_moebius(sys, a).matrix, atol=1e-9)


class RedhefferTests(SimpleTestCase):
    def test_identity_coupler(self):
        sys = generators.random_selfadjoint_system(generators.rng(13), 2, 2)
        coupler = transforms.RedhefferCoupler.build(np.zeros((2, 2)), np.eye(2), np.zeros((2, 2)))
        assert_allclose(transforms.redheffer(coupler, sys).matrix, sys.matrix, atol=1e-12)

    def test_k_a_coupler_gives_moebius_value(self):
        realized = transforms.redheffer(transforms.k_a_coupler(0.5), shift_system())
        assert_allclose(systems.transfer(realized, 0), [[0.5]], atol=1e-12)
        assert_allclose(
            transforms.theta_value(transforms.k_a_coupler(0.5), np.array([[0.2]])),
            transforms.moebius_value(np.array([[0.2]]), 0.5),
        )

    @settings(max_examples=50, deadline=None)
    @given(seed=seeds, m=inputs, h=inputs, n=states)
    def test_transfer_is_theta_of_omega(self, seed, m, h, n):
        generator = generators.rng(seed)
        coupler = generators.random_coupler(generator, m, h)
        sys = generators.random_selfadjoint_system(generator, h, n)
        coupled = transforms.redheffer(coupler, sys)
        self.assertEqual(coupled.dim_input, m)
        self.assertLessEqual(numkit.opnorm(coupled.matrix), 1 + 1e-9)
        self.assertLess(
            systems.transfer_gap(
                transfer_of(coupled),
                lambda z: transforms.theta_value(coupler, systems.transfer(sys, z)),
                grids.disk_grid(),
            ),
            1e-9,
        )

    def test_dimension_mismatch(self):
        with self.assertRaises(DimensionMismatch):
            transforms.redheffer(transforms.k_a_coupler(0.5, 2), shift_system())

    def test_infeasible_coupler(self):
        coupler = transforms.RedhefferCoupler.build([[0.0]], [[0.0]], [[1.0]])
        with self.assertRaises(InfeasibleCoupler):
            transforms.redheffer(coupler, generators.constant_system([[0.4]]))

    def test_unit_k22_with_zero_value_at_zero(self):
        coupler = transforms.RedhefferCoupler.build([[0.0]], [[0.0]], [[1.0]])
        coupled = transforms.redheffer(coupler, shift_system())
        self.assertEqual(coupled.dim_input, 1)

    def test_coupler_must_be_contraction(self):
        with self.assertRaises(NotContraction):
            transforms.RedhefferCoupler.build([[0.9]], [[0.9]], [[0.0]])

    def test_coupler_from_matrix(self):
        coupler = transforms.RedhefferCoupler.from_matrix(transforms.k_a_coupler(0.3).matrix, 1)
        assert_allclose(coupler.k22, [[-0.3]])
        self.assertEqual(coupler.dim_inner, 1)


class PiAndZetaTests(SimpleTestCase):
    def test_pi_a_of_shift(self):
        assert_allclose(systems.transfer(transforms.pi_a_realize(shift_system(), 0.5), 0), [[0.5]], atol=1e-12)

    def test_zeta_of_shift(self):
        assert_allclose(systems.transfer(transforms.zeta_realize(shift_system(), 0.5), 0), [[-0.5]], atol=1e-12)

    def test_zero_parameter(self):
        sys = generators.random_selfadjoint_system(generators.rng(14), 2, 2)
        assert_allclose(transforms.pi_a_realize(sys, 0).matrix, sys.matrix, atol=1e-12)
        self.assertLess(
            systems.transfer_gap(transfer_of(transforms.zeta_realize(sys, 0)), transfer_of(sys), grids.sample_grid()),
            1e-9,
        )

    @settings(max_examples=15, deadline=None)
    @given(seed=seeds, m=inputs, n=states, a=parameters)
    def test_pi_a_is_moebius_of_omega(self, seed, m, n, a):
        sys = generators.random_selfadjoint_system(generators.rng(seed), m, n)
        realized = transforms.pi_a_realize(sys, a)
        self.assertLess(
            systems.transfer_gap(
                transfer_of(realized),
                lambda z: transforms.moebius_value(systems.transfer(sys, z), a),
                grids.disk_grid(),
            ),
            1e-9,
        )
        assert_allclose(realized.matrix, transforms.redheffer(transforms.k_a_coupler(a, m), sys).matrix, atol=1e-9)

    @settings(max_examples=15, deadline=None)
    @given(seed=seeds, m=inputs, n=states, a=parameters)
    def test_zeta_inverts_pi_a(self, seed, m, n, a):
        sys = generators.random_selfadjoint_system(generators.rng(seed), m, n)
        zeta = transforms.zeta_realize(sys, a)
        self.assertLess(
            systems.transfer_gap(
                transfer_of(zeta),
                lambda z: transforms.moebius_value(systems.transfer(sys, z), -a),
                grids.disk_grid(),
            ),
            1e-9,
        )
        back = transforms.pi_a_realize(zeta, a)
        self.assertLess(systems.transfer_gap(transfer_of(back), transfer_of(sys), grids.disk_grid()), 1e-9)


class FixedPointTests(SimpleTestCase):
    def test_reference_values(self):
        assert_allclose(transforms.omega0_eval(1j), [[1j / (1 + np.sqrt(2))]], atol=1e-12)
        assert_allclose(transforms.m0_eval(1j), [[1j / np.sqrt(2)]], atol=1e-12)

    def test_omega0_is_fixed_by_phi(self):
        for z in grids.sample_grid():
            omega = transforms.omega0_eval(z)
            assert_allclose(transforms.phi_value(omega, z), omega, atol=1e-10)

    def test_cuts_rejected(self):
        with self.assertRaises(OutsideCutPlane):
            transforms.omega0_eval(2.0)
        with self.assertRaises(OutsideCutPlane):
            transforms.m0_eval(0.5)

    def test_constant(self):
        report = transforms.fixed_point_tests(generators.constant_system([[0.4]]), 0.5)
        self.assertTrue(report.composition_fixed)
        self.assertFalse(report.conjugated_fixed)
        self.assertFalse(report.reflected_fixed)

    def test_shift(self):
        report = transforms.fixed_point_tests(shift_system(), 0.5)
        self.assertFalse(report.composition_fixed)
        self.assertTrue(report.conjugated_fixed)
        self.assertFalse(report.reflected_fixed)

    def test_fundamental_symmetry(self):
        report = transforms.fixed_point_tests(generators.constant_system(np.diag([1.0, -1.0])), 0.5)
        self.assertTrue(report.composition_fixed)
        self.assertTrue(report.conjugated_fixed)
        self.assertTrue(report.reflected_fixed)

    def test_parameter_checks(self):
        for a in (0.0, 1.0, -3.0):
            with self.assertRaises(InvalidParameter):
                transforms.fixed_point_tests(shift_system(), a)


class JacobiTests(SimpleTestCase):
    def test_entries(self):
        T = transforms.jacobi_system(3).matrix
        self.assertAlmostEqual(T[0, 1].real, 1 / np.sqrt(2))
        self.assertAlmostEqual(T[1, 2].real, 0.5)
        self.assertAlmostEqual(T[2, 3].real, 0.5)
        self.assertEqual(T.shape, (4, 4))

    def test_first_truncation_halves_the_shift(self):
        assert_allclose(systems.transfer(transforms.jacobi_system(1), 0.3j), [[0.15j]], atol=1e-14)

    def test_matrix_valued(self):
        sys = transforms.jacobi_system(4, dim_input=2)
        self.assertEqual(sys.dim_input, 2)
        self.assertEqual(sys.dim_state, 8)
        scalar = systems.transfer(transforms.jacobi_system(4), JACOBI_POINT)[0, 0]
        assert_allclose(systems.transfer(sys, JACOBI_POINT), scalar * np.eye(2), atol=1e-12)

    def test_negative_order(self):
        with self.assertRaises(InvalidParameter):
            transforms.jacobi_system(-1)

    def test_convergence_to_fixed_point(self):
        target = transforms.omega0_eval(JACOBI_POINT)
        errors = [
            numkit.norm2(systems.transfer(transforms.jacobi_system(n), JACOBI_POINT) - target)
            for n in (1, 2, 4, 8, 16, 32)
        ]
        for previous, current in zip(errors, errors[1:]):
            if previous > 1e-14:
                self.assertLess(current, previous)
            else:
                self.assertLess(current, 1e-14)
        self.assertLess(errors[3], 1e-8)

    def test_truncations_are_minimal(self):
        for n in (1, 2, 4, 8, 16, 32):
            self.assertTrue(systems.krylov_analysis(transforms.jacobi_system(n)).minimal)


class InnerDilationTests(SimpleTestCase):
    def test_shift_is_its_own_dilation(self):
        dil = transforms.inner_dilate(shift_system())
        self.assertEqual(dil.dim_ambient, 1)
        assert_allclose(dil.a_tilde, [[0.0]])

    def test_zero_function(self):
        dil = transforms.inner_dilate(generators.constant_system([[0.0]]))
        self.assertEqual(dil.dim_ambient, 2)
        assert_allclose(dil.a_tilde, [[0.0, -1.0], [-1.0, 0.0]])

    def test_scaled_shift(self):
        dil = transforms.inner_dilate(transforms.jacobi_system(1))
        self.assertEqual(dil.dim_ambient, 3)
        self.assertLess(dil.reconstruction_residual, 1e-9)

    @settings(max_examples=15, deadline=None)
    @given(seed=seeds, m=inputs, n=states)
    def test_random_dilations(self, seed, m, n):
        sys = generators.random_selfadjoint_system(generators.rng(seed), m, n)
        dil = transforms.inner_dilate(sys)
        self.assertLess(dil.reconstruction_residual, 1e-9)
        self.assertTrue(dil.simple)
        assert_allclose(dil.a_tilde, numkit.adjoint(dil.a_tilde), atol=1e-12)

    @settings(max_examples=10, deadline=None)
    @given(seed=seeds, m=st.integers(min_value=1, max_value=2), n=st.integers(min_value=1, max_value=3))
    def test_dilations_are_unitarily_equivalent(self, seed, m, n):
        generator = generators.rng(seed)
        sys = generators.random_selfadjoint_system(generator, m, n)
        rotated = systems.conjugate_state(sys, generators.random_unitary(generator, n))
        first = transforms.dilation_system(transforms.inner_dilate(sys))
        second = transforms.dilation_system(transforms.inner_dilate(rotated))
        self.assertIsNotNone(systems.unitary_similarity(first, second))

    def test_requires_minimal_system(self):
        sys = systems.validate_passive(np.diag([0.5, 0.3]), 1, True)
        with self.assertRaises(MinimalityRequired):
            transforms.inner_dilate(sys)


class SpectralMeasureTests(SimpleTestCase):
    def test_shift_has_one_atom(self):
        measure = transforms.spectral_measure(transforms.inner_dilate(shift_system()))
        self.assertEqual(len(measure.atoms), 1)
        t, weight = measure.atoms[0]
        self.assertAlmostEqual(t, 0.0)
        assert_allclose(weight, [[1.0]])

    def test_zero_function_has_two_atoms(self):
        measure = transforms.spectral_measure(transforms.inner_dilate(generators.constant_system([[0.0]])))
        assert_allclose([t for t, _ in measure.atoms], [-1.0, 1.0])
        for _, weight in measure.atoms:
            assert_allclose(weight, [[0.5]], atol=1e-12)
        assert_allclose(measure.distribution(0.0), [[0.5]], atol=1e-12)

    @settings(max_examples=15, deadline=None)
    @given(seed=seeds, m=inputs, n=states)
    def test_measure_reproduces_transfer(self, seed, m, n):
        sys = generators.random_selfadjoint_system(generators.rng(seed), m, n)
        measure = transforms.spectral_measure(transforms.inner_dilate(sys))
        assert_allclose(measure.total(), np.eye(m), atol=1e-10)
        points = [t for t, _ in measure.atoms]
        self.assertEqual(points, sorted(points))
        self.assertLess(systems.transfer_gap(measure.evaluate, transfer_of(sys), grids.disk_grid()), 1e-9)


class GammaRealizeTests(SimpleTestCase):
    @settings(max_examples=15, deadline=None)
    @given(seed=seeds, m=inputs, n=states)
    def test_matches_pointwise_gamma(self, seed, m, n):
        nf = to_nfunction(generators.random_selfadjoint_system(generators.rng(seed), m, n))
        realized = transforms.gamma_realize(nf)
        for xi in grids.xi_grid():
            assert_allclose(realized.value(xi), gamma_transform(nf, xi), atol=1e-8)
