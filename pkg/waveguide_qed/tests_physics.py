import math

from django.test import SimpleTestCase

from .exceptions import ModeDomainError
from .mode_physics import (
    AtomPairConfig,
    ModeIndex,
    WaveguideGeometry,
    calibrate_coupling,
    cutoff_frequency,
    decay_rate,
    distance_for_phase,
    group_velocity,
    list_coupled_modes,
    mode_params,
    resolve_modes,
    resonant_wavenumber,
)

TM11 = ModeIndex(1, 1)
TM31 = ModeIndex(3, 1)
TM51 = ModeIndex(5, 1)


def midpoint(geometry, lower, upper):
    return (cutoff_frequency(geometry, lower) + cutoff_frequency(geometry, upper)) / 2


class GeometryTests(SimpleTestCase):
    def test_default_geometry_is_twice_as_wide_as_high(self):
        """Test the default cross-section has a = 2b"""
        geometry = WaveguideGeometry()
        self.assertEqual(geometry.a, 1.0)
        self.assertEqual(geometry.b, 0.5)

    def test_non_positive_sides_rejected(self):
        """Test zero or negative sides are rejected"""
        with self.assertRaises(ValueError):
            WaveguideGeometry(a=0.0)
        with self.assertRaises(ValueError):
            WaveguideGeometry(a=1.0, b=-0.5)

    def test_mode_parity(self):
        """Test only odd-odd modes couple, with alternating sign"""
        self.assertTrue(TM11.couples)
        self.assertFalse(ModeIndex(2, 1).couples)
        self.assertEqual(TM11.parity, 1)
        self.assertEqual(TM31.parity, -1)
        self.assertEqual(ModeIndex(3, 3).parity, 1)
        self.assertEqual(ModeIndex(1, 2).parity, 0)


class CutoffTests(SimpleTestCase):
    def setUp(self):
        self.geometry = WaveguideGeometry(a=1.0, b=0.5)

    def test_cutoff_frequencies(self):
        """Test cutoffs of the lowest coupled modes"""
        self.assertAlmostEqual(cutoff_frequency(self.geometry, TM11), math.pi * math.sqrt(5), places=12)
        self.assertAlmostEqual(cutoff_frequency(self.geometry, TM11), 7.02481, places=5)
        self.assertAlmostEqual(cutoff_frequency(self.geometry, TM31), 11.32717, places=5)

    def test_one_mode_between_first_two_cutoffs(self):
        """Test a single coupled mode at the TM11/TM31 midpoint"""
        omega_A = midpoint(self.geometry, TM11, TM31)
        self.assertAlmostEqual(omega_A, 9.17599, places=5)
        self.assertEqual(list_coupled_modes(self.geometry, omega_A), [TM11])

    def test_two_modes_between_second_and_third_cutoffs(self):
        """Test TM11 and TM31 couple at the TM31/TM51 midpoint"""
        omega_A = midpoint(self.geometry, TM31, TM51)
        self.assertEqual(list_coupled_modes(self.geometry, omega_A), [TM11, TM31])

    def test_no_mode_below_lowest_cutoff(self):
        """Test no coupled mode propagates below TM11"""
        self.assertEqual(list_coupled_modes(self.geometry, 5.0), [])

    def test_non_positive_frequency_rejected(self):
        """Test omega_A must be positive"""
        with self.assertRaises(ValueError):
            list_coupled_modes(self.geometry, 0.0)


class DispersionTests(SimpleTestCase):
    def setUp(self):
        self.geometry = WaveguideGeometry()
        self.omega_A = midpoint(self.geometry, TM11, TM31)
        self.Omega = cutoff_frequency(self.geometry, TM11)

    def test_group_velocity_and_wavenumber(self):
        """Test the linearized dispersion at the TM11/TM31 midpoint"""
        v = group_velocity(self.omega_A, self.Omega)
        k0 = resonant_wavenumber(self.omega_A, self.Omega)
        self.assertAlmostEqual(k0, 5.9035, places=3)
        self.assertAlmostEqual(v, 0.64337, places=4)
        self.assertAlmostEqual(v, k0 / self.omega_A, places=14)
        self.assertLess(v, 1.0)

    def test_evanescent_mode_rejected(self):
        """Test modes at or above omega_A do not propagate"""
        with self.assertRaises(ModeDomainError):
            group_velocity(self.Omega, self.Omega)
        with self.assertRaises(ModeDomainError):
            resonant_wavenumber(self.omega_A, cutoff_frequency(self.geometry, TM31))


class CouplingTests(SimpleTestCase):
    def setUp(self):
        self.geometry = WaveguideGeometry()

    def test_calibration_reproduces_target(self):
        """Test the calibrated coupling gives gamma1*lambda1/v1 = D"""
        omega_A = midpoint(self.geometry, TM11, TM31)
        scale = calibrate_coupling(0.05, self.geometry, omega_A)
        params = mode_params(self.geometry, AtomPairConfig(omega_A, 0.0, scale), TM11)

        self.assertAlmostEqual(params.gamma * params.wavelength / params.v, 0.05, places=14)
        self.assertAlmostEqual(params.gamma, 0.030225, places=5)
        self.assertAlmostEqual(params.wavelength, 1.0643, places=3)

    def test_decay_rate_ratio_of_two_modes(self):
        """Test gamma2/gamma1 = (Omega2^2/Omega1^2)(v1/v2)"""
        omega_A = midpoint(self.geometry, TM31, TM51)
        scale = calibrate_coupling(0.0086, self.geometry, omega_A)
        Omega1 = cutoff_frequency(self.geometry, TM11)
        Omega2 = cutoff_frequency(self.geometry, TM31)
        v1 = group_velocity(omega_A, Omega1)
        v2 = group_velocity(omega_A, Omega2)

        ratio = decay_rate(self.geometry, omega_A, TM31, scale) / decay_rate(
            self.geometry, omega_A, TM11, scale
        )
        self.assertAlmostEqual(ratio, (Omega2**2 / Omega1**2) * (v1 / v2), delta=1e-12)
        self.assertAlmostEqual(ratio, 3.7766, delta=1e-3)

    def test_mode_params_delay_and_phase(self):
        """Test tau = d/v and phi = k0 d"""
        omega_A = midpoint(self.geometry, TM11, TM31)
        atoms = AtomPairConfig(omega_A=omega_A, d=3.0, coupling_scale=0.001)
        params = mode_params(self.geometry, atoms, TM11)

        self.assertAlmostEqual(params.tau, 3.0 / params.v, places=12)
        self.assertAlmostEqual(params.phi, 3.0 * params.k0, places=12)
        self.assertAlmostEqual(abs(params.alpha), params.gamma, places=14)

    def test_parity_decoupled_mode_rejected(self):
        """Test modes with an even index do not couple"""
        atoms = AtomPairConfig(omega_A=20.0, d=1.0, coupling_scale=0.001)
        with self.assertRaises(ModeDomainError):
            mode_params(self.geometry, atoms, ModeIndex(2, 1))

    def test_distance_for_phase(self):
        """Test the separation that realizes phi = 2 n pi + offset"""
        k0 = 5.9
        d = distance_for_phase(k0, 150, math.pi / 4)
        self.assertAlmostEqual(k0 * d, 300 * math.pi + math.pi / 4, places=9)


class ResolveModesTests(SimpleTestCase):
    def setUp(self):
        self.geometry = WaveguideGeometry()

    def test_auto_modes_follow_frequency(self):
        """Test automatic mode selection"""
        omega_A = midpoint(self.geometry, TM31, TM51)
        atoms = AtomPairConfig(omega_A=omega_A, d=1.0, coupling_scale=0.001)
        resolved = resolve_modes(self.geometry, atoms)
        self.assertEqual([params.mode for params in resolved], [TM11, TM31])

    def test_no_propagating_mode(self):
        """Test an error when nothing propagates"""
        atoms = AtomPairConfig(omega_A=5.0, d=1.0, coupling_scale=0.001)
        with self.assertRaises(ModeDomainError):
            resolve_modes(self.geometry, atoms)

    def test_warning_close_to_cutoff(self):
        """Test a warning when omega_A sits just above a cutoff"""
        atoms = AtomPairConfig(omega_A=7.1, d=1.0, coupling_scale=0.001)
        with self.assertLogs("waveguide_qed.mode_physics", level="WARNING") as logs:
            resolve_modes(self.geometry, atoms, margin=0.05)
        self.assertIn("TM11", logs.output[0])

    def test_explicit_evanescent_mode_rejected(self):
        """Test an explicit mode above omega_A is rejected"""
        atoms = AtomPairConfig(omega_A=9.0, d=1.0, coupling_scale=0.001)
        with self.assertRaises(ModeDomainError):
            resolve_modes(self.geometry, atoms, [TM11, TM31])


class ScalingTests(SimpleTestCase):
    def test_mode_list_invariant_under_doubling(self):
        """Test doubling a and b keeps the mode list at the halved frequency"""
        small = WaveguideGeometry(a=1.0, b=0.5)
        large = WaveguideGeometry(a=2.0, b=1.0)
        for omega_A in (5.0, midpoint(small, TM11, TM31), midpoint(small, TM31, TM51), 25.0):
            self.assertEqual(list_coupled_modes(large, omega_A / 2), list_coupled_modes(small, omega_A))
            self.assertAlmostEqual(
                cutoff_frequency(large, TM31), cutoff_frequency(small, TM31) / 2, places=14
            )

    def test_separation_recovered_from_phase(self):
        """Test phi / k0 returns the separation"""
        geometry = WaveguideGeometry()
        omega_A = midpoint(geometry, TM31, TM51)
        for d in (0.3, 3.0, 150.7):
            atoms = AtomPairConfig(omega_A=omega_A, d=d, coupling_scale=0.001)
            for mode in (TM11, TM31):
                params = mode_params(geometry, atoms, mode)
                self.assertLessEqual(abs(params.phi / params.k0 - d) / d, 1e-12)

    def test_mode_params_ratio_matches_formula(self):
        """Test mode_params gives gamma2/gamma1 = (Omega2^2/Omega1^2)(v1/v2)"""
        geometry = WaveguideGeometry()
        omega_A = midpoint(geometry, TM31, TM51)
        atoms = AtomPairConfig(omega_A, 1.0, calibrate_coupling(0.0086, geometry, omega_A))
        first, second = resolve_modes(geometry, atoms)
        expected = (second.Omega**2 / first.Omega**2) * (first.v / second.v)
        self.assertAlmostEqual(second.gamma / first.gamma, expected, delta=1e-12)
