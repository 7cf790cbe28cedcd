import math

from django.core.exceptions import ValidationError
from django.test import SimpleTestCase

from .mode_physics import ModeIndex
from .scenarios import build_config


def scenario(**sections):
    raw = {
        "name": "check",
        "atoms": {"omega_a": "mid(11,31)", "coupling_d": 0.05},
        "distance": {"lambda1": 10.0},
        "initial": {"state": "symmetric"},
        "time": {"t_max": 12.0},
    }
    raw.update(sections)
    return raw


class ScenarioSerializerTests(SimpleTestCase):
    def assertInvalid(self, raw, *keys):
        with self.assertRaises(ValidationError) as caught:
            build_config(raw)
        for key in keys:
            self.assertIn(key, caught.exception.message_dict)
        return caught.exception.message_dict

    def test_minimal_scenario_gets_defaults(self):
        """Test omitted keys fall back to the documented defaults"""
        config = build_config(scenario())

        self.assertEqual(config.geometry.a, 1.0)
        self.assertEqual(config.geometry.b, 0.5)
        self.assertEqual(config.methods, "both")
        self.assertIsNone(config.modes)
        self.assertEqual(config.time.unit, "tau1")
        self.assertEqual(config.time.samples, 2000)
        self.assertEqual(config.solver.step_fraction_tau, 64)
        self.assertEqual(config.solver.step_fraction_gamma, 200)
        self.assertFalse(config.solver.richardson_check)
        self.assertEqual(config.evanescent_margin, 0.05)
        self.assertEqual(config.source["distance"], {"lambda1": 10.0})

    def test_midpoint_tag(self):
        """Test omega_A given as a midpoint of two cutoffs"""
        config = build_config(scenario())
        self.assertEqual(config.omega.midpoint, (ModeIndex(1, 1), ModeIndex(3, 1)))
        self.assertAlmostEqual(config.omega.resolve(config.geometry), 9.17599, places=5)
        self.assertEqual(str(config.omega), "mid(11,31)")

    def test_numeric_frequency(self):
        """Test omega_A given as a number"""
        config = build_config(scenario(atoms={"omega_a": 9.5, "coupling_d": 0.05}))
        self.assertEqual(config.omega.resolve(config.geometry), 9.5)

    def test_bad_frequency(self):
        """Test malformed or non-positive frequencies are rejected"""
        self.assertInvalid(scenario(atoms={"omega_a": "mid(1,3)", "coupling_d": 0.05}), "atoms.omega_a")
        self.assertInvalid(scenario(atoms={"omega_a": -2.0, "coupling_d": 0.05}), "atoms.omega_a")

    def test_empty_file_lists_required_keys(self):
        """Test an empty scenario names every required section"""
        self.assertInvalid({}, "atoms", "distance", "initial", "time")

    def test_conflicting_distance(self):
        """Test two distance forms at once are rejected"""
        errors = self.assertInvalid(scenario(distance={"lambda1": 10.0, "phase_n": 2}), "distance")
        self.assertIn("lambda1", errors["distance"][0])

    def test_missing_distance_form(self):
        """Test a phase offset alone is not a distance"""
        self.assertInvalid(scenario(distance={"phase_offset": math.pi}), "distance")

    def test_unnormalized_bare_state(self):
        """Test bare amplitudes must be normalized"""
        self.assertInvalid(scenario(initial={"state": "bare", "b1_re": 0.9}), "initial")

    def test_normalized_bare_state(self):
        """Test a normalized bare state is accepted"""
        config = build_config(
            scenario(initial={"state": "bare", "b1_re": math.sqrt(0.5), "b2_im": math.sqrt(0.5)})
        )
        dicke = config.initial.dicke()
        self.assertAlmostEqual(abs(dicke.Cs) ** 2 + abs(dicke.Ca) ** 2, 1.0, places=15)

    def test_unknown_keys_rejected(self):
        """Test misspelled keys are reported by their dotted name"""
        self.assertInvalid(scenario(atoms={"omega": 9.0, "omega_a": 9.0, "coupling_d": 0.05}), "atoms.omega")
        self.assertInvalid(scenario(colour="blue"), "colour")

    def test_out_of_range_values(self):
        """Test range checks on numeric keys"""
        self.assertInvalid(scenario(time={"t_max": 0.0}), "time.t_max")
        self.assertInvalid(scenario(time={"t_max": 1.0, "samples": 1}), "time.samples")
        self.assertInvalid(scenario(solver={"step_fraction_tau": 4}), "solver.step_fraction_tau")
        self.assertInvalid(scenario(atoms={"omega_a": 9.0, "coupling_d": 0.0}), "atoms.coupling_d")
        self.assertInvalid(scenario(geometry={"a": -1.0}), "geometry.a")
        self.assertInvalid(scenario(methods="fast"), "methods")

    def test_explicit_modes(self):
        """Test an explicit mode list"""
        config = build_config(scenario(modes=[[1, 1], [3, 1]]))
        self.assertEqual(config.modes, (ModeIndex(1, 1), ModeIndex(3, 1)))
        self.assertInvalid(scenario(modes=[[1]]), "modes")
        self.assertInvalid(scenario(modes="all"), "modes")

    def test_duplicate_modes_rejected(self):
        """Test a mode listed twice is rejected instead of doubling its coupling"""
        errors = self.assertInvalid(scenario(modes=[[1, 1], [3, 1], [1, 1]]), "modes")
        self.assertIn("Duplicate mode.", errors["modes"])

    def test_sweep_section(self):
        """Test a sweep over a known parameter"""
        config = build_config(scenario(sweep={"parameter": "distance.lambda1", "values": [1, 2, 3]}))
        self.assertEqual(config.sweep.values, (1.0, 2.0, 3.0))
        self.assertInvalid(scenario(sweep={"parameter": "geometry.c", "values": [1]}), "sweep.parameter")
        self.assertInvalid(scenario(sweep={"parameter": "distance.lambda1", "values": []}), "sweep.values")
