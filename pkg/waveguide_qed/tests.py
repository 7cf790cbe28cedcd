import math
import shutil
import tempfile
from io import StringIO
from pathlib import Path

import numpy as np
from django.conf import settings
from django.core.exceptions import ValidationError
from django.core.management import call_command
from django.core.management.base import CommandError
from django.test import SimpleTestCase

from .analytic_series import SeriesParams, evaluate_series
from .entanglement import AmplitudePair, DickePair, bare_from_dicke, concurrence, dicke_from_bare
from .exceptions import SeriesUnavailableError
from .mode_physics import ModeIndex, WaveguideGeometry, cutoff_frequency, group_velocity
from .scenarios import (
    CSV_HEADER,
    build_config,
    classify_regime,
    compare_methods,
    expand_sweep,
    figure_preset,
    load_config,
    resolve_scenario,
    run_scenario,
)

SCENARIO_DIR = Path(settings.BASE_DIR) / "scenarios"


def preset(name, suffix):
    return next(config for config in figure_preset(name) if config.name.endswith(suffix))


class TemporaryOutputMixin:
    def setUp(self):
        self.out = Path(tempfile.mkdtemp())
        self.addCleanup(shutil.rmtree, self.out, ignore_errors=True)


class LoadConfigTests(TemporaryOutputMixin, SimpleTestCase):
    def test_load_shipped_scenario(self):
        """Test the shipped odd-phase scenario loads with its caption values"""
        config = load_config(SCENARIO_DIR / "fig2a_phi_odd.toml")
        self.assertEqual(config.name, "fig2a_phi_odd")
        self.assertEqual(config.coupling_d, 0.05)
        self.assertEqual(config.distance.phase_n, 2)
        self.assertAlmostEqual(config.distance.phase_offset, math.pi, places=15)
        self.assertEqual(str(config.omega), "mid(11,31)")

    def test_name_defaults_to_file_stem(self):
        """Test a scenario without a name takes the file name"""
        path = self.out / "unnamed.toml"
        path.write_text(
            '[atoms]\nomega_a = 9.5\ncoupling_d = 0.05\n[distance]\nlambda1 = 1.0\n'
            '[initial]\nstate = "symmetric"\n[time]\nt_max = 2.0\n'
        )
        self.assertEqual(load_config(path).name, "unnamed")

    def test_missing_file(self):
        """Test a missing scenario file is a validation error"""
        with self.assertRaises(ValidationError) as caught:
            load_config(self.out / "absent.toml")
        self.assertIn("path", caught.exception.message_dict)

    def test_malformed_file(self):
        """Test a file that is not TOML is a validation error"""
        path = self.out / "broken.toml"
        path.write_text("[atoms\nomega_a = = 3\n")
        with self.assertRaises(ValidationError) as caught:
            load_config(path)
        self.assertIn("path", caught.exception.message_dict)

    def test_empty_file(self):
        """Test an empty file reports the required sections"""
        path = self.out / "empty.toml"
        path.write_text("")
        with self.assertRaises(ValidationError) as caught:
            load_config(path)
        for key in ("atoms", "distance", "initial", "time"):
            self.assertIn(key, caught.exception.message_dict)


class FigurePresetTests(SimpleTestCase):
    def test_fig2a(self):
        """Test the n=2 panel has four phase offsets"""
        configs = figure_preset("fig2a")
        self.assertEqual(len(configs), 4)
        offsets = sorted(config.distance.phase_offset for config in configs)
        self.assertEqual(offsets, [0.0, math.pi / 4, math.pi / 2, math.pi])
        for config in configs:
            self.assertEqual(config.distance.phase_n, 2)
            self.assertEqual(config.coupling_d, 0.05)
            self.assertEqual(str(config.omega), "mid(11,31)")
            self.assertEqual(config.initial.state, "symmetric")
            self.assertEqual((config.geometry.a, config.geometry.b), (1.0, 0.5))
            self.assertEqual((config.time.t_max, config.time.samples), (12.0, 2000))

    def test_fig2_panels_differ_in_phase_index(self):
        """Test the fig2 panels use n = 2, 20 and 150"""
        for name, n in (("fig2a", 2), ("fig2b", 20), ("fig2c", 150)):
            self.assertEqual({config.distance.phase_n for config in figure_preset(name)}, {n})

    def test_fig3(self):
        """Test the dark-state panel separations"""
        configs = figure_preset("fig3")
        self.assertEqual(len(configs), 3)
        self.assertTrue(all(config.initial.state == "antisymmetric" for config in configs))
        self.assertEqual(configs[0].distance.length, 0.0)
        self.assertEqual([config.distance.lambda1 for config in configs[1:]], [10.0, 200.0])

    def test_fig4d(self):
        """Test the n=3000 panel includes one- and two-mode configs"""
        configs = figure_preset("fig4d")
        self.assertEqual(len(configs), 3)
        self.assertTrue(all(config.coupling_d == 0.0086 for config in configs))
        self.assertTrue(all(config.methods == "both" for config in configs))
        self.assertTrue(all(str(config.omega) == "mid(31,51)" for config in configs))

        single = preset("fig4d", "single-mode")
        self.assertEqual(single.modes, (ModeIndex(1, 1),))

        resolved = resolve_scenario(preset("fig4d", "two-mode"))
        self.assertEqual([params.mode for params in resolved.modes], [ModeIndex(1, 1), ModeIndex(3, 1)])
        self.assertAlmostEqual(resolved.modes[0].phi / (6000 * math.pi), 1.0, places=12)

    def test_gamma1_tau1_follows_phase_index(self):
        """Test gamma1*tau1 = n D when phi1 = 2 n pi"""
        for name, n, D in (("fig4b", 10, 0.0086), ("fig2c", 150, 0.05)):
            config = figure_preset(name)[0 if name == "fig2c" else 1]
            first = resolve_scenario(config).modes[0]
            self.assertAlmostEqual(first.gamma * first.tau, n * D, places=10)

    def test_unknown_preset(self):
        """Test an unknown preset name is rejected"""
        with self.assertRaises(ValidationError):
            figure_preset("fig9")


class RunScenarioTests(TemporaryOutputMixin, SimpleTestCase):
    def test_dark_state_one_and_two_modes(self):
        """Test the antisymmetric state stays maximally entangled at d=0"""
        for config in (preset("fig3", "d0"), preset("fig4b", "d0")):
            report = run_scenario(config.with_overrides(samples=200), out_dir=self.out)
            for trajectory in report.trajectories.values():
                np.testing.assert_allclose(trajectory.concurrence, 1.0, rtol=0, atol=1e-10)
        self.assertEqual(len(report.modes), 2)

    def test_csv_output(self):
        """Test the CSV header, shape, finiteness and units"""
        config = preset("fig2a", "2npi-plus-pi2").with_overrides(samples=300)
        report = run_scenario(config, out_dir=self.out)

        self.assertEqual(len(report.outputs), 2)
        path = report.output("_dde.csv")
        lines = Path(path).read_text().splitlines()
        self.assertEqual(lines[0], CSV_HEADER)
        self.assertEqual(len(lines), 301)
        self.assertTrue(Path(path).read_text().endswith("\n"))

        data = np.loadtxt(path, delimiter=",", skiprows=1)
        self.assertEqual(data.shape, (300, 7))
        self.assertTrue(np.all(np.isfinite(data)))
        self.assertTrue(np.all((data[:, 6] >= 0) & (data[:, 6] <= 1 + 1e-12)))
        self.assertTrue(np.all(data[:, 5] <= 1 + 1e-9))

        trajectory = report.trajectories["dde"]
        np.testing.assert_allclose(data[:, 0] * trajectory.tau1, trajectory.times, rtol=0, atol=1e-12 * trajectory.times[-1])

    def test_deterministic_output(self):
        """Test the same scenario writes byte-identical files"""
        config = preset("fig2a", "2npi").with_overrides(samples=200)
        first = run_scenario(config, out_dir=self.out / "first")
        second = run_scenario(config, out_dir=self.out / "second")
        for a, b in zip(first.outputs, second.outputs):
            self.assertEqual(Path(a).read_bytes(), Path(b).read_bytes())

    def test_deviation_only_with_both_methods(self):
        """Test the cross-method deviation is reported only for methods=both"""
        config = preset("fig2a", "2npi").with_overrides(samples=200)
        self.assertLessEqual(run_scenario(config, out_dir=self.out).deviation, 1e-6)
        self.assertIsNone(run_scenario(config.with_overrides(methods="series"), out_dir=self.out).deviation)

    def test_pure_decay_before_first_delay(self):
        """Test both methods give Ca = exp(-gamma t) before the shortest two-mode delay"""
        config = preset("fig4b", "two-mode").with_overrides(samples=500)
        resolved = resolve_scenario(config)
        first_delay = min(mode.tau for mode in resolved.modes)
        report = run_scenario(config, write=False)

        for method in ("dde", "series"):
            trajectory = report.trajectories[method]
            early = trajectory.times < first_delay
            self.assertGreater(np.count_nonzero(early), 10)
            Ca = dicke_from_bare(AmplitudePair(B1=trajectory.B1[early], B2=trajectory.B2[early])).Ca
            expected = np.exp(-resolved.gamma_total * trajectory.times[early])
            self.assertLessEqual(np.max(np.abs(Ca - expected) / expected), 1e-10, method)

    def test_fig2a_plateau(self):
        """Test the odd-phase curve settles at a high stationary concurrence"""
        odd = run_scenario(preset("fig2a", "2npi-plus-pi"), out_dir=self.out)
        even = run_scenario(preset("fig2a", "2npi"), out_dir=self.out)
        self.assertEqual(odd.regime, "collective")

        for report in (odd, even):
            self.assertLessEqual(report.deviation, 1e-6)
            for trajectory in report.trajectories.values():
                self.assertTrue(np.all(trajectory.population <= 1 + 1e-9))

        curve = odd.trajectories["dde"]
        half = np.argmin(np.abs(curve.times - curve.times[-1] / 2))
        self.assertLess(abs(curve.concurrence[-1] - curve.concurrence[half]), 1e-3)
        self.assertGreaterEqual(curve.concurrence[-1] - even.trajectories["dde"].concurrence[-1], 0.5)

    def test_fig2c_periodic_maxima(self):
        """Test the retarded curve revives once per delay with shrinking maxima"""
        report = run_scenario(preset("fig2c", "2npi").with_overrides(methods="series"), out_dir=self.out)
        self.assertEqual(report.regime, "retarded")
        trajectory = report.trajectories["series"]
        x, C = trajectory.t_over_tau1, trajectory.concurrence

        self.assertLess(C[x < 1][-1], 0.05)

        second = (x > 1) & (x < 2)
        peak = np.argmax(np.where(second, C, -1.0))
        self.assertTrue(C[peak] > C[peak - 1] and C[peak] > C[peak + 1])

        # while the k-th return still peaks inside its own interval (k < gamma1*tau1)
        maxima = [C[(x > k) & (x <= k + 1)].max() for k in range(1, 7)]
        self.assertTrue(all(a > b for a, b in zip(maxima, maxima[1:])), maxima)

    def test_fig4d_collapse_and_revival(self):
        """Test two-mode revivals at multiples of the second delay decrease"""
        resolved = resolve_scenario(preset("fig4d", "two-mode"))
        params = SeriesParams.from_modes(resolved.modes, 1, 1.0)
        gamma = params.gamma_total
        tau2 = resolved.modes[1].tau

        def concurrence_at(times):
            Ca = evaluate_series(params, times)
            return concurrence(bare_from_dicke(DickePair(Cs=np.zeros_like(Ca), Ca=Ca)))

        peaks = []
        for revival in (1, 2, 3):
            window = np.linspace(revival * tau2, revival * tau2 + 8 / gamma, 400)
            peaks.append(concurrence_at(window).max())
        self.assertTrue(peaks[0] > peaks[1] > peaks[2] > 1e-3, peaks)

        gaps = concurrence_at(np.array([1.5 * tau2 + 0.05 * tau2, 2.5 * tau2 - 0.2 * tau2]))
        self.assertTrue(np.all(gaps < 0.1 * peaks[2]), gaps)

    def test_trapping(self):
        """Test a single excited TLS at d=0 traps half its excitation in the dark state"""
        report = run_scenario(figure_preset("trapping")[0].with_overrides(samples=400), out_dir=self.out)
        for trajectory in report.trajectories.values():
            self.assertEqual(trajectory.concurrence[0], 0.0)
            self.assertAlmostEqual(trajectory.concurrence[-1], 0.5, delta=1e-6)
            self.assertAlmostEqual(trajectory.population[-1], 0.5, delta=1e-6)

    def test_zero_separation_needs_reference(self):
        """Test d=0 without a reference separation cannot express t in tau1"""
        config = build_config(
            {
                "atoms": {"omega_a": "mid(11,31)", "coupling_d": 0.05},
                "distance": {"length": 0.0},
                "initial": {"state": "antisymmetric"},
                "time": {"t_max": 5.0},
            }
        )
        with self.assertRaises(ValidationError) as caught:
            run_scenario(config, out_dir=self.out)
        self.assertIn("time.reference_lambda1", caught.exception.message_dict)

    def test_richardson_check(self):
        """Test the self-convergence estimate is attached on request"""
        raw = {
            "atoms": {"omega_a": "mid(11,31)", "coupling_d": 0.05},
            "distance": {"lambda1": 20.0},
            "initial": {"state": "symmetric"},
            "time": {"t_max": 5.0, "samples": 100},
            "solver": {"richardson_check": True},
            "methods": "dde",
        }
        report = run_scenario(build_config(raw), out_dir=self.out)
        self.assertEqual(set(report.convergence), {"Cs"})
        self.assertLess(report.convergence["Cs"].error_estimate, 1e-8)

    def test_regime_classification(self):
        """Test the gamma1*tau1 regime labels"""
        self.assertEqual(classify_regime(0.1), "collective")
        self.assertEqual(classify_regime(1.0), "intermediate")
        self.assertEqual(classify_regime(7.5), "retarded")


class CompareMethodsTests(SimpleTestCase):
    def single_mode_config(self):
        return build_config(
            {
                "name": "unit-delay",
                "atoms": {"omega_a": "mid(11,31)", "coupling_d": 0.05},
                "distance": {"lambda1": 20.0},
                "initial": {"state": "symmetric"},
                "time": {"t_max": 10.0, "samples": 500},
            }
        )

    def test_single_mode_agreement(self):
        """Test both methods agree at gamma1*tau1 = 1"""
        comparison = compare_methods(self.single_mode_config(), tolerance=1e-6)
        self.assertAlmostEqual(comparison.report.gamma1_tau1, 1.0, places=10)
        self.assertTrue(comparison.passed, str(comparison))

    def test_two_mode_agreement(self):
        """Test both methods agree on the n=10 two-mode panel"""
        config = preset("fig4b", "two-mode").with_overrides(samples=500)
        comparison = compare_methods(config, tolerance=1e-6)
        self.assertTrue(comparison.passed, str(comparison))
        self.assertIsNotNone(comparison.report.phase_margin)

    def test_tolerance_exceeded(self):
        """Test an impossible tolerance fails the comparison"""
        comparison = compare_methods(self.single_mode_config(), tolerance=0.0)
        self.assertFalse(comparison.passed)

    def test_three_modes_unavailable(self):
        """Test no closed form exists beyond two modes"""
        config = build_config(
            {
                "atoms": {"omega_a": 18.0, "coupling_d": 0.05},
                "distance": {"lambda1": 5.0},
                "initial": {"state": "symmetric"},
                "time": {"t_max": 2.0, "samples": 50},
            }
        )
        with self.assertRaisesMessage(SeriesUnavailableError, "series oracle undefined"):
            compare_methods(config)


class SweepTests(SimpleTestCase):
    def test_expand_phase_sweep(self):
        """Test one scenario per phase offset, keeping the phase index"""
        base = load_config(SCENARIO_DIR / "sweep_phase.toml")
        configs = expand_sweep(base)
        self.assertEqual(len(configs), 5)
        self.assertEqual([config.distance.phase_offset for config in configs], list(base.sweep.values))
        self.assertTrue(all(config.distance.phase_n == 2 for config in configs))
        self.assertEqual(configs[0].name, "sweep_phase-000")
        self.assertIsNone(configs[0].sweep)

    def test_distance_form_replaced(self):
        """Test sweeping one distance form drops the configured one"""
        base = build_config(
            {
                "name": "lengths",
                "atoms": {"omega_a": "mid(11,31)", "coupling_d": 0.05},
                "distance": {"phase_n": 2},
                "initial": {"state": "symmetric"},
                "time": {"t_max": 5.0},
                "sweep": {"parameter": "distance.lambda1", "values": [1.0, 5.0]},
            }
        )
        configs = expand_sweep(base)
        self.assertEqual([config.distance.lambda1 for config in configs], [1.0, 5.0])
        self.assertTrue(all(config.distance.phase_n is None for config in configs))

    def test_no_sweep_section(self):
        """Test expanding a scenario without a sweep fails"""
        with self.assertRaises(ValidationError):
            expand_sweep(load_config(SCENARIO_DIR / "fig2a_phi_odd.toml"))


class CommandTests(TemporaryOutputMixin, SimpleTestCase):
    def call(self, *args):
        out = StringIO()
        call_command(*args, stdout=out, stderr=StringIO())
        return out.getvalue()

    def test_modes_single(self):
        """Test one coupled mode between the TM11 and TM31 cutoffs"""
        output = self.call("modes", "--omega-a", "mid(11,31)")
        self.assertIn("1 coupled propagating mode(s)", output)
        self.assertIn("TM11", output)

    def test_modes_pair(self):
        """Test two coupled modes between the TM31 and TM51 cutoffs"""
        output = self.call("modes", "--omega-a", "mid(31,51)", "--coupling-d", "0.0086")
        self.assertIn("2 coupled propagating mode(s)", output)
        rows = {line.split()[0]: line.split() for line in output.splitlines() if line.startswith("TM")}
        self.assertEqual(float(rows["TM11"][-1]), 1.0)

        geometry = WaveguideGeometry()
        Omega1 = cutoff_frequency(geometry, ModeIndex(1, 1))
        Omega2 = cutoff_frequency(geometry, ModeIndex(3, 1))
        omega_A = (Omega2 + cutoff_frequency(geometry, ModeIndex(5, 1))) / 2
        expected = (Omega2**2 / Omega1**2) * (group_velocity(omega_A, Omega1) / group_velocity(omega_A, Omega2))
        self.assertAlmostEqual(float(rows["TM31"][-1]), expected, delta=1e-10)

    def test_modes_bad_frequency(self):
        """Test a malformed frequency exits with status 1"""
        with self.assertRaises(CommandError) as caught:
            self.call("modes", "--omega-a", "mid(1,3)")
        self.assertEqual(caught.exception.returncode, 1)

    def test_run_writes_both_methods(self):
        """Test run writes one CSV per method"""
        self.call("run", str(SCENARIO_DIR / "fig2a_phi_odd.toml"), "--out", str(self.out), "--samples", "200")
        self.assertTrue((self.out / "fig2a_phi_odd_dde.csv").exists())
        self.assertTrue((self.out / "fig2a_phi_odd_series.csv").exists())

    def test_run_quiet(self):
        """Test --quiet suppresses the report"""
        output = self.call(
            "run", str(SCENARIO_DIR / "fig2a_phi_odd.toml"), "--out", str(self.out),
            "--samples", "50", "--methods", "series", "--quiet",
        )
        self.assertEqual(output, "")

    def test_run_invalid_config(self):
        """Test a conflicting scenario exits with status 1"""
        path = self.out / "conflict.toml"
        path.write_text(
            '[atoms]\nomega_a = 9.5\ncoupling_d = 0.05\n[distance]\nlambda1 = 1.0\nphase_n = 3\n'
            '[initial]\nstate = "symmetric"\n[time]\nt_max = 2.0\n'
        )
        with self.assertRaises(CommandError) as caught:
            self.call("run", str(path), "--out", str(self.out))
        self.assertEqual(caught.exception.returncode, 1)
        self.assertIn("distance", str(caught.exception))

    def test_run_numerical_failure(self):
        """Test a horizon needing too many steps exits with status 2"""
        with self.assertRaises(CommandError) as caught:
            self.call(
                "run", str(SCENARIO_DIR / "fig2a_phi_odd.toml"), "--out", str(self.out),
                "--methods", "dde", "--t-max", "1e7", "--samples", "10",
            )
        self.assertEqual(caught.exception.returncode, 2)

    def test_compare_tolerance_exceeded(self):
        """Test compare exits with status 3 above tolerance"""
        with self.assertRaises(CommandError) as caught:
            self.call("compare", str(SCENARIO_DIR / "fig2a_phi_odd.toml"), "--samples", "100", "--tolerance", "0")
        self.assertEqual(caught.exception.returncode, 3)

    def test_compare_passes(self):
        """Test compare succeeds within the default tolerance"""
        output = self.call("compare", str(SCENARIO_DIR / "fig2a_phi_odd.toml"), "--samples", "100")
        self.assertIn("within", output)

    def test_figure(self):
        """Test figure runs every curve of a panel"""
        self.call("figure", "fig3", "--out", str(self.out), "--methods", "series", "--samples", "50")
        self.assertEqual(len(list(self.out.glob("fig3-*_series.csv"))), 3)

    def test_figure_unknown(self):
        """Test an unknown preset exits with status 1"""
        with self.assertRaises(CommandError) as caught:
            self.call("figure", "fig9", "--out", str(self.out))
        self.assertEqual(caught.exception.returncode, 1)

    def test_sweep(self):
        """Test sweep runs one scenario per value"""
        output = self.call("sweep", str(SCENARIO_DIR / "sweep_phase.toml"), "--out", str(self.out), "--samples", "50")
        self.assertEqual(len(list(self.out.glob("sweep_phase-*_dde.csv"))), 5)
        self.assertIn("distance.phase_offset", output)

    def test_plot(self):
        """Test --plot renders an image next to the CSV files"""
        self.call(
            "run", str(SCENARIO_DIR / "fig2a_phi_odd.toml"), "--out", str(self.out),
            "--samples", "50", "--methods", "series", "--plot",
        )
        self.assertTrue((self.out / "fig2a_phi_odd.png").exists())
