import cmath
import math
from dataclasses import replace

import numpy as np
from django.test import SimpleTestCase

from .analytic_series import (
    SeriesParams,
    dde_residual,
    dominant_term_single_mode,
    double_series_two_mode,
    evaluate_series,
    partial_delay_two_mode,
    phase_irrelevance_margin,
    series_value,
    single_mode_series,
    zero_delay_single_mode,
    zero_delay_two_mode,
)
from .dde_engine import DelayProblem, DelayTerm, SolverOptions, evaluate_history, solve_dde
from .exceptions import SeriesDomainError, SeriesUnavailableError
from .scenarios import figure_preset, resolve_scenario


def preset_modes(name):
    config = next(config for config in figure_preset(name) if config.name.endswith("two-mode"))
    return resolve_scenario(config)


class SeriesParamsTests(SimpleTestCase):
    def test_three_modes_unavailable(self):
        """Test more than two modes has no closed form"""
        with self.assertRaisesMessage(SeriesUnavailableError, "series oracle undefined"):
            SeriesParams(C0=1, gamma_total=1.0, alphas=(0.3, 0.3, 0.4), taus=(1.0, 2.0, 3.0))

    def test_mismatched_lengths_rejected(self):
        """Test alphas and taus must pair up"""
        with self.assertRaises(ValueError):
            SeriesParams(C0=1, gamma_total=1.0, alphas=(0.5, 0.5), taus=(1.0,))

    def test_wrong_regime_rejected(self):
        """Test closed forms refuse parameters outside their regime"""
        params = SeriesParams(C0=1, gamma_total=1.0, alphas=(1.0,), taus=(0.0,))
        with self.assertRaises(SeriesDomainError):
            single_mode_series(params, 1.0)
        with self.assertRaises(SeriesDomainError):
            zero_delay_two_mode(params, 1.0)


class SingleModeSeriesTests(SimpleTestCase):
    def test_zero_before_start(self):
        """Test the amplitude vanishes for negative times"""
        params = SeriesParams(C0=1, gamma_total=1.0, alphas=(1.0,), taus=(1.0,))
        value = single_mode_series(params, -0.1)
        self.assertEqual(value.value, 0j)
        self.assertEqual(value.terms_used, 0)

    def test_pure_decay_before_delay(self):
        """Test only the leading term contributes before tau"""
        params = SeriesParams(C0=0.5j, gamma_total=0.7, alphas=(0.7,), taus=(2.0,))
        value = single_mode_series(params, 1.5)
        self.assertEqual(value.terms_used, 1)
        self.assertAlmostEqual(value.value, 0.5j * math.exp(-0.7 * 1.5), places=15)

    def test_second_interval(self):
        """Test the first delayed term inside (tau, 2 tau)"""
        gamma, tau, t = 0.4, 1.0, 1.6
        params = SeriesParams(C0=1, gamma_total=gamma, alphas=(gamma * cmath.exp(0.3j),), taus=(tau,))
        expected = math.exp(-gamma * t) - gamma * cmath.exp(0.3j) * (t - tau) * math.exp(-gamma * (t - tau))
        self.assertAlmostEqual(single_mode_series(params, t).value, expected, places=14)

    def test_many_terms_stay_bounded(self):
        """Test a long alternating series sums stably and drops its negligible tail"""
        params = SeriesParams(C0=1, gamma_total=2.0, alphas=(2.0,), taus=(0.01,))
        value = single_mode_series(params, 5.0)
        self.assertGreater(value.terms_used, 20)
        self.assertLess(value.terms_used, 100)
        self.assertLess(abs(value.value), 1.0)
        self.assertTrue(cmath.isfinite(value.value))

    def test_tiny_delay_tail_truncated(self):
        """Test a delay far below 1/gamma still needs only a few dozen terms"""
        gamma = 1.0
        folded = SeriesParams(C0=1, gamma_total=gamma, alphas=(gamma,), taus=(0.0,))
        for tau in (1e-6, 1e-9):
            params = SeriesParams(C0=1, gamma_total=gamma, alphas=(gamma,), taus=(tau,))
            value = single_mode_series(params, 1.0)
            self.assertLess(value.terms_used, 100)
            self.assertAlmostEqual(value.value, zero_delay_single_mode(folded, 1.0), delta=1e-5)

    def test_zero_delay_closed_form(self):
        """Test the folded single-mode solution exp((-gamma + sign alpha) t)"""
        gamma, phi = 0.3, math.pi / 2
        params = SeriesParams(C0=1, gamma_total=gamma, alphas=(gamma * cmath.exp(1j * phi),), taus=(0.0,))
        value = zero_delay_single_mode(params, 2.0)
        self.assertAlmostEqual(abs(value), math.exp(-gamma * 2.0), places=14)

    def test_dominant_term_improves_with_retardation(self):
        """Test the single-term approximation tightens as gamma*tau grows"""
        deviations = []
        for gamma in (5.0, 20.0, 80.0):
            params = SeriesParams(C0=1, gamma_total=gamma, alphas=(gamma,), taus=(1.0,))
            t = 2.0 + 2.0 / gamma
            full = single_mode_series(params, t).value
            deviations.append(abs(dominant_term_single_mode(params, t) - full) / abs(full))
        self.assertTrue(deviations[0] > deviations[1] > deviations[2], deviations)
        self.assertLess(deviations[-1], 1e-10)


class TwoModeSeriesTests(SimpleTestCase):
    def test_zero_delay_two_mode(self):
        """Test the folded two-mode solution"""
        params = SeriesParams(C0=1, gamma_total=1.0, alphas=(0.25, 0.75), taus=(0.0, 0.0), sign=1)
        self.assertAlmostEqual(zero_delay_two_mode(params, 10.0), 1.0, places=14)

    def test_tiny_delays_tail_truncated(self):
        """Test nanosecond-scale delays stop after a few shells instead of sweeping the lattice"""
        folded = SeriesParams(C0=1, gamma_total=1.0, alphas=(0.25, 0.75), taus=(0.0, 0.0))
        params = SeriesParams(C0=1, gamma_total=1.0, alphas=(0.25, 0.75), taus=(1e-9, 1.7e-9))
        value = double_series_two_mode(params, 1.0)
        self.assertLess(value.terms_used, 1000)
        self.assertAlmostEqual(value.value, zero_delay_two_mode(folded, 1.0), delta=1e-5)

    def test_double_series_matches_integrator(self):
        """Test the two-mode series against the integrator on the n=10 and n=30 two-mode panels"""
        for preset in ("fig4b", "fig4c"):
            resolved = preset_modes(preset)
            problem = DelayProblem.from_modes(resolved.modes, 1, 1.0)
            params = SeriesParams.from_modes(resolved.modes, 1, 1.0)
            trajectory = solve_dde(problem, SolverOptions(t_max=resolved.t_max))

            checkpoints = resolved.times[::10]
            series = np.array([double_series_two_mode(params, t).value for t in checkpoints])
            deviation = np.max(np.abs(evaluate_history(trajectory, checkpoints) - series))
            self.assertLessEqual(deviation, 1e-6, preset)

    def test_partial_delay_matches_integrator(self):
        """Test the one-folded-delay form against the integrator"""
        resolved = preset_modes("fig4b")
        first, second = resolved.modes
        problem = DelayProblem(
            gamma=first.gamma + second.gamma,
            terms=(DelayTerm(first.alpha, 1e-13), DelayTerm(second.alpha, second.tau)),
            sign=1,
        )
        params = SeriesParams(
            C0=1,
            gamma_total=first.gamma + second.gamma,
            alphas=(first.alpha, second.alpha),
            taus=(1e-13, second.tau),
            sign=1,
        )
        trajectory = solve_dde(problem, SolverOptions(t_max=resolved.t_max))

        checkpoints = resolved.times[::10]
        series = np.array([partial_delay_two_mode(params, t).value for t in checkpoints])
        self.assertLessEqual(np.max(np.abs(evaluate_history(trajectory, checkpoints) - series)), 1e-5)
        np.testing.assert_allclose(evaluate_series(params, checkpoints), series, rtol=0, atol=1e-15)

    def test_series_value_dispatch(self):
        """Test dispatch picks the closed form for the folded pattern"""
        params = SeriesParams(C0=1, gamma_total=1.0, alphas=(0.25, 0.75), taus=(4.0, 0.0))
        swapped = SeriesParams(C0=1, gamma_total=1.0, alphas=(0.75, 0.25), taus=(0.0, 4.0))
        self.assertAlmostEqual(series_value(params, 6.0), partial_delay_two_mode(swapped, 6.0).value, places=15)


class ResidualTests(SimpleTestCase):
    def setUp(self):
        self.params = SeriesParams(C0=1, gamma_total=1.0, alphas=(0.25, 0.75), taus=(3.0, 5.0))
        self.times = np.linspace(10.4, 10.8, 5)

    def test_binomial_weight_satisfies_equation(self):
        """Test the binomial double series solves the two-delay equation"""
        residual = dde_residual(lambda t: double_series_two_mode(self.params, t), self.params, self.times)
        self.assertLessEqual(residual.max(), 1e-5 * self.params.gamma_total)

    def test_printed_weight_violates_equation(self):
        """Test the non-binomial weight k!/(n!(n-k)!) leaves a large residual"""
        residual = dde_residual(
            lambda t: double_series_two_mode(self.params, t, printed_coefficient=True),
            self.params,
            self.times,
        )
        self.assertGreater(residual.min(), 1e-1 * self.params.gamma_total)


class PhaseMarginTests(SimpleTestCase):
    def test_margin_for_irrational_ratio(self):
        """Test the closest approach of delayed arrivals"""
        margin = phase_irrelevance_margin(1.0, 1.0, math.sqrt(2), 10.0)
        self.assertAlmostEqual(margin, 5 * math.sqrt(2) - 7, places=12)

    def test_margin_zero_for_commensurate_delays(self):
        """Test commensurate delays overlap"""
        self.assertEqual(phase_irrelevance_margin(1.0, 1.0, 1.5, 10.0), 0.0)

    def test_margin_scales_with_gamma(self):
        """Test the margin is measured in units of 1/gamma"""
        self.assertAlmostEqual(
            phase_irrelevance_margin(100.0, 1.0, math.sqrt(2), 10.0),
            100 * phase_irrelevance_margin(1.0, 1.0, math.sqrt(2), 10.0),
            places=9,
        )


class SeriesStructureTests(SimpleTestCase):
    def setUp(self):
        self.params = SeriesParams(
            C0=1, gamma_total=1.0, alphas=(0.25 * cmath.exp(0.4j), 0.75 * cmath.exp(2.2j)), taus=(1.0, math.sqrt(2))
        )

    def test_continuous_across_lattice_points(self):
        """Test the value has no jump where a delayed contribution switches on"""
        tau1, tau2 = self.params.taus
        onsets = [k * tau1 + (n - k) * tau2 for n in range(1, 5) for k in range(n + 1)]
        for onset in onsets:
            before = double_series_two_mode(self.params, onset - 1e-9).value
            after = double_series_two_mode(self.params, onset + 1e-9).value
            self.assertLess(abs(after - before), 1e-8, onset)

    def test_terms_bounded_by_lattice(self):
        """Test the double series never uses more terms than the delay lattice holds"""
        for t in (0.5, 1.0, 3.3, 7.9, 12.0):
            shells = math.floor(t / min(self.params.taus))
            value = double_series_two_mode(self.params, t)
            self.assertGreaterEqual(value.terms_used, 1)
            self.assertLessEqual(value.terms_used, (shells + 1) * (shells + 2) // 2)

    def test_pi_shift_maps_symmetric_onto_antisymmetric(self):
        """Test phi_j -> phi_j + pi turns the symmetric series into the antisymmetric one"""
        shifted = replace(self.params, alphas=tuple(-alpha for alpha in self.params.alphas), sign=1)
        for t in (0.5, 2.5, 6.0):
            self.assertEqual(series_value(self.params, t), series_value(shifted, t))


class RandomizedOracleTests(SimpleTestCase):
    def test_two_mode_sweep(self):
        """Test the two-mode series against the integrator on random delays and phases up to t = 10/gamma"""
        rng = np.random.default_rng(20240611)
        for _ in range(4):
            gamma1 = rng.uniform(0.2, 0.5)
            gamma2 = gamma1 * rng.uniform(0.5, 2.0)
            gamma = gamma1 + gamma2
            taus = tuple(10 ** rng.uniform(-2, 1) / gamma for _ in range(2))
            alphas = tuple(g * cmath.exp(1j * rng.uniform(0, 4 * math.pi)) for g in (gamma1, gamma2))
            sign = int(rng.choice((-1, 1)))

            problem = DelayProblem(
                gamma=gamma, terms=tuple(DelayTerm(a, tau) for a, tau in zip(alphas, taus)), sign=sign
            )
            params = SeriesParams(C0=1, gamma_total=gamma, alphas=alphas, taus=taus, sign=sign)
            t_max = 10 / gamma
            trajectory = solve_dde(problem, SolverOptions(t_max=t_max))

            checkpoints = np.linspace(0.0, t_max, 41)
            series = evaluate_series(params, checkpoints)
            deviation = np.max(np.abs(evaluate_history(trajectory, checkpoints) - series))
            self.assertLessEqual(deviation, 1e-6, f"gamma*tau={[gamma * tau for tau in taus]}, sign={sign}")
