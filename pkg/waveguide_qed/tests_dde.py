import cmath
import math

import numpy as np
from django.test import SimpleTestCase

from .analytic_series import SeriesParams, single_mode_series
from .dde_engine import (
    DelayProblem,
    DelayTerm,
    SolverOptions,
    Trajectory,
    convergence_report,
    evaluate_history,
    solve_dde,
    step_size,
)
from .exceptions import SolverError


def single_mode(gamma, tau, phi, sign=-1, initial=1.0):
    alpha = gamma * cmath.exp(1j * phi)
    problem = DelayProblem(gamma=gamma, terms=(DelayTerm(alpha, tau),), sign=sign, initial=initial)
    params = SeriesParams(C0=initial, gamma_total=gamma, alphas=(alpha,), taus=(tau,), sign=sign)
    return problem, params


class DelayProblemTests(SimpleTestCase):
    def test_short_delays_are_folded(self):
        """Test delays below the fold threshold join the local coefficient"""
        problem = DelayProblem(
            gamma=1.0, terms=(DelayTerm(0.4, 1e-13), DelayTerm(0.6, 2.0)), sign=-1
        )
        local, delayed = problem.folded()
        self.assertAlmostEqual(local, -1.4 + 0j)
        self.assertEqual(delayed, (DelayTerm(0.6, 2.0),))

    def test_invalid_problems_rejected(self):
        """Test negative delays, rates and bad signs are rejected"""
        with self.assertRaises(ValueError):
            DelayTerm(1.0, -0.1)
        with self.assertRaises(ValueError):
            DelayProblem(gamma=-1.0)
        with self.assertRaises(ValueError):
            DelayProblem(gamma=1.0, sign=0)
        with self.assertRaises(ValueError):
            SolverOptions(t_max=1.0, step_fraction_tau=4)

    def test_step_size_limits(self):
        """Test the step honours the delay, rate and horizon limits"""
        problem, _ = single_mode(gamma=0.3, tau=1.0, phi=0.0)
        self.assertAlmostEqual(step_size(problem, SolverOptions(t_max=100.0)), 1 / 64)
        self.assertAlmostEqual(step_size(problem, SolverOptions(t_max=5.0)), 0.005)
        fast, _ = single_mode(gamma=10.0, tau=1.0, phi=0.0)
        self.assertAlmostEqual(step_size(fast, SolverOptions(t_max=100.0)), 1 / 2000)


class PreDelayTests(SimpleTestCase):
    def test_exponential_decay_before_first_delay(self):
        """Test C(t) = C0 exp(-gamma t) before the shortest delay"""
        gamma, tau = 0.3, 1.0
        problem, params = single_mode(gamma, tau, math.pi / 3, initial=0.6 + 0.8j)
        trajectory = solve_dde(problem, SolverOptions(t_max=10 * tau))

        early = trajectory.times[trajectory.times < tau]
        expected = (0.6 + 0.8j) * np.exp(-gamma * early)
        solved = trajectory.values[: len(early)]
        self.assertLess(np.max(np.abs(solved - expected) / np.abs(expected)), 1e-10)

        for t in early[::10]:
            value = single_mode_series(params, t).value
            self.assertLess(abs(value - (0.6 + 0.8j) * math.exp(-gamma * t)), 1e-10 * math.exp(-gamma * t))


class DarkStateTests(SimpleTestCase):
    def test_antisymmetric_state_frozen_at_zero_separation(self):
        """Test the antisymmetric amplitude stays 1 with all delays folded"""
        for gammas in ((0.03,), (0.02, 0.07)):
            problem = DelayProblem(
                gamma=sum(gammas),
                terms=tuple(DelayTerm(gamma, 0.0) for gamma in gammas),
                sign=1,
            )
            trajectory = solve_dde(problem, SolverOptions(t_max=500.0))
            self.assertLess(np.max(np.abs(np.abs(trajectory.values) ** 2 - 1)), 1e-10)


class ZeroDelayPhaseLawTests(SimpleTestCase):
    def test_decay_rate_depends_on_phase(self):
        """Test |Cs| decays at gamma (1 + cos phi) with the delay folded"""
        gamma = 0.5
        t_max = 5 / gamma
        for phi in (0.0, math.pi / 4, math.pi / 2, math.pi):
            problem, _ = single_mode(gamma, 1e-13, phi)
            trajectory = solve_dde(problem, SolverOptions(t_max=t_max))
            rate = -math.log(abs(trajectory.values[-1])) / trajectory.t_max
            expected = gamma * (1 + math.cos(phi))
            if phi == math.pi:
                self.assertLess(abs(rate), 1e-12)
            else:
                self.assertLess(abs(rate - expected) / expected, 1e-6)


class OracleEquivalenceTests(SimpleTestCase):
    def test_single_mode_grid(self):
        """Test the integrator matches the single-mode series over a grid of gamma*tau and phi"""
        tau = 1.0
        checkpoints = np.linspace(0.0, 10 * tau, 201)
        for gamma_tau in (0.05, 0.3, 1.0, 3.0, 10.0):
            for phi in (0.0, math.pi / 4, math.pi / 2, math.pi, 3 * math.pi):
                problem, params = single_mode(gamma_tau / tau, tau, phi)
                trajectory = solve_dde(problem, SolverOptions(t_max=10 * tau))
                solved = evaluate_history(trajectory, checkpoints)
                series = np.array([single_mode_series(params, t).value for t in checkpoints])
                deviation = np.max(np.abs(solved - series))
                self.assertLessEqual(deviation, 1e-6, f"gamma*tau={gamma_tau}, phi={phi}")

    def test_fourth_order_convergence(self):
        """Test halving the step cuts the error by about 16"""
        problem, params = single_mode(gamma=1.0, tau=1.0, phi=math.pi / 3)
        options = SolverOptions(t_max=10.0)
        coarse = solve_dde(problem, options, step=1 / 16)
        fine = solve_dde(problem, options, step=1 / 32)

        series = np.array([single_mode_series(params, t).value for t in coarse.times])
        coarse_error = np.max(np.abs(coarse.values - series))
        fine_error = np.max(np.abs(evaluate_history(fine, coarse.times) - series))
        self.assertTrue(12 <= coarse_error / fine_error <= 20, coarse_error / fine_error)

    def test_convergence_report(self):
        """Test the self-convergence estimate on a smooth problem"""
        problem, _ = single_mode(gamma=1.0, tau=1.0, phi=math.pi / 3)
        report = convergence_report(problem, SolverOptions(t_max=10.0))
        self.assertGreater(report.samples, 0)
        self.assertLess(report.error_estimate, 1e-8)
        self.assertAlmostEqual(report.error_estimate, report.max_deviation / 15)


class HistoryTests(SimpleTestCase):
    def setUp(self):
        problem, _ = single_mode(gamma=1.0, tau=1.0, phi=0.0)
        self.trajectory = solve_dde(problem, SolverOptions(t_max=3.0))

    def test_zero_before_start(self):
        """Test the history is zero for negative times"""
        self.assertEqual(evaluate_history(self.trajectory, -0.5), 0j)

    def test_exact_at_nodes(self):
        """Test grid nodes return the stored values"""
        values = evaluate_history(self.trajectory, self.trajectory.times)
        np.testing.assert_array_equal(values, self.trajectory.values)
        self.assertEqual(self.trajectory(0.0), 1 + 0j)

    def test_beyond_horizon_rejected(self):
        """Test evaluation past t_max fails"""
        with self.assertRaises(ValueError):
            evaluate_history(self.trajectory, 3.5)

    def test_dense_output_between_nodes(self):
        """Test the interpolant stays close to the closed form between nodes"""
        _, params = single_mode(gamma=1.0, tau=1.0, phi=0.0)
        middles = 0.5 * (self.trajectory.times[:-1] + self.trajectory.times[1:])
        solved = evaluate_history(self.trajectory, middles)
        series = np.array([single_mode_series(params, t).value for t in middles])
        self.assertLess(np.max(np.abs(solved - series)), 1e-8)

    def test_breakpoints_on_grid(self):
        """Test every multiple of the delay is a grid node"""
        for k in (1.0, 2.0, 3.0):
            self.assertIn(k, self.trajectory.times)
        self.assertIsInstance(self.trajectory, Trajectory)


class SolverFailureTests(SimpleTestCase):
    def test_too_many_steps(self):
        """Test an overlong horizon raises a solver error"""
        problem, _ = single_mode(gamma=1.0, tau=1.0, phi=0.0)
        with self.assertRaises(SolverError):
            solve_dde(problem, SolverOptions(t_max=1e9))

    def test_non_positive_horizon(self):
        """Test integrating over an empty horizon is rejected"""
        problem, _ = single_mode(gamma=1.0, tau=1.0, phi=0.0)
        with self.assertRaises(ValueError):
            solve_dde(problem, SolverOptions(t_max=0.0))


class SymmetryTests(SimpleTestCase):
    def two_mode(self, sign=1, initial=0.6 - 0.8j, phases=(0.7, 2.9)):
        terms = (
            DelayTerm(0.25 * cmath.exp(1j * phases[0]), 1.0),
            DelayTerm(0.75 * cmath.exp(1j * phases[1]), math.sqrt(2)),
        )
        return DelayProblem(gamma=1.0, terms=terms, sign=sign, initial=initial)

    def test_linearity(self):
        """Test doubling the initial amplitude doubles the trajectory"""
        problem = self.two_mode()
        options = SolverOptions(t_max=8.0)
        single = solve_dde(problem, options)
        double = solve_dde(DelayProblem(problem.gamma, problem.terms, problem.sign, 2 * problem.initial), options)
        self.assertLessEqual(np.max(np.abs(double.values - 2 * single.values)), 1e-14)

    def test_conjugation(self):
        """Test conjugating every coefficient and C0 conjugates the trajectory"""
        problem = self.two_mode()
        mirrored = DelayProblem(
            gamma=problem.gamma,
            terms=tuple(DelayTerm(term.alpha.conjugate(), term.tau) for term in problem.terms),
            sign=problem.sign,
            initial=problem.initial.conjugate(),
        )
        options = SolverOptions(t_max=8.0)
        original = solve_dde(problem, options)
        conjugate = solve_dde(mirrored, options)
        self.assertLessEqual(np.max(np.abs(conjugate.values - original.values.conjugate())), 1e-14)

    def test_envelope_decreasing_before_first_delay(self):
        """Test |C| strictly decreases on [0, min tau)"""
        trajectory = solve_dde(self.two_mode(), SolverOptions(t_max=4.0))
        early = np.abs(trajectory.values[trajectory.times < 1.0])
        self.assertGreater(len(early), 10)
        self.assertTrue(np.all(np.diff(early) < 0))

    def test_pi_shift_maps_symmetric_onto_antisymmetric(self):
        """Test phi_j -> phi_j + pi turns the symmetric equation into the antisymmetric one"""
        phases = (0.7, 2.9)
        options = SolverOptions(t_max=8.0)
        symmetric = solve_dde(self.two_mode(sign=-1, phases=phases), options)
        shifted = solve_dde(self.two_mode(sign=1, phases=tuple(phi + math.pi for phi in phases)), options)
        np.testing.assert_array_equal(symmetric.times, shifted.times)
        self.assertLessEqual(np.max(np.abs(symmetric.values - shifted.values)), 1e-14)
