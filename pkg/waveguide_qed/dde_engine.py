"""
Method-of-steps integrator for scalar linear delay equations

    dC/dt = -gamma C(t) + sign * sum_j alpha_j C(t - tau_j) Theta(t - tau_j)

with zero history before t = 0. Each step is a classical fourth-order
Runge-Kutta step; delayed values come from the cubic Hermite dense output of
the already computed history.
"""

import bisect
import cmath
import logging
import math
from dataclasses import dataclass, field
from functools import cached_property
from itertools import pairwise

import numpy as np
from scipy.interpolate import PPoly

from .exceptions import SolverError

logger = logging.getLogger(__name__)

# Delays shorter than this are folded into the instantaneous coefficient
FOLD_THRESHOLD = 1e-12
MAX_STEPS = 20_000_000
LATTICE_LIMIT = 4096


@dataclass(frozen=True)
class DelayTerm:
    alpha: complex
    tau: float

    def __post_init__(self):
        if self.tau < 0:
            raise ValueError(f"Delay must be non-negative, got {self.tau}")


@dataclass(frozen=True)
class DelayProblem:
    gamma: float
    terms: tuple = ()
    sign: int = -1
    initial: complex = 1.0

    def __post_init__(self):
        if self.gamma < 0:
            raise ValueError(f"Local decay rate must be non-negative, got {self.gamma}")
        if self.sign not in (-1, 1):
            raise ValueError(f"sign must be +1 or -1, got {self.sign}")
        object.__setattr__(self, "terms", tuple(self.terms))

    @classmethod
    def from_modes(cls, modes, sign, initial):
        """Dicke-amplitude equation for the given ModeParams (gamma = sum of gamma_j)"""
        return cls(
            gamma=sum(mode.gamma for mode in modes),
            terms=tuple(DelayTerm(mode.alpha, mode.tau) for mode in modes),
            sign=sign,
            initial=complex(initial),
        )

    def folded(self):
        """Instantaneous coefficient and the remaining positive-delay terms"""
        local = complex(-self.gamma)
        delayed = []
        for term in self.terms:
            if term.tau < FOLD_THRESHOLD:
                local += self.sign * term.alpha
            else:
                delayed.append(term)
        return local, tuple(delayed)

    def describe(self):
        return {
            "gamma": self.gamma,
            "sign": self.sign,
            "initial": self.initial,
            "alphas": [term.alpha for term in self.terms],
            "taus": [term.tau for term in self.terms],
        }


@dataclass(frozen=True)
class SolverOptions:
    t_max: float
    step_fraction_tau: int = 64
    step_fraction_gamma: int = 200
    richardson_check: bool = False

    def __post_init__(self):
        if self.step_fraction_tau < 8 or self.step_fraction_gamma < 8:
            raise ValueError("Step fractions must be at least 8")
        if self.t_max < 0:
            raise ValueError(f"t_max must be non-negative, got {self.t_max}")


class Trajectory:
    """Solved amplitude on the step grid, with Hermite dense output in between"""

    def __init__(self, times, values, slopes_start, slopes_end, metadata=None):
        self.times = np.asarray(times, dtype=float)
        self.values = np.asarray(values, dtype=complex)
        self.slopes_start = np.asarray(slopes_start, dtype=complex)
        self.slopes_end = np.asarray(slopes_end, dtype=complex)
        self.metadata = dict(metadata or {})

    @property
    def t_max(self):
        return float(self.times[-1])

    @property
    def initial(self):
        return complex(self.values[0])

    @cached_property
    def dense(self):
        widths = np.diff(self.times)
        y0, y1 = self.values[:-1], self.values[1:]
        d0, d1 = self.slopes_start, self.slopes_end
        secant = (y1 - y0) / widths
        coefficients = np.array(
            [
                (d0 + d1 - 2 * secant) / widths**2,
                (3 * secant - 2 * d0 - d1) / widths,
                d0,
                y0,
            ]
        )
        return PPoly(coefficients, self.times, extrapolate=False)

    def __call__(self, t):
        return evaluate_history(self, t)

    def __len__(self):
        return len(self.times)

    def __str__(self):
        return f"Trajectory({len(self)} nodes up to t={self.t_max:.6g})"


def _hermite(t0, t1, y0, y1, d0, d1, s):
    h = t1 - t0
    x = (s - t0) / h
    x2 = x * x
    x3 = x2 * x
    return (
        (2 * x3 - 3 * x2 + 1) * y0
        + (x3 - 2 * x2 + x) * h * d0
        + (-2 * x3 + 3 * x2) * y1
        + (x3 - x2) * h * d1
    )


def step_size(problem, options):
    _, delayed = problem.folded()
    candidates = [options.t_max / 1000]
    if delayed:
        candidates.append(min(term.tau for term in delayed) / options.step_fraction_tau)
    if problem.gamma > 0:
        candidates.append(1 / (problem.gamma * options.step_fraction_gamma))
    return min(candidates)


def _breakpoints(taus, t_max, gap):
    """
    Grid points the integrator must land on: each delay, t_max and, when not
    too many, every sum of delays up to t_max. Lattice points closer than `gap`
    to a kept point are dropped.
    """
    required = sorted({tau for tau in taus if tau < t_max} | {t_max})

    lattice = set()
    frontier = {0.0}
    while frontier and len(lattice) <= LATTICE_LIMIT:
        frontier = {
            point + tau for point in frontier for tau in taus if point + tau < t_max
        } - lattice
        lattice |= frontier
    if len(lattice) > LATTICE_LIMIT:
        lattice = {
            k * tau for tau in set(taus) for k in range(2, int(t_max / tau) + 1) if k * tau < t_max
        }

    kept = list(required)
    for point in sorted(lattice):
        index = bisect.bisect_left(kept, point)
        neighbours = kept[max(index - 1, 0) : index + 1]
        if all(abs(point - other) >= gap for other in neighbours):
            kept.insert(index, point)
    return kept


def solve_dde(problem, options, step=None):
    if options.t_max <= 0:
        raise ValueError("t_max must be positive to integrate")

    local, delayed = problem.folded()
    alphas = [problem.sign * term.alpha for term in delayed]
    taus = [term.tau for term in delayed]

    h = step if step is not None else step_size(problem, options)
    if h <= options.t_max * 1e-12:
        raise SolverError(f"Step size {h:.3g} underflows the horizon {options.t_max:.6g}")
    if options.t_max / h > MAX_STEPS:
        raise SolverError(
            f"Horizon {options.t_max:.6g} needs more than {MAX_STEPS} steps of {h:.3g}"
        )

    breakpoints = _breakpoints(taus, options.t_max, h / 4)
    logger.debug("Integrating with step %.4g over %d breakpoints", h, len(breakpoints))

    times = [0.0]
    values = [complex(problem.initial)]
    slopes_start = []
    slopes_end = []

    def history(s):
        if s < 0:
            return 0j
        i = bisect.bisect_right(times, s) - 1
        if i >= len(slopes_start):
            return values[-1]
        return _hermite(
            times[i], times[i + 1], values[i], values[i + 1], slopes_start[i], slopes_end[i], s
        )

    for left, right in pairwise([0.0] + breakpoints):
        middle = 0.5 * (left + right)
        active = [(alpha, tau) for alpha, tau in zip(alphas, taus) if middle > tau]

        def rhs(t, y):
            total = local * y
            for alpha, tau in active:
                total += alpha * history(t - tau)
            return total

        count = max(1, math.ceil((right - left) / h - 1e-9))
        width = (right - left) / count
        for k in range(count):
            t = times[-1]
            y = values[-1]
            t_next = right if k == count - 1 else left + (k + 1) * width
            dt = t_next - t

            k1 = rhs(t, y)
            k2 = rhs(t + dt / 2, y + dt / 2 * k1)
            k3 = rhs(t + dt / 2, y + dt / 2 * k2)
            k4 = rhs(t_next, y + dt * k3)
            y_next = y + dt / 6 * (k1 + 2 * k2 + 2 * k3 + k4)
            if not cmath.isfinite(y_next):
                raise SolverError(f"Amplitude became non-finite at t={t_next:.6g}")
            end_slope = rhs(t_next, y_next)

            times.append(t_next)
            values.append(y_next)
            slopes_start.append(k1)
            slopes_end.append(end_slope)

    metadata = problem.describe()
    metadata.update(step=h, breakpoints=len(breakpoints), t_max=options.t_max)
    return Trajectory(times, values, slopes_start, slopes_end, metadata)


def evaluate_history(trajectory, t):
    """
    Dense-output amplitude at t; zero before t = 0 and exactly the stored
    value at grid nodes.
    """
    t_arr = np.asarray(t, dtype=float)
    scalar = t_arr.ndim == 0
    t_arr = np.atleast_1d(t_arr)

    t_max = trajectory.t_max
    if np.any(t_arr > t_max * (1 + 1e-12)):
        raise ValueError(f"t={t_arr.max():.6g} lies beyond the solved horizon {t_max:.6g}")

    out = np.zeros(t_arr.shape, dtype=complex)
    inside = t_arr >= 0
    out[inside] = trajectory.dense(np.minimum(t_arr[inside], t_max))

    index = np.clip(np.searchsorted(trajectory.times, t_arr), 0, len(trajectory.times) - 1)
    on_node = inside & (trajectory.times[index] == t_arr)
    out[on_node] = trajectory.values[index[on_node]]

    return complex(out[0]) if scalar else out


@dataclass(frozen=True)
class ConvergenceReport:
    step: float
    max_deviation: float
    samples: int = 0
    details: dict = field(default_factory=dict)

    @property
    def error_estimate(self):
        """Richardson estimate of the error left in the finer solve"""
        return self.max_deviation / 15


def convergence_report(problem, options):
    """Deviation between solves at the default step h and at h/2"""
    if options.t_max <= 0:
        return ConvergenceReport(step=0.0, max_deviation=0.0)

    h = step_size(problem, options)
    coarse = solve_dde(problem, options, step=h)
    fine = solve_dde(problem, options, step=h / 2)
    deviation = np.abs(coarse.values - evaluate_history(fine, coarse.times))
    report = ConvergenceReport(
        step=h,
        max_deviation=float(deviation.max()),
        samples=len(coarse),
        details={"fine_nodes": len(fine)},
    )
    logger.debug("Self-convergence at step %.4g: %.3g", h, report.max_deviation)
    return report
