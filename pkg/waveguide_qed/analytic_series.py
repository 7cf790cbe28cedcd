"""
Closed-form solutions of the Dicke-amplitude delay equations, used as
independent oracles for the numerical integrator.

Every delayed series is a finite sum of terms

    C0 * coefficient * (t - t_start)^n * exp(-rate (t - t_start))

that only switch on once t exceeds their start time. Terms are assembled in
log space (log-gamma factorials, phase tracked separately) and summed with
math.fsum, so hundreds of large alternating terms stay accurate.
"""

import cmath
import logging
import math
from dataclasses import dataclass, replace

import numpy as np
from scipy.special import gammaln

from .dde_engine import FOLD_THRESHOLD
from .exceptions import SeriesDomainError, SeriesUnavailableError

logger = logging.getLogger(__name__)

# Terms more than exp(-TAIL_LOG_RATIO) below the largest one are dropped
TAIL_LOG_RATIO = 40.0


@dataclass(frozen=True)
class SeriesParams:
    C0: complex
    gamma_total: float
    alphas: tuple
    taus: tuple
    sign: int = -1

    def __post_init__(self):
        object.__setattr__(self, "alphas", tuple(complex(a) for a in self.alphas))
        object.__setattr__(self, "taus", tuple(float(tau) for tau in self.taus))
        if len(self.alphas) != len(self.taus):
            raise ValueError("alphas and taus must have the same length")
        if len(self.alphas) not in (1, 2):
            raise SeriesUnavailableError(
                f"series oracle undefined for {len(self.alphas)} modes (1 or 2 supported)"
            )
        if self.sign not in (-1, 1):
            raise ValueError(f"sign must be +1 or -1, got {self.sign}")
        if any(tau < 0 for tau in self.taus):
            raise ValueError("Delays must be non-negative")

    @classmethod
    def from_modes(cls, modes, sign, C0):
        if len(modes) > 2:
            raise SeriesUnavailableError(
                f"series oracle undefined for {len(modes)} modes (1 or 2 supported)"
            )
        return cls(
            C0=complex(C0),
            gamma_total=sum(mode.gamma for mode in modes),
            alphas=tuple(mode.alpha for mode in modes),
            taus=tuple(mode.tau for mode in modes),
            sign=sign,
        )

    @property
    def gammas(self):
        return tuple(abs(alpha) for alpha in self.alphas)


@dataclass(frozen=True)
class SeriesValue:
    value: complex
    terms_used: int
    max_term_magnitude: float

    def __complex__(self):
        return complex(self.value)


def _log_power(base, n):
    """n * log(base) with 0^0 = 1"""
    if n == 0:
        return 0.0
    if base == 0:
        return -math.inf
    return n * math.log(base)


def _compensated_sum(terms):
    return complex(math.fsum(z.real for z in terms), math.fsum(z.imag for z in terms))


def _delay_kernel(C0, rate, coefficient, tau, t):
    """C0 * sum_n coefficient^n / n! (t - n tau)^n exp(-rate (t - n tau)) over started terms"""
    if t < 0:
        return SeriesValue(0j, 0, 0.0)

    magnitude = abs(coefficient)
    angle = cmath.phase(coefficient)
    terms = []
    largest = -math.inf
    for n in range(int(t // tau) + 1):
        elapsed = t - n * tau
        if n > 0 and (elapsed <= 0 or magnitude == 0):
            break
        log_magnitude = (
            _log_power(magnitude, n)
            + _log_power(elapsed, n)
            - gammaln(n + 1)
            - rate.real * elapsed
        )
        # log magnitude is concave in n: once below the largest, it only falls
        if log_magnitude < largest - TAIL_LOG_RATIO:
            break
        largest = max(largest, log_magnitude)
        phase = n * angle - rate.imag * elapsed
        terms.append(C0 * cmath.rect(math.exp(log_magnitude), phase))

    return SeriesValue(
        value=_compensated_sum(terms),
        terms_used=len(terms),
        max_term_magnitude=max(abs(term) for term in terms),
    )


def _shell_exhausted(n, reach, strength, rate, step, largest):
    """
    True when no term with n or more delays can come within TAIL_LOG_RATIO of
    `largest`. With reach = t - n step and n >= rate reach, every term of shell n
    is at most strength^n reach^n exp(-rate reach) / n!; once also
    n + 1 >= strength reach exp(rate step) that bound falls from shell to shell.
    """
    if n == 0 or n < rate * reach:
        return False
    if math.log(n + 1) < _log_power(strength * reach, 1) + rate * step:
        return False
    bound = _log_power(strength, n) + _log_power(reach, n) - gammaln(n + 1) - rate * reach
    return bound < largest - TAIL_LOG_RATIO


def _require_modes(params, count):
    if len(params.alphas) != count:
        raise SeriesDomainError(
            f"This closed form needs exactly {count} mode(s), got {len(params.alphas)}"
        )


def single_mode_series(params, t):
    _require_modes(params, 1)
    (alpha,), (tau,) = params.alphas, params.taus
    if tau <= 0:
        raise SeriesDomainError("single_mode_series needs a positive delay; use zero_delay_single_mode")
    return _delay_kernel(params.C0, complex(params.gamma_total), params.sign * alpha, tau, t)


def zero_delay_single_mode(params, t):
    _require_modes(params, 1)
    if t < 0:
        return 0j
    rate = -params.gamma_total + params.sign * params.alphas[0]
    return params.C0 * cmath.exp(rate * t)


def zero_delay_two_mode(params, t):
    _require_modes(params, 2)
    if t < 0:
        return 0j
    rate = -params.gamma_total + params.sign * sum(params.alphas)
    return params.C0 * cmath.exp(rate * t)


def partial_delay_two_mode(params, t):
    """Two modes with the first delay folded to zero and the second kept"""
    _require_modes(params, 2)
    alpha1, alpha2 = params.alphas
    tau2 = params.taus[1]
    if tau2 <= 0:
        raise SeriesDomainError("partial_delay_two_mode needs a positive second delay")
    rate = params.gamma_total - params.sign * alpha1
    return _delay_kernel(params.C0, rate, params.sign * alpha2, tau2, t)


def double_series_two_mode(params, t, printed_coefficient=False):
    """
    Coherent sum over contributions starting at k tau1 + (n - k) tau2.

    The weight is the binomial coefficient n!/(k!(n-k)!); with
    `printed_coefficient` the non-binomial k!/(n!(n-k)!) is used instead,
    which does not satisfy the delay equation and exists only to show that.
    """
    _require_modes(params, 2)
    tau1, tau2 = params.taus
    if tau1 <= 0 or tau2 <= 0:
        raise SeriesDomainError("double_series_two_mode needs two positive delays")
    if t < 0:
        return SeriesValue(0j, 0, 0.0)

    c1, c2 = (params.sign * alpha for alpha in params.alphas)
    angle1, angle2 = cmath.phase(c1), cmath.phase(c2)
    terms = []
    strength = abs(c1) + abs(c2)
    step = min(tau1, tau2)
    largest = -math.inf
    for n in range(int(t // step) + 1):
        if _shell_exhausted(n, t - n * step, strength, params.gamma_total, step, largest):
            break
        for k in range(n + 1):
            elapsed = t - (k * tau1 + (n - k) * tau2)
            if elapsed < 0 or (n > 0 and elapsed == 0):
                continue
            if printed_coefficient:
                log_weight = gammaln(k + 1) - 2 * gammaln(n + 1) - gammaln(n - k + 1)
            else:
                log_weight = -gammaln(k + 1) - gammaln(n - k + 1)
            log_magnitude = (
                log_weight
                + _log_power(abs(c1), k)
                + _log_power(abs(c2), n - k)
                + _log_power(elapsed, n)
                - params.gamma_total * elapsed
            )
            if log_magnitude == -math.inf:
                continue
            largest = max(largest, log_magnitude)
            phase = k * angle1 + (n - k) * angle2
            terms.append(params.C0 * cmath.rect(math.exp(log_magnitude), phase))

    return SeriesValue(
        value=_compensated_sum(terms),
        terms_used=len(terms),
        max_term_magnitude=max((abs(term) for term in terms), default=0.0),
    )


def dominant_term_single_mode(params, t):
    """
    Large-delay approximation: inside (n tau, (n+1) tau] only the n-th term of
    the single-mode series is kept.
    """
    _require_modes(params, 1)
    (alpha,), (tau,) = params.alphas, params.taus
    if tau <= 0:
        raise SeriesDomainError("dominant_term_single_mode needs a positive delay")
    if t < 0:
        return 0j

    n = max(math.ceil(t / tau) - 1, 0)
    elapsed = t - n * tau
    coefficient = params.sign * alpha
    log_magnitude = (
        _log_power(abs(coefficient), n)
        + _log_power(elapsed, n)
        - gammaln(n + 1)
        - params.gamma_total * elapsed
    )
    return params.C0 * cmath.rect(math.exp(log_magnitude), n * cmath.phase(coefficient))


def phase_irrelevance_margin(gamma, tau1, tau2, t_max):
    """
    min gamma |p tau2 - q tau1| over non-negative p, q (not both zero) with
    p tau2 and q tau1 inside the horizon. Large values mean delayed
    contributions never overlap, so propagation phases stop mattering.
    """
    best = math.inf
    q_max = int(t_max // tau1) if tau1 > 0 else 0
    p_max = int(t_max // tau2) if tau2 > 0 else 0
    for p in range(p_max + 1):
        nearest = p * tau2 / tau1 if tau1 > 0 else 0.0
        for q in {math.floor(nearest), math.ceil(nearest), 1}:
            if 0 <= q <= q_max and (p, q) != (0, 0):
                best = min(best, gamma * abs(p * tau2 - q * tau1))
    return best


def series_value(params, t):
    """Closed form matching the delay regime of params (delays below the fold threshold count as zero)"""
    folded = [tau < FOLD_THRESHOLD for tau in params.taus]

    if len(params.alphas) == 1:
        if folded[0]:
            return zero_delay_single_mode(params, t)
        return single_mode_series(params, t).value

    if all(folded):
        return zero_delay_two_mode(params, t)
    if any(folded):
        if not folded[0]:
            params = replace(params, alphas=params.alphas[::-1], taus=params.taus[::-1])
        return partial_delay_two_mode(params, t).value
    return double_series_two_mode(params, t).value


def evaluate_series(params, times):
    """series_value over an array of times"""
    values = np.array([series_value(params, float(t)) for t in np.atleast_1d(times)], dtype=complex)
    logger.debug("Evaluated closed form at %d times", len(values))
    return values


def dde_residual(evaluate, params, times, delta=1e-4):
    """
    |C'(t) + gamma C(t) - sign sum_j alpha_j C(t - tau_j) Theta(t - tau_j)| with a
    central difference for C'. `evaluate(t)` may return a complex or a SeriesValue.
    """

    def amplitude(s):
        if s < 0:
            return 0j
        return complex(evaluate(s))

    residuals = []
    for t in np.atleast_1d(times):
        t = float(t)
        derivative = (amplitude(t + delta) - amplitude(t - delta)) / (2 * delta)
        delayed = sum(
            alpha * amplitude(t - tau)
            for alpha, tau in zip(params.alphas, params.taus)
            if t - tau > 0
        )
        residuals.append(
            abs(derivative + params.gamma_total * amplitude(t) - params.sign * delayed)
        )
    return np.array(residuals)
