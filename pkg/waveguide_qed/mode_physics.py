"""
Per-mode parameters of two TLSs coupled to the TM guided modes of a
rectangular hollow waveguide.

Units: c = 1 and hbar = 1; lengths are in the units of the geometry (a = 1 by
default), so frequencies and rates are in c/a and times in a/c.
"""

import logging
import math
from dataclasses import dataclass

from .exceptions import ModeDomainError

logger = logging.getLogger(__name__)

SPEED_OF_LIGHT = 1.0


@dataclass(frozen=True)
class WaveguideGeometry:
    a: float = 1.0
    b: float | None = None

    def __post_init__(self):
        if self.b is None:
            object.__setattr__(self, "b", self.a / 2)
        if self.a <= 0 or self.b <= 0:
            raise ValueError(f"Waveguide sides must be positive, got a={self.a}, b={self.b}")

    def __str__(self):
        return f"{self.a:g} x {self.b:g} waveguide"


@dataclass(frozen=True, order=True)
class ModeIndex:
    m: int
    n: int

    def __post_init__(self):
        if self.m < 0 or self.n < 0:
            raise ValueError(f"Mode indices must be non-negative, got ({self.m}, {self.n})")

    @property
    def couples(self):
        """True when a centered z-oriented dipole couples to this mode"""
        return self.m % 2 == 1 and self.n % 2 == 1

    @property
    def parity(self):
        """sin(m pi/2) sin(n pi/2) for odd indices, 0 otherwise"""
        if not self.couples:
            return 0
        return (-1) ** ((self.m - 1) // 2 + (self.n - 1) // 2)

    def __str__(self):
        return f"TM{self.m}{self.n}"


@dataclass(frozen=True)
class AtomPairConfig:
    omega_A: float
    d: float
    coupling_scale: float

    def __post_init__(self):
        if self.omega_A <= 0:
            raise ValueError(f"omega_A must be positive, got {self.omega_A}")
        if self.d < 0:
            raise ValueError(f"Separation d must be non-negative, got {self.d}")
        if self.coupling_scale < 0:
            raise ValueError(f"coupling_scale must be non-negative, got {self.coupling_scale}")


@dataclass(frozen=True)
class ModeParams:
    mode: ModeIndex
    Omega: float
    k0: float
    v: float
    g: float
    gamma: float
    tau: float
    phi: float

    @property
    def alpha(self):
        """Complex delayed-coupling coefficient gamma * exp(i phi)"""
        return self.gamma * complex(math.cos(self.phi), math.sin(self.phi))

    @property
    def wavelength(self):
        return 2 * math.pi / self.k0

    def __str__(self):
        return (
            f"{self.mode}: Omega={self.Omega:.6g} k0={self.k0:.6g} v={self.v:.6g} "
            f"gamma={self.gamma:.6g} tau={self.tau:.6g} phi={self.phi:.6g}"
        )


def cutoff_frequency(geom, mode):
    return SPEED_OF_LIGHT * math.hypot(mode.m * math.pi / geom.a, mode.n * math.pi / geom.b)


def list_coupled_modes(geom, omega_A):
    """
    All TM modes with odd indices whose cutoff lies below omega_A, sorted by
    ascending cutoff. Empty when omega_A is below the lowest cutoff.
    """
    if omega_A <= 0:
        raise ValueError(f"omega_A must be positive, got {omega_A}")

    m_max = int(omega_A * geom.a / (math.pi * SPEED_OF_LIGHT))
    n_max = int(omega_A * geom.b / (math.pi * SPEED_OF_LIGHT))
    modes = [
        ModeIndex(m, n)
        for m in range(1, m_max + 1, 2)
        for n in range(1, n_max + 1, 2)
        if cutoff_frequency(geom, ModeIndex(m, n)) < omega_A
    ]
    return sorted(modes, key=lambda mode: (cutoff_frequency(geom, mode), mode))


def group_velocity(omega_A, Omega):
    if omega_A <= Omega:
        raise ModeDomainError(
            f"Mode with cutoff {Omega:.6g} does not propagate at omega_A={omega_A:.6g}"
        )
    return SPEED_OF_LIGHT * math.sqrt(omega_A**2 - Omega**2) / omega_A


def resonant_wavenumber(omega_A, Omega):
    if omega_A <= Omega:
        raise ModeDomainError(
            f"Mode with cutoff {Omega:.6g} does not propagate at omega_A={omega_A:.6g}"
        )
    return math.sqrt(omega_A**2 - Omega**2) / SPEED_OF_LIGHT


def decay_rate(geom, omega_A, mode, coupling_scale):
    """gamma_j = pi g_j^2 / (v_j omega_A) with g_j^2 = coupling_scale * Omega_j^2"""
    Omega = cutoff_frequency(geom, mode)
    v = group_velocity(omega_A, Omega)
    return math.pi * coupling_scale * (Omega * mode.parity) ** 2 / (v * omega_A)


def calibrate_coupling(target_D, geom, omega_A, reference_mode=ModeIndex(1, 1)):
    """
    Dipole scale (mu^2 / (pi epsilon_0 A), hbar = 1) for which the reference
    mode has gamma * wavelength / v equal to target_D.
    """
    if target_D <= 0:
        raise ValueError(f"Coupling target must be positive, got {target_D}")
    if not reference_mode.couples:
        raise ModeDomainError(f"{reference_mode} does not couple to centered dipoles")

    Omega = cutoff_frequency(geom, reference_mode)
    v = group_velocity(omega_A, Omega)
    wavelength = 2 * math.pi / resonant_wavenumber(omega_A, Omega)
    gamma = target_D * v / wavelength
    return gamma * v * omega_A / (math.pi * Omega**2)


def mode_params(geom, atoms, mode):
    if not mode.couples:
        raise ModeDomainError(f"{mode} does not couple to centered z-oriented dipoles")

    Omega = cutoff_frequency(geom, mode)
    k0 = resonant_wavenumber(atoms.omega_A, Omega)
    v = group_velocity(atoms.omega_A, Omega)
    return ModeParams(
        mode=mode,
        Omega=Omega,
        k0=k0,
        v=v,
        g=Omega * mode.parity * math.sqrt(atoms.coupling_scale),
        gamma=decay_rate(geom, atoms.omega_A, mode, atoms.coupling_scale),
        tau=atoms.d / v,
        phi=k0 * atoms.d,
    )


def resolve_modes(geom, atoms, modes=None, margin=0.05):
    """
    ModeParams for the given modes (all coupled propagating modes when None),
    warning when omega_A sits closer than `margin` (relative) to a cutoff,
    where the linear dispersion expansion degrades.
    """
    if modes is None:
        modes = list_coupled_modes(geom, atoms.omega_A)
        if not modes:
            raise ModeDomainError(
                f"No guided TM mode propagates at omega_A={atoms.omega_A:.6g} in the {geom}"
            )

    resolved = [mode_params(geom, atoms, mode) for mode in modes]
    for params in resolved:
        detuning = (atoms.omega_A - params.Omega) / params.Omega
        if detuning < margin:
            logger.warning(
                "omega_A is within %.3g of the %s cutoff (margin %.3g); "
                "the linear dispersion approximation degrades",
                detuning,
                params.mode,
                margin,
            )
    return resolved


def distance_for_phase(k0, n, offset=0.0):
    """Separation giving the propagation phase 2 n pi + offset in a mode with wavenumber k0"""
    return (2 * math.pi * n + offset) / k0
