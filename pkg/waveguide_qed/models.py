import math
from dataclasses import asdict, dataclass, field, replace
from pathlib import Path

import numpy as np
from django.core.exceptions import ValidationError

from .dde_engine import SolverOptions
from .entanglement import AmplitudePair, DickePair, concurrence, dicke_from_bare, population
from .mode_physics import WaveguideGeometry, cutoff_frequency, distance_for_phase

METHODS = ("dde", "series", "both")
INITIAL_STATES = ("symmetric", "antisymmetric", "bare")
TIME_UNITS = ("tau1", "inv_gamma", "absolute")
NORMALIZATION_TOLERANCE = 1e-12


@dataclass(frozen=True)
class OmegaSpec:
    value: float | None = None
    midpoint: tuple | None = None

    def resolve(self, geometry):
        if self.value is not None:
            return self.value
        lower, upper = self.midpoint
        return (cutoff_frequency(geometry, lower) + cutoff_frequency(geometry, upper)) / 2

    def __str__(self):
        if self.value is not None:
            return f"{self.value:g}"
        lower, upper = self.midpoint
        return f"mid({lower.m}{lower.n},{upper.m}{upper.n})"


@dataclass(frozen=True)
class DistanceSpec:
    length: float | None = None
    lambda1: float | None = None
    phase_n: int | None = None
    phase_offset: float = 0.0

    @property
    def given(self):
        return [name for name in ("length", "lambda1", "phase_n") if getattr(self, name) is not None]

    def clean(self):
        given = self.given
        if len(given) != 1:
            raise ValidationError(
                {
                    "distance": [
                        "Exactly one of distance.length, distance.lambda1 or "
                        f"distance.phase_n must be given (got {', '.join(given) or 'none'})"
                    ]
                }
            )

    def resolve(self, k10):
        """Separation in length units, given the first mode's resonant wavenumber"""
        if self.length is not None:
            return self.length
        wavelength = 2 * math.pi / k10
        if self.lambda1 is not None:
            return self.lambda1 * wavelength
        return distance_for_phase(k10, self.phase_n, self.phase_offset)

    def __str__(self):
        if self.length is not None:
            return f"d={self.length:g}"
        if self.lambda1 is not None:
            return f"d={self.lambda1:g} lambda1"
        return f"phi1=2*{self.phase_n}*pi+{self.phase_offset:g}"


@dataclass(frozen=True)
class InitialState:
    state: str = "symmetric"
    B1: complex = 0j
    B2: complex = 0j

    def clean(self):
        if self.state not in INITIAL_STATES:
            raise ValidationError({"initial.state": [f"Unknown initial state '{self.state}'"]})
        if self.state == "bare":
            norm = abs(self.B1) ** 2 + abs(self.B2) ** 2
            if abs(norm - 1) > NORMALIZATION_TOLERANCE:
                raise ValidationError(
                    {"initial": [f"|B1|^2 + |B2|^2 must be 1, got {norm:.15g}"]}
                )

    def dicke(self):
        if self.state == "symmetric":
            return DickePair(Cs=1 + 0j, Ca=0j)
        if self.state == "antisymmetric":
            return DickePair(Cs=0j, Ca=1 + 0j)
        return dicke_from_bare(AmplitudePair(B1=complex(self.B1), B2=complex(self.B2)))

    def __str__(self):
        if self.state == "bare":
            return f"bare({self.B1}, {self.B2})"
        return self.state


@dataclass(frozen=True)
class TimeGrid:
    t_max: float
    unit: str = "tau1"
    samples: int = 2000
    reference_lambda1: float | None = None


@dataclass(frozen=True)
class SolverSettings:
    step_fraction_tau: int = 64
    step_fraction_gamma: int = 200
    richardson_check: bool = False

    def options(self, t_max):
        return SolverOptions(
            t_max=t_max,
            step_fraction_tau=self.step_fraction_tau,
            step_fraction_gamma=self.step_fraction_gamma,
            richardson_check=self.richardson_check,
        )


@dataclass(frozen=True)
class SweepSpec:
    parameter: str
    values: tuple


@dataclass(frozen=True)
class ScenarioConfig:
    name: str
    omega: OmegaSpec
    coupling_d: float
    distance: DistanceSpec
    initial: InitialState
    time: TimeGrid
    geometry: WaveguideGeometry = field(default_factory=WaveguideGeometry)
    solver: SolverSettings = field(default_factory=SolverSettings)
    modes: tuple | None = None
    methods: str = "both"
    evanescent_margin: float = 0.05
    sweep: SweepSpec | None = None
    source: dict = field(default_factory=dict, compare=False, repr=False)

    def clean(self):
        """Cross-field checks shared by scenario files and built-in presets"""
        self.distance.clean()
        self.initial.clean()
        if self.methods not in METHODS:
            raise ValidationError({"methods": [f"Unknown method '{self.methods}'"]})
        if self.time.unit not in TIME_UNITS:
            raise ValidationError({"time.unit": [f"Unknown time unit '{self.time.unit}'"]})
        if self.modes is not None and not self.modes:
            raise ValidationError({"modes": ["An explicit mode list cannot be empty"]})

    def with_overrides(self, t_max=None, samples=None, step_fraction_tau=None,
                       step_fraction_gamma=None, methods=None):
        """Copy with command-line overrides applied (None keeps the configured value)"""
        time = replace(
            self.time,
            t_max=self.time.t_max if t_max is None else t_max,
            samples=self.time.samples if samples is None else samples,
        )
        solver = replace(
            self.solver,
            step_fraction_tau=step_fraction_tau or self.solver.step_fraction_tau,
            step_fraction_gamma=step_fraction_gamma or self.solver.step_fraction_gamma,
        )
        return replace(self, time=time, solver=solver, methods=methods or self.methods)

    def describe(self):
        """Flat view of the resolved configuration, defaults included"""
        return {
            "name": self.name,
            "geometry.a": self.geometry.a,
            "geometry.b": self.geometry.b,
            "atoms.omega_a": str(self.omega),
            "atoms.coupling_d": self.coupling_d,
            "atoms.evanescent_margin": self.evanescent_margin,
            "distance": str(self.distance),
            "modes": "auto" if self.modes is None else [str(mode) for mode in self.modes],
            "initial": str(self.initial),
            **{f"time.{key}": value for key, value in asdict(self.time).items()},
            **{f"solver.{key}": value for key, value in asdict(self.solver).items()},
            "methods": self.methods,
        }

    def __str__(self):
        return f"{self.name} ({self.initial}, {self.distance}, omega_A={self.omega})"


@dataclass
class ScenarioTrajectory:
    """Bare amplitudes of one solution method on the output grid"""

    times: np.ndarray
    tau1: float
    B1: np.ndarray
    B2: np.ndarray

    @property
    def t_over_tau1(self):
        return self.times / self.tau1

    @property
    def pair(self):
        return AmplitudePair(B1=self.B1, B2=self.B2)

    @property
    def population(self):
        return population(self.pair)

    @property
    def concurrence(self):
        return concurrence(self.pair)


@dataclass
class RunReport:
    config: ScenarioConfig
    modes: list
    trajectories: dict
    deviation: float | None = None
    outputs: list = field(default_factory=list)
    gamma1_tau1: float = 0.0
    regime: str = ""
    phase_margin: float | None = None
    convergence: dict = field(default_factory=dict)

    def output(self, suffix):
        return next(path for path in self.outputs if Path(path).name.endswith(suffix))

    def __str__(self):
        text = f"{self.config.name}: {len(self.modes)} mode(s), gamma1*tau1={self.gamma1_tau1:.4g} ({self.regime})"
        if self.deviation is not None:
            text += f", max deviation {self.deviation:.3g}"
        return text


@dataclass
class ComparisonReport:
    name: str
    deviation: float
    tolerance: float
    report: RunReport | None = None

    @property
    def passed(self):
        return self.deviation <= self.tolerance

    def __str__(self):
        outcome = "within" if self.passed else "ABOVE"
        return f"{self.name}: max |dde - series| = {self.deviation:.3g}, {outcome} tolerance {self.tolerance:.3g}"
