"""
Scenario plumbing: load and validate scenario files, resolve them into mode
parameters, run the requested solution methods, write trajectories and ship
the built-in figure presets.
"""

import copy
import logging
import math
from dataclasses import dataclass, replace
from pathlib import Path

import numpy as np
from django.conf import settings
from django.core.exceptions import ValidationError

try:
    import tomllib
except ModuleNotFoundError:  # Python < 3.11
    import tomli as tomllib

from .analytic_series import SeriesParams, evaluate_series, phase_irrelevance_margin
from .dde_engine import DelayProblem, convergence_report, evaluate_history, solve_dde
from .entanglement import DickePair, bare_from_dicke
from .exceptions import SeriesUnavailableError
from .mode_physics import (
    AtomPairConfig,
    ModeIndex,
    calibrate_coupling,
    cutoff_frequency,
    group_velocity,
    resolve_modes,
    resonant_wavenumber,
)
from .models import ComparisonReport, RunReport, ScenarioTrajectory
from .serializers import ScenarioSerializer, flatten_errors

logger = logging.getLogger(__name__)

CSV_HEADER = "t_over_tau1,re_B1,im_B1,re_B2,im_B2,population,concurrence"
REFERENCE_MODE = ModeIndex(1, 1)
COLLECTIVE_LIMIT = 0.2
RETARDED_LIMIT = 5.0
DISTANCE_FORMS = ("length", "lambda1", "phase_n")

# Dicke components: (label, sign of the delayed coupling)
COMPONENTS = (("Cs", -1), ("Ca", 1))


@dataclass(frozen=True)
class ResolvedScenario:
    omega_A: float
    coupling_scale: float
    d: float
    modes: list
    tau1: float
    times: np.ndarray

    @property
    def gamma_total(self):
        return sum(mode.gamma for mode in self.modes)

    @property
    def t_max(self):
        return float(self.times[-1])


def build_config(raw):
    """Validate a raw scenario mapping and build its ScenarioConfig"""
    serializer = ScenarioSerializer(data=raw)
    if not serializer.is_valid():
        raise ValidationError(flatten_errors(serializer.errors))
    return serializer.save(source=copy.deepcopy(raw))


def load_config(path):
    path = Path(path)
    try:
        with path.open("rb") as handle:
            raw = tomllib.load(handle)
    except FileNotFoundError:
        raise ValidationError({"path": [f"Scenario file {path} does not exist"]})
    except tomllib.TOMLDecodeError as e:
        raise ValidationError({"path": [f"Malformed scenario file {path}: {e}"]})

    raw.setdefault("name", path.stem)
    config = build_config(raw)

    logger.info("Loaded scenario %s from %s", config.name, path)
    for key, value in config.describe().items():
        logger.info("  %s = %s", key, value)
    return config


def classify_regime(gamma1_tau1):
    if gamma1_tau1 < COLLECTIVE_LIMIT:
        return "collective"
    if gamma1_tau1 > RETARDED_LIMIT:
        return "retarded"
    return "intermediate"


def resolve_scenario(config):
    """Frequencies, coupling, separation, mode parameters and output grid of a scenario"""
    geometry = config.geometry
    omega_A = config.omega.resolve(geometry)
    coupling_scale = calibrate_coupling(config.coupling_d, geometry, omega_A, REFERENCE_MODE)

    Omega1 = cutoff_frequency(geometry, REFERENCE_MODE)
    k10 = resonant_wavenumber(omega_A, Omega1)
    v1 = group_velocity(omega_A, Omega1)
    d = config.distance.resolve(k10)

    atoms = AtomPairConfig(omega_A=omega_A, d=d, coupling_scale=coupling_scale)
    modes = resolve_modes(geometry, atoms, config.modes, margin=config.evanescent_margin)

    if d > 0:
        tau1 = d / v1
    elif config.time.reference_lambda1 is not None:
        tau1 = config.time.reference_lambda1 * (2 * math.pi / k10) / v1
    else:
        raise ValidationError(
            {"time.reference_lambda1": ["Required when the separation is zero (defines the tau1 unit)"]}
        )

    if config.time.unit == "tau1":
        t_max = config.time.t_max * tau1
    elif config.time.unit == "inv_gamma":
        t_max = config.time.t_max / sum(mode.gamma for mode in modes)
    else:
        t_max = config.time.t_max

    for params in modes:
        logger.info("  %s", params)

    return ResolvedScenario(
        omega_A=omega_A,
        coupling_scale=coupling_scale,
        d=d,
        modes=modes,
        tau1=tau1,
        times=np.linspace(0.0, t_max, config.time.samples),
    )


def _solve_components(method, config, resolved, convergence):
    dicke = config.initial.dicke()
    initial = {"Cs": dicke.Cs, "Ca": dicke.Ca}
    amplitudes = {}

    for label, sign in COMPONENTS:
        C0 = complex(initial[label])
        if C0 == 0:
            amplitudes[label] = np.zeros(len(resolved.times), dtype=complex)
            continue

        if method == "series":
            params = SeriesParams.from_modes(resolved.modes, sign, C0)
            amplitudes[label] = evaluate_series(params, resolved.times)
            continue

        problem = DelayProblem.from_modes(resolved.modes, sign, C0)
        options = config.solver.options(resolved.t_max)
        trajectory = solve_dde(problem, options)
        amplitudes[label] = evaluate_history(trajectory, resolved.times)
        logger.debug("%s %s: %s", config.name, label, trajectory)
        if config.solver.richardson_check:
            convergence[label] = convergence_report(problem, options)
            logger.info(
                "%s %s: Richardson error estimate %.3g",
                config.name,
                label,
                convergence[label].error_estimate,
            )

    pair = bare_from_dicke(DickePair(Cs=amplitudes["Cs"], Ca=amplitudes["Ca"]))
    return ScenarioTrajectory(times=resolved.times, tau1=resolved.tau1, B1=pair.B1, B2=pair.B2)


def write_csv(trajectory, path):
    columns = np.column_stack(
        [
            trajectory.t_over_tau1,
            trajectory.B1.real,
            trajectory.B1.imag,
            trajectory.B2.real,
            trajectory.B2.imag,
            trajectory.population,
            trajectory.concurrence,
        ]
    )
    np.savetxt(path, columns, fmt="%.17g", delimiter=",", header=CSV_HEADER, comments="")
    return Path(path)


def run_scenario(config, out_dir=None, plot=False, write=True):
    """
    Solve a scenario with each requested method and, unless `write` is off,
    write one CSV per method (and a concurrence plot with `plot`).
    """
    resolved = resolve_scenario(config)
    methods = ("dde", "series") if config.methods == "both" else (config.methods,)
    if "series" in methods and len(resolved.modes) > 2:
        raise SeriesUnavailableError(
            f"series oracle undefined for {len(resolved.modes)} modes (1 or 2 supported)"
        )

    first = resolved.modes[0]
    gamma1_tau1 = first.gamma * first.tau
    regime = classify_regime(gamma1_tau1)
    logger.info("%s: gamma1*tau1 = %.6g (%s)", config.name, gamma1_tau1, regime)

    phase_margin = None
    if len(resolved.modes) == 2 and resolved.d > 0:
        phase_margin = phase_irrelevance_margin(
            resolved.gamma_total, resolved.modes[0].tau, resolved.modes[1].tau, resolved.t_max
        )
        logger.info("%s: delayed-contribution separation margin %.4g", config.name, phase_margin)

    convergence = {}
    trajectories = {
        method: _solve_components(method, config, resolved, convergence) for method in methods
    }

    deviation = None
    if config.methods == "both":
        dde, series = trajectories["dde"], trajectories["series"]
        deviation = float(
            max(np.max(np.abs(dde.B1 - series.B1)), np.max(np.abs(dde.B2 - series.B2)))
        )

    report = RunReport(
        config=config,
        modes=resolved.modes,
        trajectories=trajectories,
        deviation=deviation,
        gamma1_tau1=gamma1_tau1,
        regime=regime,
        phase_margin=phase_margin,
        convergence=convergence,
    )

    if write:
        out_dir = Path(out_dir or settings.WAVEGUIDE_QED["OUTPUT_DIR"])
        out_dir.mkdir(parents=True, exist_ok=True)
        for method, trajectory in trajectories.items():
            path = write_csv(trajectory, out_dir / f"{config.name}_{method}.csv")
            report.outputs.append(path)
            logger.info("Wrote %s", path)
        if plot:
            from .plotting import plot_concurrence

            report.outputs.append(
                plot_concurrence([report], out_dir / f"{config.name}.png", title=config.name)
            )

    return report


def compare_methods(config, tolerance=None, out_dir=None):
    """Largest |dde - series| amplitude deviation of a scenario over its time grid"""
    if tolerance is None:
        tolerance = settings.WAVEGUIDE_QED["COMPARE_TOLERANCE"]

    report = run_scenario(
        replace(config, methods="both"), out_dir=out_dir, write=out_dir is not None
    )
    comparison = ComparisonReport(
        name=config.name, deviation=report.deviation, tolerance=tolerance, report=report
    )
    if comparison.passed:
        logger.info("%s", comparison)
    else:
        logger.warning("%s", comparison)
    return comparison


def expand_sweep(config):
    """One ScenarioConfig per value of the configured sweep parameter"""
    if config.sweep is None:
        raise ValidationError({"sweep": ["The scenario has no [sweep] section"]})

    section, key = config.sweep.parameter.split(".")
    configs = []
    for index, value in enumerate(config.sweep.values):
        raw = copy.deepcopy(config.source)
        raw.pop("sweep", None)
        raw["name"] = f"{config.name}-{index:03d}"
        target = raw.setdefault(section, {})
        if section == "distance" and key in DISTANCE_FORMS:
            for form in DISTANCE_FORMS:
                target.pop(form, None)
        target[key] = value
        configs.append(build_config(raw))
    logger.info("Expanded %s into %d scenarios over %s", config.name, len(configs), config.sweep.parameter)
    return configs


def _scenario(name, omega_a, coupling_d, distance, state, t_max, modes="auto", reference_lambda1=None):
    raw = {
        "name": name,
        "methods": "both",
        "modes": modes,
        "geometry": {"a": 1.0, "b": 0.5},
        "atoms": {"omega_a": omega_a, "coupling_d": coupling_d},
        "distance": distance,
        "initial": state if isinstance(state, dict) else {"state": state},
        "time": {"t_max": t_max, "unit": "tau1", "samples": 2000},
    }
    if reference_lambda1 is not None:
        raw["time"]["reference_lambda1"] = reference_lambda1
    return raw


def _fig2(n):
    offsets = (("2npi", 0.0), ("2npi-plus-pi", math.pi), ("2npi-plus-pi2", math.pi / 2), ("2npi-plus-pi4", math.pi / 4))
    return [
        _scenario(
            f"phi-{label}",
            "mid(11,31)",
            0.05,
            {"phase_n": n, "phase_offset": offset},
            "symmetric",
            12.0,
        )
        for label, offset in offsets
    ]


def _fig3():
    return [
        _scenario("d0", "mid(11,31)", 0.05, {"length": 0.0}, "antisymmetric", 12.0, reference_lambda1=10.0),
        _scenario("d10-lambda1", "mid(11,31)", 0.05, {"lambda1": 10.0}, "antisymmetric", 12.0),
        _scenario("d200-lambda1", "mid(11,31)", 0.05, {"lambda1": 200.0}, "antisymmetric", 12.0),
    ]


def _fig4(n):
    # phi1 = 2 n pi puts the TLSs n first-mode wavelengths apart
    return [
        _scenario("d0", "mid(31,51)", 0.0086, {"length": 0.0}, "antisymmetric", 10.0, reference_lambda1=float(n)),
        _scenario("single-mode", "mid(31,51)", 0.0086, {"phase_n": n}, "antisymmetric", 10.0, modes=[[1, 1]]),
        _scenario("two-mode", "mid(31,51)", 0.0086, {"phase_n": n}, "antisymmetric", 10.0),
    ]


def _trapping():
    return [
        _scenario(
            "bare-10",
            "mid(11,31)",
            0.05,
            {"length": 0.0},
            {"state": "bare", "b1_re": 1.0},
            12.0,
            modes=[[1, 1]],
            reference_lambda1=10.0,
        )
    ]


PRESETS = {
    "fig2a": lambda: _fig2(2),
    "fig2b": lambda: _fig2(20),
    "fig2c": lambda: _fig2(150),
    "fig3": _fig3,
    "fig4a": lambda: _fig4(4),
    "fig4b": lambda: _fig4(10),
    "fig4c": lambda: _fig4(30),
    "fig4d": lambda: _fig4(3000),
    "trapping": _trapping,
}


def figure_preset(name):
    """All curves of a built-in figure panel, as validated ScenarioConfigs"""
    if name not in PRESETS:
        raise ValidationError(
            {"preset": [f"Unknown preset '{name}'; choose from {', '.join(PRESETS)}"]}
        )
    configs = []
    for raw in PRESETS[name]():
        raw["name"] = f"{name}-{raw['name']}"
        configs.append(build_config(raw))
    return configs
