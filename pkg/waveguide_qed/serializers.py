import re
from collections.abc import Mapping

from django.conf import settings
from django.core.exceptions import ValidationError
from rest_framework import serializers
from rest_framework.settings import api_settings

from .mode_physics import ModeIndex, WaveguideGeometry
from .models import (
    INITIAL_STATES,
    METHODS,
    TIME_UNITS,
    DistanceSpec,
    InitialState,
    OmegaSpec,
    ScenarioConfig,
    SolverSettings,
    SweepSpec,
    TimeGrid,
)

MIDPOINT_TAG = re.compile(r"^mid\((\d)(\d),\s*(\d)(\d)\)$")

SWEEP_PARAMETERS = (
    "atoms.omega_a",
    "atoms.coupling_d",
    "distance.length",
    "distance.lambda1",
    "distance.phase_n",
    "distance.phase_offset",
    "time.t_max",
)


class StrictSerializer(serializers.Serializer):
    """Rejects keys the schema does not know, so typos never pass silently"""

    def to_internal_value(self, data):
        if isinstance(data, Mapping):
            unknown = sorted(set(data) - set(self.fields))
            if unknown:
                raise serializers.ValidationError({key: ["Unknown key."] for key in unknown})
        return super().to_internal_value(data)


class OmegaField(serializers.Field):
    default_error_messages = {
        "invalid": "Expected a positive frequency or a midpoint tag like 'mid(11,31)'.",
    }

    def to_internal_value(self, data):
        if isinstance(data, str):
            match = MIDPOINT_TAG.match(data.strip())
            if match:
                m1, n1, m2, n2 = (int(group) for group in match.groups())
                return OmegaSpec(midpoint=(ModeIndex(m1, n1), ModeIndex(m2, n2)))
            try:
                data = float(data)
            except ValueError:
                self.fail("invalid")
        if isinstance(data, bool) or not isinstance(data, (int, float)) or data <= 0:
            self.fail("invalid")
        return OmegaSpec(value=float(data))

    def to_representation(self, value):
        return str(value)


class ModeListField(serializers.Field):
    default_error_messages = {
        "invalid": "Expected \"auto\" or a list of [m, n] index pairs.",
        "duplicate": "Duplicate mode.",
    }

    def to_internal_value(self, data):
        if data == "auto":
            return None
        if not isinstance(data, (list, tuple)) or not data:
            self.fail("invalid")
        modes = []
        for pair in data:
            if (
                not isinstance(pair, (list, tuple))
                or len(pair) != 2
                or not all(isinstance(index, int) and index >= 0 for index in pair)
            ):
                self.fail("invalid")
            if ModeIndex(*pair) in modes:
                self.fail("duplicate")
            modes.append(ModeIndex(*pair))
        return tuple(modes)

    def to_representation(self, value):
        if value is None:
            return "auto"
        return [[mode.m, mode.n] for mode in value]


class GeometrySerializer(StrictSerializer):
    a = serializers.FloatField(default=1.0)
    b = serializers.FloatField(required=False)

    def validate_a(self, value):
        if value <= 0:
            raise serializers.ValidationError("Waveguide width must be positive.")
        return value

    def validate_b(self, value):
        if value <= 0:
            raise serializers.ValidationError("Waveguide height must be positive.")
        return value


class AtomsSerializer(StrictSerializer):
    omega_a = OmegaField()
    coupling_d = serializers.FloatField()
    evanescent_margin = serializers.FloatField(required=False, min_value=0)

    def validate_coupling_d(self, value):
        if value <= 0:
            raise serializers.ValidationError("Coupling gamma1*lambda1/v1 must be positive.")
        return value


class DistanceSerializer(StrictSerializer):
    length = serializers.FloatField(required=False, min_value=0)
    lambda1 = serializers.FloatField(required=False, min_value=0)
    phase_n = serializers.IntegerField(required=False, min_value=0)
    phase_offset = serializers.FloatField(default=0.0)

    def validate(self, data):
        """Exactly one way of giving the separation"""
        try:
            DistanceSpec(**data).clean()
        except ValidationError as e:
            raise serializers.ValidationError(e.messages)
        return data


class InitialStateSerializer(StrictSerializer):
    state = serializers.ChoiceField(choices=INITIAL_STATES)
    b1_re = serializers.FloatField(default=0.0)
    b1_im = serializers.FloatField(default=0.0)
    b2_re = serializers.FloatField(default=0.0)
    b2_im = serializers.FloatField(default=0.0)

    def validate(self, data):
        try:
            _initial_state(data).clean()
        except ValidationError as e:
            raise serializers.ValidationError(e.messages)
        return data


class TimeGridSerializer(StrictSerializer):
    t_max = serializers.FloatField()
    unit = serializers.ChoiceField(choices=TIME_UNITS, default="tau1")
    samples = serializers.IntegerField(required=False, min_value=2)
    reference_lambda1 = serializers.FloatField(required=False)

    def validate_t_max(self, value):
        if value <= 0:
            raise serializers.ValidationError("Horizon must be positive.")
        return value

    def validate_reference_lambda1(self, value):
        if value <= 0:
            raise serializers.ValidationError("Reference separation must be positive.")
        return value


class SolverSerializer(StrictSerializer):
    step_fraction_tau = serializers.IntegerField(required=False, min_value=8)
    step_fraction_gamma = serializers.IntegerField(required=False, min_value=8)
    richardson_check = serializers.BooleanField(default=False)


class SweepSerializer(StrictSerializer):
    parameter = serializers.ChoiceField(choices=SWEEP_PARAMETERS)
    values = serializers.ListField(child=serializers.FloatField(), min_length=1)


class ScenarioSerializer(StrictSerializer):
    name = serializers.SlugField(default="scenario", max_length=100)
    methods = serializers.ChoiceField(choices=METHODS, default="both")
    modes = ModeListField(required=False)
    geometry = GeometrySerializer(required=False)
    atoms = AtomsSerializer()
    distance = DistanceSerializer()
    initial = InitialStateSerializer()
    time = TimeGridSerializer()
    solver = SolverSerializer(required=False)
    sweep = SweepSerializer(required=False)

    def validate(self, data):
        """Scenario-level checks shared with the built-in presets"""
        try:
            build_scenario(data).clean()
        except ValidationError as e:
            raise serializers.ValidationError(e.message_dict)
        return data

    def create(self, validated_data):
        return build_scenario(validated_data)


def _initial_state(data):
    return InitialState(
        state=data["state"],
        B1=complex(data.get("b1_re", 0.0), data.get("b1_im", 0.0)),
        B2=complex(data.get("b2_re", 0.0), data.get("b2_im", 0.0)),
    )


def build_scenario(data):
    """ScenarioConfig from validated serializer data, filling defaults from settings"""
    defaults = settings.WAVEGUIDE_QED
    atoms = data["atoms"]
    time = data["time"]
    solver = data.get("solver", {})
    sweep = data.get("sweep")

    return ScenarioConfig(
        name=data.get("name", "scenario"),
        geometry=WaveguideGeometry(**data.get("geometry", {})),
        omega=atoms["omega_a"],
        coupling_d=atoms["coupling_d"],
        evanescent_margin=atoms.get("evanescent_margin", defaults["EVANESCENT_MARGIN"]),
        distance=DistanceSpec(**data["distance"]),
        initial=_initial_state(data["initial"]),
        time=TimeGrid(
            t_max=time["t_max"],
            unit=time.get("unit", "tau1"),
            samples=time.get("samples", defaults["SAMPLES"]),
            reference_lambda1=time.get("reference_lambda1"),
        ),
        solver=SolverSettings(
            step_fraction_tau=solver.get("step_fraction_tau", defaults["STEP_FRACTION_TAU"]),
            step_fraction_gamma=solver.get("step_fraction_gamma", defaults["STEP_FRACTION_GAMMA"]),
            richardson_check=solver.get("richardson_check", False),
        ),
        modes=data.get("modes"),
        methods=data.get("methods", "both"),
        sweep=SweepSpec(sweep["parameter"], tuple(sweep["values"])) if sweep else None,
        source=data.get("source", {}),
    )


def flatten_errors(errors, prefix=""):
    """Serializer errors keyed by dotted scenario keys ('distance.lambda1')"""
    flat = {}
    for key, value in errors.items():
        if key == api_settings.NON_FIELD_ERRORS_KEY:
            dotted = prefix or "scenario"
        else:
            dotted = f"{prefix}.{key}" if prefix else str(key)
        if isinstance(value, Mapping):
            for nested_key, messages in flatten_errors(value, dotted).items():
                flat.setdefault(nested_key, []).extend(messages)
        else:
            flat.setdefault(dotted, []).extend(str(message) for message in value)
    return flat
