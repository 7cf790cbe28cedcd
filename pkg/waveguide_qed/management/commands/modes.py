from django.core.exceptions import ValidationError

from ...mode_physics import (
    AtomPairConfig,
    WaveguideGeometry,
    calibrate_coupling,
    list_coupled_modes,
    mode_params,
)
from ...serializers import AtomsSerializer, GeometrySerializer, flatten_errors
from ..base import ScenarioCommand


class Command(ScenarioCommand):
    help = "List the TM modes that couple to the TLSs at a given transition frequency"

    def add_arguments(self, parser):
        parser.add_argument("--a", type=float, default=1.0, help="Waveguide width")
        parser.add_argument("--b", type=float, help="Waveguide height (default a/2)")
        parser.add_argument(
            "--omega-a", required=True, help="Transition frequency, or a tag like mid(11,31)"
        )
        parser.add_argument(
            "--coupling-d", type=float, default=0.05, help="gamma1*lambda1/v1 of the TM11 mode"
        )
        parser.add_argument("--quiet", action="store_true", help="Only warnings and errors")

    def perform(self, *args, **options):
        geometry_data = {"a": options["a"]}
        if options.get("b") is not None:
            geometry_data["b"] = options["b"]
        geometry_serializer = GeometrySerializer(data=geometry_data)
        atoms_serializer = AtomsSerializer(
            data={"omega_a": options["omega_a"], "coupling_d": options["coupling_d"]}
        )
        errors = {}
        if not geometry_serializer.is_valid():
            errors.update(flatten_errors(geometry_serializer.errors, "geometry"))
        if not atoms_serializer.is_valid():
            errors.update(flatten_errors(atoms_serializer.errors, "atoms"))
        if errors:
            raise ValidationError(errors)

        geometry = WaveguideGeometry(**geometry_serializer.validated_data)
        omega_A = atoms_serializer.validated_data["omega_a"].resolve(geometry)
        modes = list_coupled_modes(geometry, omega_A)

        self.say(f"{len(modes)} coupled propagating mode(s) at omega_A={omega_A:.6g} in the {geometry}")
        if not modes:
            return

        coupling_scale = calibrate_coupling(options["coupling_d"], geometry, omega_A)
        atoms = AtomPairConfig(omega_A=omega_A, d=0.0, coupling_scale=coupling_scale)
        resolved = [mode_params(geometry, atoms, mode) for mode in modes]
        gamma1 = resolved[0].gamma

        self.say(f"{'mode':<6} {'Omega':>12} {'k0':>12} {'v':>12} {'gamma':>14} {'gamma/gamma1':>14}")
        for params in resolved:
            self.say(
                f"{str(params.mode):<6} {params.Omega:>12.6f} {params.k0:>12.6f} {params.v:>12.6f} "
                f"{params.gamma:>14.6e} {params.gamma / gamma1:>14.10f}"
            )
