import logging

from django.core.exceptions import ValidationError
from django.core.management.base import BaseCommand, CommandError

from ..exceptions import SolverError

EXIT_VALIDATION = 1
EXIT_NUMERICAL = 2
EXIT_TOLERANCE = 3


def format_validation_error(error):
    if hasattr(error, "error_dict"):
        return "\n".join(
            f"{key}: {' '.join(messages)}" for key, messages in sorted(error.message_dict.items())
        )
    return " ".join(error.messages)


class ScenarioCommand(BaseCommand):
    """
    Shared flags and error-to-exit-code translation for the simulation
    commands. Subclasses implement `perform`.
    """

    def add_arguments(self, parser):
        parser.add_argument("--out", help="Directory for CSV and plot files")
        parser.add_argument("--plot", action="store_true", help="Render concurrence plots")
        parser.add_argument("--step-fraction-tau", type=int, help="Steps per shortest delay")
        parser.add_argument("--step-fraction-gamma", type=int, help="Steps per 1/gamma")
        parser.add_argument("--t-max", type=float, help="Horizon, in the scenario's time unit")
        parser.add_argument("--samples", type=int, help="Output grid points")
        parser.add_argument("--quiet", action="store_true", help="Only warnings and errors")

    def apply_overrides(self, config, options):
        if options.get("samples") is not None and options["samples"] < 2:
            raise ValidationError({"samples": ["Need at least 2 output samples"]})
        if options.get("t_max") is not None and options["t_max"] <= 0:
            raise ValidationError({"t_max": ["Horizon must be positive"]})
        return config.with_overrides(
            t_max=options.get("t_max"),
            samples=options.get("samples"),
            step_fraction_tau=options.get("step_fraction_tau"),
            step_fraction_gamma=options.get("step_fraction_gamma"),
        )

    def say(self, message, style=None):
        if not self.quiet:
            self.stdout.write(style(message) if style else message)

    def handle(self, *args, **options):
        self.quiet = options.get("quiet", False)
        package_logger = logging.getLogger("waveguide_qed")
        previous_level = package_logger.level
        if self.quiet:
            package_logger.setLevel(logging.WARNING)

        try:
            return self.perform(*args, **options)
        except ValidationError as e:
            raise CommandError(format_validation_error(e), returncode=EXIT_VALIDATION)
        except SolverError as e:
            raise CommandError(f"Numerical failure: {e}", returncode=EXIT_NUMERICAL)
        except ValueError as e:
            raise CommandError(str(e), returncode=EXIT_VALIDATION)
        finally:
            package_logger.setLevel(previous_level)

    def perform(self, *args, **options):
        raise NotImplementedError("subclasses of ScenarioCommand must provide a perform() method")
