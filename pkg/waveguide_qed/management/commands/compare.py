from django.core.management.base import CommandError

from ...scenarios import compare_methods, load_config
from ..base import EXIT_TOLERANCE, ScenarioCommand


class Command(ScenarioCommand):
    help = "Cross-check the delay-equation solver against the closed-form series"

    def add_arguments(self, parser):
        parser.add_argument("config", help="Path to a TOML scenario file")
        parser.add_argument("--tolerance", type=float, help="Largest accepted amplitude deviation")
        super().add_arguments(parser)

    def perform(self, *args, **options):
        config = self.apply_overrides(load_config(options["config"]), options)
        comparison = compare_methods(config, tolerance=options.get("tolerance"), out_dir=options.get("out"))
        if not comparison.passed:
            raise CommandError(str(comparison), returncode=EXIT_TOLERANCE)
        self.say(str(comparison), self.style.SUCCESS)
