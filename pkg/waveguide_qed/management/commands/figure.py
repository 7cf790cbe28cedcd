from pathlib import Path

from django.conf import settings

from ...scenarios import PRESETS, figure_preset, run_scenario
from ..base import ScenarioCommand


class Command(ScenarioCommand):
    help = "Run every curve of a built-in figure preset"

    def add_arguments(self, parser):
        parser.add_argument("name", help=f"Preset name ({', '.join(PRESETS)})")
        parser.add_argument(
            "--methods", choices=("dde", "series", "both"), help="Override the preset methods"
        )
        super().add_arguments(parser)

    def perform(self, *args, **options):
        reports = []
        for config in figure_preset(options["name"]):
            config = self.apply_overrides(config, options)
            if options.get("methods"):
                config = config.with_overrides(methods=options["methods"])
            report = run_scenario(config, out_dir=options.get("out"))
            reports.append(report)
            self.say(str(report), self.style.SUCCESS)

        if options.get("plot"):
            from ...plotting import plot_concurrence

            out_dir = Path(options.get("out") or settings.WAVEGUIDE_QED["OUTPUT_DIR"])
            path = plot_concurrence(reports, out_dir / f"{options['name']}.png", title=options["name"])
            self.say(f"  wrote {path}")
