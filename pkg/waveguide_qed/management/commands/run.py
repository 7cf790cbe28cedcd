from ...scenarios import load_config, run_scenario
from ..base import ScenarioCommand


class Command(ScenarioCommand):
    help = "Run one scenario file with its configured methods and write the trajectories"

    def add_arguments(self, parser):
        parser.add_argument("config", help="Path to a TOML scenario file")
        parser.add_argument(
            "--methods", choices=("dde", "series", "both"), help="Override the configured methods"
        )
        super().add_arguments(parser)

    def perform(self, *args, **options):
        config = self.apply_overrides(load_config(options["config"]), options)
        if options.get("methods"):
            config = config.with_overrides(methods=options["methods"])

        report = run_scenario(config, out_dir=options.get("out"), plot=options.get("plot", False))
        self.say(str(report), self.style.SUCCESS)
        for params in report.modes:
            self.say(f"  {params}")
        for path in report.outputs:
            self.say(f"  wrote {path}")
