from pathlib import Path

from django.conf import settings

from ...scenarios import expand_sweep, load_config, run_scenario
from ..base import ScenarioCommand


class Command(ScenarioCommand):
    help = "Run a scenario once per value of its [sweep] parameter"

    def add_arguments(self, parser):
        parser.add_argument("config", help="Path to a TOML scenario file with a [sweep] section")
        super().add_arguments(parser)

    def perform(self, *args, **options):
        base = load_config(options["config"])
        configs = expand_sweep(base)

        reports = []
        self.say(f"{base.sweep.parameter:<22}  gamma1*tau1  regime        final concurrence")
        for value, config in zip(base.sweep.values, configs):
            report = run_scenario(self.apply_overrides(config, options), out_dir=options.get("out"))
            reports.append(report)
            trajectory = report.trajectories.get("dde") or report.trajectories["series"]
            self.say(
                f"{value:<22g}  {report.gamma1_tau1:<11.4g}  {report.regime:<12}  "
                f"{trajectory.concurrence[-1]:.6f}"
            )

        if options.get("plot"):
            from ...plotting import plot_concurrence

            out_dir = Path(options.get("out") or settings.WAVEGUIDE_QED["OUTPUT_DIR"])
            path = plot_concurrence(reports, out_dir / f"{base.name}.png", title=base.sweep.parameter)
            self.say(f"  wrote {path}")
