import logging

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt  # noqa: E402

logger = logging.getLogger(__name__)


def plot_concurrence(reports, path, title=None):
    """Concurrence against t/tau1, one line per report (numerical solution preferred)"""
    fig, ax = plt.subplots(figsize=(7, 4))
    for report in reports:
        method = "dde" if "dde" in report.trajectories else next(iter(report.trajectories))
        trajectory = report.trajectories[method]
        ax.plot(trajectory.t_over_tau1, trajectory.concurrence, label=report.config.name)

    ax.set_xlabel("t / tau1")
    ax.set_ylabel("concurrence")
    ax.set_ylim(0.0, 1.05)
    if title:
        ax.set_title(title)
    ax.legend(fontsize="small")
    fig.savefig(path, bbox_inches="tight", dpi=150)
    plt.close(fig)

    logger.info("Wrote %s", path)
    return path
