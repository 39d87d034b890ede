"""Render sweep trend figures next to the CSV output.

One three-panel figure per sweep: aggregated throughput, request collision
probability, and reservation-timeout rate against the swept axis, one line
per policy, seed-averaged.
"""

from __future__ import annotations

from collections import defaultdict

import matplotlib
matplotlib.use("Agg")
import matplotlib.pyplot as plt

from .metrics import SimulationReport

_AXIS_ATTR = {
    "n_ss": "n_ss",
    "bs_queue_limit": "queue_limit",
    "p_loss_bad": "p_loss",
}

_PANELS = (
    ("throughput_bps", "Aggregated throughput (bit/s)"),
    ("collision_prob", "Request collision probability"),
    ("t16_rate", "Timeout expirations (1/s per SS)"),
)


def axis_value(report: SimulationReport, axis_key: str):
    attr = _AXIS_ATTR.get(axis_key)
    if attr is None:
        return None
    return getattr(report, attr)


def render_sweep_figure(reports: list[SimulationReport], axis_key: str,
                        out_path: str,
                        axis_values: list | None = None) -> str:
    """Write the trend figure for a sweep; returns the written path.

    When the axis key has no corresponding report column, per-report axis
    values must be supplied in report order.
    """
    values = axis_values
    if values is None:
        values = [axis_value(r, axis_key) for r in reports]
        if any(v is None for v in values):
            raise ValueError(f"axis {axis_key!r} is not recoverable from reports; "
                             "pass axis_values explicitly")
    # policy -> x -> list of metric values over seeds
    series: dict[str, dict] = {}
    for report, x in zip(reports, values):
        per_x = series.setdefault(report.policy, defaultdict(lambda: ([], [], [])))
        bucket = per_x[x]
        bucket[0].append(report.throughput_bps)
        bucket[1].append(report.collision_prob)
        bucket[2].append(report.t16_rate)

    fig, axes = plt.subplots(1, 3, figsize=(13.5, 4.0))
    for panel, (ax, (_, label)) in enumerate(zip(axes, _PANELS)):
        for policy, per_x in series.items():
            xs = sorted(per_x)
            ys = [sum(per_x[x][panel]) / len(per_x[x][panel]) for x in xs]
            ax.plot(xs, ys, marker="o", label=policy)
        ax.set_xlabel(axis_key)
        ax.set_ylabel(label)
        ax.grid(True, alpha=0.3)
    axes[0].legend()
    fig.tight_layout()
    fig.savefig(out_path, dpi=120)
    plt.close(fig)
    return out_path
