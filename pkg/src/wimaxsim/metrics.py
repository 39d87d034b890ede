"""Run metrics: throughput, collision probability, T16 rate, diagnostics.

Counters accumulate for the whole run; a snapshot taken at the end of the
warm-up window is subtracted at report time so every reported number covers
the same measurement window.
"""

from __future__ import annotations

import io
from dataclasses import dataclass, field


def aggregated_throughput(per_flow_goodput_bytes: list[int], window_s: float) -> float:
    """Sum of delivered payload bits over the measurement window, in bit/s."""
    if window_s <= 0:
        raise ValueError("measurement window must be positive")
    return sum(per_flow_goodput_bytes) * 8.0 / window_s


def collision_probability(collided_tx: int, total_tx: int) -> float:
    """Fraction of individual request transmissions that collided."""
    if collided_tx < 0 or total_tx < collided_tx:
        raise ValueError("need total_tx >= collided_tx >= 0")
    return collided_tx / total_tx if total_tx else 0.0


def t16_rate(expirations: int, n_ss: int, window_s: float) -> float:
    """Mean reservation-timeout expirations per station per second."""
    if n_ss <= 0 or window_s <= 0:
        raise ValueError("n_ss and window must be positive")
    return expirations / (n_ss * window_s)


@dataclass
class Counters:
    """Mutable per-run tallies; snapshot() freezes a copy for warm-up math."""
    attempts: int = 0
    collided: int = 0
    active_periods: int = 0
    collided_periods: int = 0
    t16_expirations: int = 0
    wasted_grant_bytes: int = 0
    desync_clamps: int = 0
    drops: int = 0
    delivered_per_flow: list[int] = field(default_factory=list)

    def snapshot(self) -> "Counters":
        return Counters(self.attempts, self.collided, self.active_periods,
                        self.collided_periods, self.t16_expirations,
                        self.wasted_grant_bytes, self.desync_clamps,
                        self.drops, list(self.delivered_per_flow))


@dataclass(frozen=True)
class SimulationReport:
    """Immutable result of one run; safe to ship across processes."""
    scenario: str
    policy: str
    n_ss: int
    seed: int
    frames: int
    duration_s: float
    window_s: float
    queue_limit: int
    p_loss: float
    throughput_bps: float
    collision_prob: float
    collision_prob_periods: float
    t16_rate: float
    desync_events: int
    wasted_grant_bytes: int
    drops: int
    per_flow_goodput_bps: tuple[float, ...]
    attempts: int = 0
    collided: int = 0
    t16_expirations: int = 0
    event_log: tuple[str, ...] | None = None


CSV_HEADER = ("scenario,policy,n_ss,seed,queue_limit,p_loss,throughput_bps,"
              "collision_prob,t16_rate,desync_events,wasted_grant_bytes,drops,"
              "collision_prob_periods")


def _fmt(x: float) -> str:
    return f"{x:.10g}"


def csv_row(report: SimulationReport) -> str:
    return ",".join([
        report.scenario,
        report.policy,
        str(report.n_ss),
        str(report.seed),
        str(report.queue_limit),
        _fmt(report.p_loss),
        _fmt(report.throughput_bps),
        _fmt(report.collision_prob),
        _fmt(report.t16_rate),
        str(report.desync_events),
        str(report.wasted_grant_bytes),
        str(report.drops),
        _fmt(report.collision_prob_periods),
    ])


def write_csv(reports, out) -> None:
    """Write reports as CSV (header always included, UTF-8, '.' decimals)."""
    if isinstance(out, (str, bytes)):
        with open(out, "w", encoding="utf-8", newline="") as fh:
            write_csv(reports, fh)
        return
    out.write(CSV_HEADER + "\n")
    for report in reports:
        out.write(csv_row(report) + "\n")


def csv_text(reports) -> str:
    buf = io.StringIO()
    write_csv(reports, buf)
    return buf.getvalue()
