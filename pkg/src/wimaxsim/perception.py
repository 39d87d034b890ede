"""Allocation table and the policies that keep it in (or out of) sync.

The base station tracks a perceived backlog per connection and updates it on
three kinds of events: bandwidth-request arrival, grant emission, and data
arrival.  Four interchangeable policies decide which events mutate the table:

* RPG   - reset the served station's entries to zero on every grant.
* DPG   - subtract the granted amount on grant emission (priority-ordered or
          pooled per station; identical for single-connection stations).
* DDA-i - subtract delivered bytes on data arrival; requests applied the
          moment they are received.
* DDA-d - like DDA-i, but request handling is deferred until just before the
          uplink scheduler runs.

Perceived backlogs never go negative: decrements clamp at zero and each clamp
is counted as a desynchronization event.
"""

from __future__ import annotations

import enum
import logging
from dataclasses import dataclass

from .config import ConfigError

log = logging.getLogger(__name__)

INCREMENTAL = "incremental"
AGGREGATE = "aggregate"


class PolicyKind(enum.Enum):
    RPG = "rpg"
    DPG_PRIORITY = "dpg_priority"
    DPG_GROUPED = "dpg_grouped"
    DDA_I = "dda_i"
    DDA_D = "dda_d"

    @classmethod
    def from_name(cls, name: str) -> "PolicyKind":
        key = name.strip().lower().replace("-", "_")
        if key == "dpg":
            # the grouped variant is the one exercised by the evaluation runs
            key = "dpg_grouped"
        for member in cls:
            if member.value == key:
                return member
        raise ConfigError(f"policy: unknown policy {name!r} "
                          f"(choose from {', '.join(m.value for m in cls)})")


@dataclass
class BwRequest:
    """A bandwidth request: connection, size in bytes, and update semantics."""
    cid: str
    size: int
    kind: str = INCREMENTAL
    arrival_frame: int = 0

    def __post_init__(self):
        if self.kind not in (INCREMENTAL, AGGREGATE):
            raise ValueError(f"unknown request kind {self.kind!r}")
        if self.kind == INCREMENTAL and self.size <= 0:
            raise ValueError("incremental requests must have positive size")
        if self.size < 0:
            raise ValueError("request size must be non-negative")


class AllocationTable:
    """Per-connection perceived backlog, with per-station totals kept hot.

    Connections are registered up front with their owning station and a
    priority rank (lower rank = higher QoS).  Station totals are maintained
    incrementally so the uplink scheduler never re-sums the table.
    """

    def __init__(self):
        self.entries: dict[str, int] = {}
        self.owner: dict[str, int] = {}
        self.priority: dict[str, int] = {}
        self.ss_cids: dict[int, list[str]] = {}
        self.ss_total: dict[int, int] = {}
        self.desync_clamps = 0
        self.protocol_errors = 0

    def add_connection(self, cid: str, ss: int, priority: int = 0) -> None:
        if cid in self.entries:
            raise ValueError(f"connection {cid!r} already registered")
        self.entries[cid] = 0
        self.owner[cid] = ss
        self.priority[cid] = priority
        cids = self.ss_cids.setdefault(ss, [])
        cids.append(cid)
        cids.sort(key=lambda c: self.priority[c])
        self.ss_total.setdefault(ss, 0)

    def perceived(self, cid: str) -> int:
        return self.entries[cid]

    def total(self, ss: int) -> int:
        return self.ss_total.get(ss, 0)

    def _set(self, cid: str, value: int) -> None:
        old = self.entries[cid]
        self.entries[cid] = value
        self.ss_total[self.owner[cid]] += value - old


def apply_request(table: AllocationTable, req: BwRequest, policy: PolicyKind,
                  pending_store: list[BwRequest]) -> None:
    """Apply a received request, or defer it when the policy demands.

    Under DDA-d the request is queued and the table is untouched until
    flush_pending() runs just before the uplink scheduler.  All other
    policies apply immediately: incremental adds, aggregate overwrites.
    """
    if req.cid not in table.entries:
        table.protocol_errors += 1
        log.warning("request for unknown connection %r discarded", req.cid)
        return
    if policy is PolicyKind.DDA_D:
        pending_store.append(req)
        return
    _apply(table, req)


def _apply(table: AllocationTable, req: BwRequest) -> None:
    if req.kind == INCREMENTAL:
        table._set(req.cid, table.entries[req.cid] + req.size)
    else:
        table._set(req.cid, req.size)


def flush_pending(table: AllocationTable, pending_store: list[BwRequest],
                  policy: PolicyKind) -> None:
    """Apply deferred requests in arrival order (DDA-d only; no-op otherwise)."""
    if policy is not PolicyKind.DDA_D:
        return
    for req in pending_store:
        if req.cid in table.entries:
            _apply(table, req)
        else:
            table.protocol_errors += 1
            log.warning("pending request for unknown connection %r discarded", req.cid)
    pending_store.clear()


def on_grant(table: AllocationTable, ss: int, granted: int, policy: PolicyKind) -> None:
    """Update the table when the scheduler emits a grant for a station."""
    if granted < 0:
        raise ValueError("granted must be non-negative")
    if policy is PolicyKind.RPG:
        # forget everything for the served station, granted or not
        for cid in table.ss_cids.get(ss, ()):
            table._set(cid, 0)
        return
    if policy in (PolicyKind.DPG_PRIORITY, PolicyKind.DPG_GROUPED):
        remaining = granted
        for cid in table.ss_cids.get(ss, ()):
            if remaining <= 0:
                break
            take = min(table.entries[cid], remaining)
            if take:
                table._set(cid, table.entries[cid] - take)
                remaining -= take
        if remaining > 0 and granted > 0:
            # granted more than the whole perception: an over-grant clamp
            table.desync_clamps += 1
        return
    # DDA policies react to data, not grants


def reclaim_unused(table: AllocationTable, ss: int, unused: int,
                   policy: PolicyKind) -> None:
    """Remove perception covered by an allocation that went (partly) unused.

    The BS watches its own UL-MAP regions: bytes it allocated that carried no
    decodable PDU can never be decremented by a data arrival, so under the
    data-arrival policies the corresponding perception would be re-granted
    forever.  Grant-based policies already account for grants at emission.
    """
    if unused <= 0 or policy not in (PolicyKind.DDA_I, PolicyKind.DDA_D):
        return
    remaining = unused
    for cid in table.ss_cids.get(ss, ()):
        if remaining <= 0:
            break
        take = min(table.entries[cid], remaining)
        if take:
            table._set(cid, table.entries[cid] - take)
            remaining -= take


def on_data_arrival(table: AllocationTable, cid: str, bytes_received: int,
                    policy: PolicyKind) -> None:
    """Decrease the perceived backlog when data actually arrives (DDA only)."""
    if bytes_received <= 0:
        raise ValueError("bytes_received must be positive")
    if cid not in table.entries:
        table.protocol_errors += 1
        log.warning("data arrival for unknown connection %r ignored", cid)
        return
    if policy in (PolicyKind.DDA_I, PolicyKind.DDA_D):
        entry = table.entries[cid]
        if bytes_received > entry:
            table.desync_clamps += 1
            table._set(cid, 0)
        else:
            table._set(cid, entry - bytes_received)


# --- replay harness --------------------------------------------------------

class TraceParseError(ValueError):
    """Raised with the offending line number when a trace script is malformed."""


@dataclass
class TraceRow:
    frame: int
    event: str
    perceived: int
    actual: int
    per_cid: tuple[tuple[str, int, int], ...]

    def to_line(self) -> str:
        cids = ",".join(f"{c}:{p}/{a}" for c, p, a in self.per_cid)
        return (f"{self.frame} {self.event} perceived={self.perceived} "
                f"actual={self.actual} cids={cids}")


@dataclass
class TraceResult:
    rows: list[TraceRow]
    perceived: int
    actual: int
    stall: bool
    desync_clamps: int

    def to_lines(self) -> list[str]:
        lines = [row.to_line() for row in self.rows]
        lines.append(f"final perceived={self.perceived} actual={self.actual} "
                     f"stall={int(self.stall)} desync_clamps={self.desync_clamps}")
        return lines


def _parse_trace(lines) -> list[tuple[int, int, str, list[str]]]:
    """Parse 'frame event args...' lines; returns (lineno, frame, event, args)."""
    events = []
    last_frame = -1
    for lineno, raw in enumerate(lines, start=1):
        stripped = raw.split("#", 1)[0].strip()
        if not stripped:
            continue
        parts = stripped.split()
        if parts[0] == "cid":
            # connection declaration: cid <name> <priority>
            if len(parts) != 3:
                raise TraceParseError(f"line {lineno}: expected 'cid <name> <priority>'")
            try:
                int(parts[2])
            except ValueError:
                raise TraceParseError(f"line {lineno}: priority must be an integer") from None
            events.append((lineno, -1, "cid", parts[1:]))
            continue
        try:
            frame = int(parts[0])
        except ValueError:
            raise TraceParseError(f"line {lineno}: frame must be an integer, got {parts[0]!r}") from None
        if frame < last_frame:
            raise TraceParseError(f"line {lineno}: frames must be non-decreasing")
        last_frame = frame
        if len(parts) < 2:
            raise TraceParseError(f"line {lineno}: missing event name")
        events.append((lineno, frame, parts[1], parts[2:]))
    return events


def replay_trace(lines, policy: PolicyKind) -> TraceResult:
    """Drive the table with a scripted event sequence and record the timeline.

    Events model a single station talking to the BS:

    * ``cid <name> <priority>``          declare a connection
    * ``<f> enqueue <cid> <bytes>``      bytes join the station's queue
    * ``<f> request <cid> <agg|incr> <bytes>``  a request reaches the BS
    * ``<f> grant <bytes>``              the scheduler emits a grant
    * ``<f> data <cid> <bytes>``         granted bytes are delivered
    * ``<f> scheduler_tick``             deferred requests are flushed

    Each event appends a (perceived, actual) snapshot; the final summary
    carries a stall flag (perception empty while the queue is not).
    """
    table = AllocationTable()
    actual: dict[str, int] = {}
    pending: list[BwRequest] = []
    rows: list[TraceRow] = []
    ss = 0

    def ensure_cid(cid: str, lineno: int):
        if cid not in table.entries:
            raise TraceParseError(f"line {lineno}: unknown connection {cid!r} "
                                  "(declare it with a 'cid' line)")

    def snapshot(frame: int, event: str):
        per_cid = tuple((c, table.entries[c], actual[c]) for c in sorted(actual))
        rows.append(TraceRow(frame, event, table.total(ss), sum(actual.values()), per_cid))

    for lineno, frame, event, args in _parse_trace(lines):
        if event == "cid":
            name, prio = args
            table.add_connection(name, ss, int(prio))
            actual[name] = 0
            continue
        if event == "enqueue":
            if len(args) != 2:
                raise TraceParseError(f"line {lineno}: expected 'enqueue <cid> <bytes>'")
            cid, size = args[0], _int_arg(args[1], lineno)
            ensure_cid(cid, lineno)
            actual[cid] += size
            snapshot(frame, f"enqueue {cid} {size}")
        elif event == "request":
            if len(args) != 3:
                raise TraceParseError(f"line {lineno}: expected 'request <cid> <agg|incr> <bytes>'")
            cid, kind_name, size = args[0], args[1], _int_arg(args[2], lineno)
            ensure_cid(cid, lineno)
            kind = {"agg": AGGREGATE, "aggregate": AGGREGATE,
                    "incr": INCREMENTAL, "incremental": INCREMENTAL}.get(kind_name)
            if kind is None:
                raise TraceParseError(f"line {lineno}: unknown request kind {kind_name!r}")
            apply_request(table, BwRequest(cid, size, kind, frame), policy, pending)
            snapshot(frame, f"request {cid} {kind_name} {size}")
        elif event == "grant":
            if len(args) != 1:
                raise TraceParseError(f"line {lineno}: expected 'grant <bytes>'")
            size = _int_arg(args[0], lineno)
            on_grant(table, ss, size, policy)
            snapshot(frame, f"grant {size}")
        elif event == "data":
            if len(args) != 2:
                raise TraceParseError(f"line {lineno}: expected 'data <cid> <bytes>'")
            cid, size = args[0], _int_arg(args[1], lineno)
            ensure_cid(cid, lineno)
            if size > actual[cid]:
                raise TraceParseError(f"line {lineno}: data {size} exceeds queued {actual[cid]}")
            actual[cid] -= size
            on_data_arrival(table, cid, size, policy)
            snapshot(frame, f"data {cid} {size}")
        elif event == "scheduler_tick":
            flush_pending(table, pending, policy)
            snapshot(frame, "scheduler_tick")
        else:
            raise TraceParseError(f"line {lineno}: unknown event {event!r}")

    perceived = table.total(ss)
    total_actual = sum(actual.values())
    return TraceResult(
        rows=rows,
        perceived=perceived,
        actual=total_actual,
        stall=(perceived == 0 and total_actual > 0),
        desync_clamps=table.desync_clamps,
    )


def _int_arg(raw: str, lineno: int) -> int:
    try:
        val = int(raw)
    except ValueError:
        raise TraceParseError(f"line {lineno}: expected an integer, got {raw!r}") from None
    if val < 0:
        raise TraceParseError(f"line {lineno}: byte counts must be non-negative")
    return val


def replay_trace_file(path: str, policy: PolicyKind) -> TraceResult:
    with open(path, "r", encoding="utf-8") as fh:
        return replay_trace(fh.read().splitlines(), policy)
