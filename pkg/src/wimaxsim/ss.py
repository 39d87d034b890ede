"""Subscriber-station MAC: transmit queues, request generation, contention.

A station runs one contention process: at most one request is being backed
off or awaiting a grant at any time.  A new request is generated when the
station is idle and either fresh bytes arrived since the last request, or a
grant is being spent this frame and backlog remains afterwards.  The request
kind follows the configured mix; an incremental carries the yet-unreported
bytes, an aggregate reports the whole queue backlog net of the bytes being
sent with the current frame's grant (the request goes out in the contention
region, before the uplink burst).

Losing a request is silent: the reservation timer expires after no grant has
arrived for T16, the contention window doubles (truncated), and a fresh
aggregate re-enters contention.  Any grant to the station disarms the timer
and resets the window.
"""

from __future__ import annotations

import random
from collections import deque

from .perception import AGGREGATE, INCREMENTAL, BwRequest

IDLE = 0
BACKOFF = 1
WAITING = 2


class SsQueue:
    """Drop-tail FIFO of uplink packets for one connection."""

    __slots__ = ("cid", "priority", "packets", "limit", "backlog_bytes",
                 "enqueued_bytes", "sent_bytes", "dropped_bytes", "drops")

    def __init__(self, cid: str, limit: int, priority: int = 0):
        self.cid = cid
        self.priority = priority
        self.packets: deque = deque()
        self.limit = limit
        self.backlog_bytes = 0
        self.enqueued_bytes = 0
        self.sent_bytes = 0
        self.dropped_bytes = 0
        self.drops = 0

    def __len__(self):
        return len(self.packets)


class RequestMixer:
    """Chooses incremental vs aggregate per the configured mix policy."""

    __slots__ = ("mode", "every_k", "count")

    def __init__(self, mode: str, every_k: int = 50):
        self.mode = mode
        self.every_k = every_k
        self.count = 0

    def next_kind(self) -> str:
        if self.mode == "aggregate_only":
            return AGGREGATE
        if self.mode == "incremental_only":
            return INCREMENTAL
        self.count += 1
        if self.count >= self.every_k:
            self.count = 0
            return AGGREGATE
        return INCREMENTAL


class SubscriberStation:
    """One station's queues plus its request/contention state machine."""

    __slots__ = ("ss_id", "queues", "queue_by_cid", "mixer", "cw", "cw_min",
                 "cw_max", "t16_frames", "refresh_frames", "new_unreported",
                 "state", "req_kind", "req_size", "req_cid", "countdown",
                 "armed_frame", "last_service_frame", "retries",
                 "t16_expirations", "wasted_grant_bytes")

    def __init__(self, ss_id: int, queues: list[SsQueue], mixer: RequestMixer,
                 cw_min: int, cw_max: int, t16_frames: int,
                 refresh_frames: int = 0):
        self.ss_id = ss_id
        self.queues = sorted(queues, key=lambda q: q.priority)
        self.queue_by_cid = {q.cid: q for q in self.queues}
        self.mixer = mixer
        self.cw = cw_min
        self.cw_min = cw_min
        self.cw_max = cw_max
        self.t16_frames = t16_frames
        self.refresh_frames = refresh_frames
        self.new_unreported = 0
        self.state = IDLE
        self.req_kind = AGGREGATE
        self.req_size = 0
        self.req_cid = queues[0].cid if queues else "cid0"
        self.countdown = 0
        self.armed_frame = 0
        self.last_service_frame = 0
        self.retries = 0
        self.t16_expirations = 0
        self.wasted_grant_bytes = 0

    # --- queueing --------------------------------------------------------

    def backlog(self) -> int:
        return sum(q.backlog_bytes for q in self.queues)

    def enqueue(self, cid: str, packet) -> bool:
        """Drop-tail enqueue; accepted bytes count toward the next request."""
        q = self.queue_by_cid[cid]
        wire = packet[-1]
        q.enqueued_bytes += wire
        if len(q.packets) >= q.limit:
            q.drops += 1
            q.dropped_bytes += wire
            return False
        q.packets.append(packet)
        q.backlog_bytes += wire
        self.new_unreported += wire
        return True

    # --- spending grants ---------------------------------------------------

    def plan_spend(self, grant_bytes: int) -> tuple[int, list[int]]:
        """Decide what a grant will carry: (bytes, packet count per queue).

        Queues drain in priority order, FIFO within a queue, whole packets
        only; planning stops at the first packet that does not fit so the
        burst preserves transmit order.
        """
        remaining = grant_bytes
        counts = []
        total = 0
        for q in self.queues:
            cnt = 0
            for pkt in q.packets:
                wire = pkt[-1]
                if wire > remaining:
                    counts.append(cnt)
                    return total, counts
                remaining -= wire
                total += wire
                cnt += 1
            counts.append(cnt)
        return total, counts

    def execute_spend(self, grant_bytes: int, planned_bytes: int,
                      counts: list[int]) -> list[tuple[str, object]]:
        """Pop the planned packets; the unusable remainder is counted wasted.

        Bytes that were enqueued but never reported in any request are
        consumed oldest-first, so the unreported counter only shrinks when a
        burst eats into bytes no request has covered yet.
        """
        out = []
        for q, cnt in zip(self.queues, counts):
            pop = q.packets.popleft
            for _ in range(cnt):
                pkt = pop()
                q.backlog_bytes -= pkt[-1]
                q.sent_bytes += pkt[-1]
                out.append((q.cid, pkt))
        self.wasted_grant_bytes += grant_bytes - planned_bytes
        # unreported bytes are the newest in FIFO order, so after a burst at
        # most the remaining backlog can still be unreported
        remaining = self.backlog()
        if self.new_unreported > remaining:
            self.new_unreported = remaining
        return out

    # --- contention state machine ---------------------------------------

    def process_grant(self, frame: int = 0) -> None:
        """Any grant covers the station: disarm the timer, reset the window."""
        if self.state == WAITING:
            self.state = IDLE
        self.cw = self.cw_min
        self.retries = 0
        self.last_service_frame = frame

    def check_t16(self, frame: int, rng: random.Random) -> bool:
        """Expire the reservation timer; re-enter contention with an aggregate."""
        if self.state == WAITING and frame - self.armed_frame >= self.t16_frames:
            self.t16_expirations += 1
            self.retries += 1
            self.cw = min(self.cw * 2, self.cw_max)
            self.req_kind = AGGREGATE
            self.req_cid = self.queues[0].cid
            self.state = BACKOFF
            self.countdown = rng.randrange(self.cw)
            return True
        return False

    def maybe_generate(self, frame: int, has_grant: bool, post_backlog: int,
                       rng: random.Random) -> None:
        """Create a new request when idle and there is something to report.

        Fresh bytes always justify a request; remaining backlog at a grant
        frame justifies one too, but with nothing new to report only an
        aggregate can carry it, so in the mixed modes the re-request waits
        for the mix's aggregate slot.  The station cannot know whether the
        BS forgot its earlier asks; that opacity is the point.  A station
        sitting on backlog with no service at all re-reports it with an
        aggregate after refresh_frames, bounding any silent stall.
        """
        if self.state != IDLE:
            return
        new = self.new_unreported
        stale = (self.refresh_frames > 0 and post_backlog > 0
                 and frame - self.last_service_frame >= self.refresh_frames)
        if new <= 0 and not (has_grant and post_backlog > 0) and not stale:
            return
        nudge = 0
        mode = self.mixer.mode
        if mode == "aggregate_only":
            kind = AGGREGATE
        elif stale and new <= 0 and not has_grant:
            # long unserved: probe with a minimal head-of-line ask rather
            # than re-reporting everything, which would double-count at a
            # BS that did keep track of the earlier requests
            kind = INCREMENTAL
            for q in self.queues:
                if q.packets:
                    nudge = q.packets[0][-1]
                    break
            if nudge == 0:
                return
        elif mode == "incremental_only":
            if new <= 0:
                return
            kind = INCREMENTAL
        elif new > 0:
            kind = self.mixer.next_kind()
        elif self.mixer.count + 1 >= self.mixer.every_k:
            self.mixer.count = 0
            kind = AGGREGATE
        else:
            return
        cid = self.queues[0].cid
        if kind == INCREMENTAL:
            for q in self.queues:
                if q.backlog_bytes > 0:
                    cid = q.cid
                    break
            self.req_size = nudge if nudge else new
        else:
            self.req_size = 0  # aggregates are sized at transmission time
        self.req_kind = kind
        self.req_cid = cid
        if not nudge:
            self.new_unreported = 0
        self.state = BACKOFF
        self.countdown = rng.randrange(self.cw)

    def contention_tick(self, frame: int, slots: int,
                        post_backlog: int) -> tuple[int, BwRequest] | None:
        """Advance the backoff; return (slot, request) when it lands here."""
        if self.state != BACKOFF:
            return None
        if self.countdown >= slots:
            self.countdown -= slots
            return None
        slot = self.countdown
        if self.req_kind == AGGREGATE:
            size = post_backlog
            self.new_unreported = 0
        else:
            size = self.req_size
        if size > 0:
            # only an actual ask reserves bandwidth and waits on the timer
            self.state = WAITING
            self.armed_frame = frame
        else:
            self.state = IDLE
        self.last_service_frame = frame
        return slot, BwRequest(self.req_cid, size, self.req_kind, frame)


def generate_request(queue: SsQueue, new_bytes: int, mixer: RequestMixer) -> BwRequest:
    """Standalone request factory following the mix policy.

    Incremental requests carry the newly arrived bytes; aggregates report the
    queue's current total backlog.
    """
    kind = mixer.next_kind()
    if kind == INCREMENTAL and new_bytes > 0:
        return BwRequest(queue.cid, new_bytes, INCREMENTAL)
    return BwRequest(queue.cid, queue.backlog_bytes, AGGREGATE)


def spend_grant(ss: SubscriberStation, grant_bytes: int) -> list[tuple[str, object]]:
    """Plan and execute a grant in one step (unit-test convenience)."""
    planned, counts = ss.plan_spend(grant_bytes)
    return ss.execute_spend(grant_bytes, planned, counts)
