"""Base-station MAC: contention resolution and the two round-robin schedulers.

Grants are per station and carry whole bytes; downlink allocations are whole
packets.  Both schedulers share the round-robin discipline: an entity left
partially served waits a whole round, which falls out of advancing the cursor
past the last entity that received anything.
"""

from __future__ import annotations

from collections import deque
from dataclasses import dataclass

from .perception import AllocationTable, BwRequest, PolicyKind, on_grant


@dataclass
class Grant:
    ss: int
    size: int
    effective_frame: int

    def __post_init__(self):
        if self.size <= 0:
            raise ValueError("grant size must be positive")


class DlQueue:
    """Drop-tail FIFO of downlink packets for one connection."""

    __slots__ = ("cid", "packets", "limit", "drops", "enqueued", "dequeued")

    def __init__(self, cid: str, limit: int):
        self.cid = cid
        self.packets: deque = deque()
        self.limit = limit
        self.drops = 0
        self.enqueued = 0
        self.dequeued = 0

    def __len__(self):
        return len(self.packets)


def enqueue_dl(q: DlQueue, packet) -> bool:
    """Append a packet unless the queue is full; drops count the arrival."""
    if len(q.packets) >= q.limit:
        q.drops += 1
        return False
    q.packets.append(packet)
    q.enqueued += 1
    return True


def resolve_contention(slot_transmissions: dict[int, list[BwRequest]],
                       channel=None) -> tuple[list[BwRequest], int, int]:
    """Decide the fate of one frame's contention-slot transmissions.

    A request is delivered iff it is alone in its slot and survives the
    channel.  Returns (delivered, collided_attempts, total_attempts); the
    senders get no feedback either way.
    """
    delivered: list[BwRequest] = []
    collided = 0
    total = 0
    for slot in sorted(slot_transmissions):
        reqs = slot_transmissions[slot]
        n = len(reqs)
        total += n
        if n > 1:
            collided += n
            continue
        if channel is None or channel.transmit():
            delivered.append(reqs[0])
    return delivered, collided, total


def ul_schedule(table: AllocationTable, ul_capacity: int, ss_order: list[int],
                cursor: int, policy: PolicyKind, effective_frame: int = 0,
                in_flight: list[int] | None = None,
                quantum: int = 0) -> tuple[list[Grant], int]:
    """Grant uplink bytes round-robin from the perceived backlogs.

    Each station with positive total perception receives
    min(perceived, remaining capacity), optionally capped by a per-visit
    quantum (0 = uncapped full-demand grants); the policy's grant hook runs
    per grant.  The cursor advances past the last station that received
    bytes, so a partially served station is visited last next round.

    Under the data-arrival policies the table stays high until the granted
    bytes are actually delivered, so with a pipelined MAP the scheduler nets
    out its own not-yet-consumed allocations (``in_flight``, indexed by
    station) instead of granting the same perception twice.  The grant-based
    policies fold grants into the table themselves and take no offset.
    """
    remaining = ul_capacity
    n = len(ss_order)
    if n == 0 or remaining <= 0:
        return [], cursor
    data_arrival = policy in (PolicyKind.DDA_I, PolicyKind.DDA_D)
    totals = table.ss_total
    granted: dict[int, int] = {}
    last_idx = -1
    # quantum-sized rounds until the frame fills or demand runs out; grants
    # to the same station merge into one MAP entry
    while remaining > 0:
        progressed = False
        for step in range(n):
            idx = (cursor + step) % n
            ss = ss_order[idx]
            want = totals.get(ss, 0)
            if data_arrival:
                # the table only shrinks when data arrives, so subtract what
                # this pass and the pipeline have already allocated
                want -= granted.get(ss, 0)
                if in_flight is not None:
                    want -= in_flight[ss]
            if want <= 0:
                continue
            size = want if want <= remaining else remaining
            if quantum and size > quantum:
                size = quantum
            granted[ss] = granted.get(ss, 0) + size
            on_grant(table, ss, size, policy)
            remaining -= size
            progressed = True
            last_idx = idx
            if remaining <= 0:
                break
        if not progressed:
            break
    grants = [Grant(ss, size, effective_frame) for ss, size in granted.items()]
    new_cursor = (last_idx + 1) % n if last_idx >= 0 else cursor
    return grants, new_cursor


def dl_schedule(queues: list[DlQueue], dl_capacity: int,
                cursor: int) -> tuple[list[tuple[str, list]], int]:
    """Fill the downlink subframe round-robin over connection queues.

    The selected queue is drained until it empties or the next packet no
    longer fits; in the latter case scheduling stops for this frame and the
    partially served connection waits a whole round.
    """
    alloc: list[tuple[str, list]] = []
    remaining = dl_capacity
    n = len(queues)
    if n == 0 or remaining <= 0:
        return alloc, cursor
    last_idx = -1
    for step in range(n):
        idx = (cursor + step) % n
        q = queues[idx]
        pkts = q.packets
        if not pkts:
            continue
        taken = []
        while pkts and pkts[0][-1] <= remaining:
            pkt = pkts.popleft()
            remaining -= pkt[-1]
            taken.append(pkt)
        if taken:
            q.dequeued += len(taken)
            alloc.append((q.cid, taken))
            last_idx = idx
        if pkts:
            # head no longer fits: the subframe is full for this frame; a
            # queue that received nothing is not charged with a round wait
            break
    new_cursor = (last_idx + 1) % n if last_idx >= 0 else cursor
    return alloc, new_cursor
