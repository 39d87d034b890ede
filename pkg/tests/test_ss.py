import random

from hypothesis import given, strategies as st

from wimaxsim.perception import AGGREGATE, INCREMENTAL
from wimaxsim.ss import (
    BACKOFF, IDLE, WAITING, RequestMixer, SsQueue, SubscriberStation,
    generate_request, spend_grant,
)


class ScriptedRng:
    """Returns scripted randrange values, for pinning backoff draws."""

    def __init__(self, values):
        self.values = list(values)

    def randrange(self, *args):
        return self.values.pop(0)


def pkt(size):
    return (0, 0, 0, size)


def make_station(queue_sizes=(), limit=50, mix="aggregate_only", k=50,
                 cw_min=8, cw_max=128, refresh=0):
    q = SsQueue("cid0", limit)
    station = SubscriberStation(0, [q], RequestMixer(mix, k), cw_min, cw_max,
                                20, refresh)
    for size in queue_sizes:
        station.enqueue("cid0", pkt(size))
    return station


class TestRequestMix:
    def test_aggregate_only(self):
        q = SsQueue("cid0", 50)
        q.backlog_bytes = 300
        req = generate_request(q, 0, RequestMixer("aggregate_only"))
        assert (req.kind, req.size) == (AGGREGATE, 300)

    def test_one_aggregate_per_k(self):
        q = SsQueue("cid0", 50)
        mixer = RequestMixer("per_k", 50)
        for i in range(49):
            req = generate_request(q, 100, mixer)
            assert (req.kind, req.size) == (INCREMENTAL, 100)
        q.backlog_bytes = 4000
        req = generate_request(q, 100, mixer)
        assert (req.kind, req.size) == (AGGREGATE, 4000)

    def test_counter_rolls_over(self):
        mixer = RequestMixer("per_k", 3)
        kinds = [mixer.next_kind() for _ in range(9)]
        assert kinds == [INCREMENTAL, INCREMENTAL, AGGREGATE] * 3


class TestContention:
    def test_zero_draw_transmits_in_slot_zero(self):
        station = make_station([100])
        station.maybe_generate(0, False, 100, ScriptedRng([0]))
        assert station.state == BACKOFF
        tx = station.contention_tick(0, 8, 100)
        assert tx is not None
        slot, req = tx
        assert slot == 0
        assert station.state == WAITING

    def test_countdown_consumes_slots_across_frames(self):
        station = make_station([100])
        station.maybe_generate(0, False, 100, ScriptedRng([11]))
        assert station.contention_tick(0, 8, 100) is None
        assert station.countdown == 3
        slot, _ = station.contention_tick(1, 8, 100)
        assert slot == 3

    def test_idle_station_stays_silent(self):
        station = make_station()
        assert station.contention_tick(0, 8, 0) is None
        station.maybe_generate(0, False, 0, ScriptedRng([0]))
        assert station.state == IDLE

    def test_aggregate_sized_at_transmission(self):
        station = make_station([100, 200])
        station.maybe_generate(0, False, 300, ScriptedRng([0]))
        station.enqueue("cid0", pkt(50))
        _, req = station.contention_tick(0, 8, 350)
        assert (req.kind, req.size) == (AGGREGATE, 350)

    def test_zero_byte_report_does_not_arm_timer(self):
        station = make_station([100])
        station.maybe_generate(0, False, 100, ScriptedRng([0]))
        _, req = station.contention_tick(0, 8, 0)
        assert req.size == 0
        assert station.state == IDLE


class TestReservationTimer:
    def armed_station(self):
        station = make_station([500])
        station.maybe_generate(0, False, 500, ScriptedRng([0]))
        station.contention_tick(0, 8, 500)
        assert station.state == WAITING
        return station

    def test_expiry_doubles_window(self):
        station = self.armed_station()
        assert not station.check_t16(19, random.Random(1))
        assert station.check_t16(20, random.Random(1))
        assert station.cw == 16
        assert station.state == BACKOFF
        assert station.req_kind == AGGREGATE
        assert station.t16_expirations == 1

    def test_truncation_at_cw_max(self):
        station = self.armed_station()
        station.cw = station.cw_max
        station.check_t16(20, random.Random(1))
        assert station.cw == station.cw_max

    def test_grant_one_frame_before_expiry_disarms(self):
        station = self.armed_station()
        station.cw = 32
        station.process_grant(19)
        assert station.state == IDLE
        assert station.cw == station.cw_min
        assert not station.check_t16(25, random.Random(1))
        assert station.t16_expirations == 0

    def test_window_sequence_monotone_and_capped(self):
        station = self.armed_station()
        seen = [station.cw]
        frame = 0
        for _ in range(10):
            frame += 20
            station.check_t16(frame, ScriptedRng([0] * 20))
            station.contention_tick(frame, 8, 500)
            seen.append(station.cw)
        assert all(b >= a for a, b in zip(seen, seen[1:]))
        assert max(seen) <= station.cw_max


class TestSpendGrant:
    def test_exact_fit(self):
        station = make_station([100])
        sent = spend_grant(station, 100)
        assert [(cid, p[-1]) for cid, p in sent] == [("cid0", 100)]
        assert station.wasted_grant_bytes == 0

    def test_priority_order(self):
        hi = SsQueue("hi", 50, priority=0)
        lo = SsQueue("lo", 50, priority=1)
        station = SubscriberStation(0, [lo, hi], RequestMixer("aggregate_only"),
                                    8, 128, 20)
        station.enqueue("hi", pkt(60))
        station.enqueue("lo", pkt(60))
        sent = spend_grant(station, 60)
        assert [cid for cid, _ in sent] == ["hi"]
        assert station.backlog() == 60

    def test_atomic_packet_wastes_small_grant(self):
        station = make_station([960])
        sent = spend_grant(station, 500)
        assert sent == []
        assert station.wasted_grant_bytes == 500
        assert station.backlog() == 960

    def test_empty_queue_grant_fully_wasted(self):
        station = make_station()
        assert spend_grant(station, 300) == []
        assert station.wasted_grant_bytes == 300

    @given(st.lists(st.integers(1, 2000), max_size=30), st.integers(0, 9000))
    def test_sent_bytes_bounded_by_grant(self, sizes, grant):
        station = make_station(sizes, limit=100)
        sent = spend_grant(station, grant)
        assert sum(p[-1] for _, p in sent) <= grant


class TestQueueConservation:
    @given(st.lists(st.tuples(st.booleans(), st.integers(1, 1500)), max_size=120),
           st.integers(1, 30))
    def test_enqueued_equals_sent_plus_dropped_plus_backlog(self, ops, limit):
        station = make_station(limit=limit)
        q = station.queues[0]
        for is_enqueue, size in ops:
            if is_enqueue:
                station.enqueue("cid0", pkt(size))
            else:
                spend_grant(station, size)
        assert q.enqueued_bytes == q.sent_bytes + q.dropped_bytes + q.backlog_bytes
        assert len(q) <= limit


class TestDropTail:
    def test_overflow_drops_arrival_and_keeps_unreported_consistent(self):
        station = make_station(limit=2)
        assert station.enqueue("cid0", pkt(10))
        assert station.enqueue("cid0", pkt(20))
        assert not station.enqueue("cid0", pkt(30))
        assert station.new_unreported == 30
        assert station.queues[0].drops == 1
