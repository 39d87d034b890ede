"""Frame-clocked deterministic simulation core.

Each frame executes four phases in a fixed order: downlink delivery,
contention-slot transmissions, uplink bursts, and BS bookkeeping (deferred
request processing, scheduling, MAP emission).  Requests therefore always
reach the BS before the same frame's data, which is the race the perception
policies react to.  MAPs computed in phase 4 of frame k take effect in frame
k + map_latency (default one frame).

Runs are pure functions of (scenario, seed): a single random.Random drives
every stochastic choice in a fixed order, so equal inputs give bit-identical
reports and event logs.
"""

from __future__ import annotations

import enum
import random
from collections import deque
from dataclasses import dataclass

from . import bs as bs_mac
from . import perception
from .channel import GilbertElliotChannel, PhyProfile, average_loss, steady_state, subframe_capacities
from .config import ConfigError, ScenarioConfig
from .metrics import Counters, SimulationReport
from .perception import PolicyKind
from .ss import IDLE, RequestMixer, SsQueue, SubscriberStation
from .tcp import TcpReceiver, TcpSender, WiredLink


@dataclass
class FrameClock:
    """Integer frame counter; simulated time is frame_index * frame_duration."""
    frame_index: int = 0
    frame_duration: float = 0.005

    def advance(self) -> None:
        self.frame_index += 1


def now(clock: FrameClock) -> float:
    """Simulated time in seconds, exact at frame granularity."""
    return clock.frame_index * clock.frame_duration


class FramePhase(enum.IntEnum):
    DL_DELIVERY = 1
    CONTENTION = 2
    UL_DATA = 3
    BOOKKEEPING = 4


class _Simulation:
    """Mutable state for one run; built fresh per (scenario, seed)."""

    def __init__(self, cfg: ScenarioConfig, seed: int, collect_log: bool):
        if cfg.preset == "replay":
            raise ConfigError("preset: the replay preset is driven by the replay "
                              "command, not the engine")
        cfg.validate()
        self.cfg = cfg
        self.seed = seed
        self.policy = PolicyKind.from_name(cfg.policy)
        self.rng = random.Random(seed)
        self.clock = FrameClock(0, cfg.frame_duration_s)
        self.log: list[str] | None = [] if collect_log else None

        phy = PhyProfile.from_config(cfg)
        self.dl_cap, self.ul_cap = subframe_capacities(phy)

        def new_channel():
            return GilbertElliotChannel(cfg.p_loss_good, cfg.p_loss_bad,
                                        cfg.p_good_to_bad, cfg.p_bad_to_good,
                                        self.rng)
        n = cfg.n_ss
        if cfg.per_ss_channels:
            self.dl_chan = [new_channel() for _ in range(n)]
            self.ul_chan = [new_channel() for _ in range(n)]
        else:
            dl = new_channel()
            ul = new_channel()
            self.dl_chan = [dl] * n
            self.ul_chan = [ul] * n

        self.cid_names = [f"cid{i}" for i in range(n)]
        self.table = perception.AllocationTable()
        self.pending_store: list[perception.BwRequest] = []
        self.dl_queues: list[bs_mac.DlQueue] = []
        self.queue_for_flow: dict[int, bs_mac.DlQueue] = {}
        self.cid_to_ss: dict[str, int] = {}
        self.stations: list[SubscriberStation] = []
        self.senders: list[TcpSender] = []
        self.receivers: list[TcpReceiver] = []

        delack_frames = cfg.frames(cfg.delack_ms / 1000.0)
        rto_init = cfg.frames(cfg.rto_initial_ms / 1000.0)
        rto_min = cfg.frames(cfg.rto_min_ms / 1000.0)
        rto_max = cfg.frames(cfg.rto_max_s)

        for i in range(n):
            cid = f"cid{i}"
            self.table.add_connection(cid, i, 0)
            self.cid_to_ss[cid] = i
            dq = bs_mac.DlQueue(cid, cfg.bs_queue_limit)
            self.dl_queues.append(dq)
            self.queue_for_flow[i] = dq
            station = SubscriberStation(
                i, [SsQueue(cid, cfg.ss_queue_limit)],
                RequestMixer(cfg.request_mix, cfg.aggregate_every_k),
                cfg.cw_min, cfg.cw_max, cfg.t16_frames,
                cfg.request_refresh_frames)
            self.stations.append(station)
            self.senders.append(TcpSender(
                i, cfg.mss_bytes, cfg.header_bytes, cfg.rwnd_bytes,
                cfg.init_cwnd_segments, cfg.init_ssthresh_bytes,
                rto_init, rto_min, rto_max))
            self.receivers.append(TcpReceiver(i, cfg.header_bytes, delack_frames))

        self.download = cfg.direction == "download"
        self.wired_to_bs = WiredLink(cfg.wired_rate_bps, cfg.wired_delay_ms / 1000.0,
                                     cfg.frame_duration_s)
        self.wired_to_server = WiredLink(cfg.wired_rate_bps, cfg.wired_delay_ms / 1000.0,
                                         cfg.frame_duration_s)

        start_limit = cfg.frames(cfg.flow_start_window_s) if cfg.flow_start_window_s > 0 else 1
        starts = [(self.rng.randrange(max(1, start_limit)), i) for i in range(n)]
        self.pending_starts = deque(sorted(starts))

        latency = cfg.map_latency_frames
        self.grant_pipeline: deque[dict[int, int]] = deque({} for _ in range(latency))
        self.dl_pipeline: deque[list] = deque([] for _ in range(latency))
        self.ul_cursor = 0
        self.dl_cursor = 0
        self.counters = Counters(delivered_per_flow=[0] * n)
        self.warmup_snap: Counters | None = None
        self.warmup_frame = cfg.warmup_frames
        self.plans: list[tuple[int, int, list[int]]] = [(0, 0, [])] * n
        self.current_grants: dict[int, int] = {}
        self.current_dl: list = []
        self.in_flight: list[int] = [0] * n

    # --- packet routing ---------------------------------------------------

    def _to_bs_dl(self, pkt) -> None:
        bs_mac.enqueue_dl(self.queue_for_flow[pkt[0]], pkt)

    def _server_receive(self, pkt, frame: int) -> None:
        flow = pkt[0]
        if self.download:
            # cumulative ACK for a server-side sender
            for seg in self.senders[flow].on_ack(pkt[1], frame):
                self.wired_to_bs.push(frame, seg)
        else:
            ack = self.receivers[flow].on_segment(pkt[1], pkt[2], frame)
            if ack is not None:
                self.wired_to_bs.push(frame, ack)

    def _ss_receive(self, ss_idx: int, pkt, frame: int) -> None:
        if self.download:
            ack = self.receivers[ss_idx].on_segment(pkt[1], pkt[2], frame)
            if ack is not None:
                self.stations[ss_idx].enqueue(self.cid_names[ss_idx], ack)
        else:
            station = self.stations[ss_idx]
            cid = self.cid_names[ss_idx]
            for seg in self.senders[ss_idx].on_ack(pkt[1], frame):
                station.enqueue(cid, seg)

    def _start_flow(self, flow: int, frame: int) -> None:
        segs = self.senders[flow].start(frame)
        if self.download:
            for seg in segs:
                self.wired_to_bs.push(frame, seg)
        else:
            station = self.stations[flow]
            cid = self.cid_names[flow]
            for seg in segs:
                station.enqueue(cid, seg)

    # --- per-frame phases ---------------------------------------------------

    def _housekeeping(self, frame: int) -> None:
        if frame == self.warmup_frame:
            self._take_snapshot()
        self.current_grants = self.grant_pipeline.popleft()
        self.current_dl = self.dl_pipeline.popleft()
        wq = self.wired_to_bs.queue
        if wq and wq[0][0] <= frame:
            for pkt in self.wired_to_bs.pop_due(frame):
                self._to_bs_dl(pkt)
        wq = self.wired_to_server.queue
        if wq and wq[0][0] <= frame:
            for pkt in self.wired_to_server.pop_due(frame):
                self._server_receive(pkt, frame)
        starts = self.pending_starts
        while starts and starts[0][0] <= frame:
            self._start_flow(starts.popleft()[1], frame)
        for sender in self.senders:
            if 0 <= sender.rto_expiry <= frame:
                segs = sender.on_timeout(frame)
                if segs:
                    if self.log is not None:
                        self.log.append(f"f={frame} p=0 rto flow={sender.flow_id}")
                    if self.download:
                        for seg in segs:
                            self.wired_to_bs.push(frame, seg)
                    else:
                        station = self.stations[sender.flow_id]
                        cid = self.cid_names[sender.flow_id]
                        for seg in segs:
                            station.enqueue(cid, seg)
        for recv in self.receivers:
            if recv.pending > 0:
                ack = recv.delack_tick(frame)
                if ack is not None:
                    if self.download:
                        self.stations[recv.flow_id].enqueue(
                            self.cid_names[recv.flow_id], ack)
                    else:
                        self.wired_to_bs.push(frame, ack)

    def _phase_dl(self, frame: int) -> None:
        log = self.log
        cid_to_ss = self.cid_to_ss
        for cid, pkts in self.current_dl:
            ss_idx = cid_to_ss[cid]
            chan = self.dl_chan[ss_idx]
            ideal = chan.ideal
            for pkt in pkts:
                ok = True if ideal else chan.transmit()
                if log is not None:
                    log.append(f"f={frame} p=1 dl {cid} bytes={pkt[-1]} ok={int(ok)}")
                if ok:
                    self._ss_receive(ss_idx, pkt, frame)

    def _phase_contention(self, frame: int) -> None:
        slots = self.cfg.contention_slots
        refresh = self.cfg.request_refresh_frames
        rng = self.rng
        grants = self.current_grants
        slot_map: dict[int, list] = {}
        log = self.log
        counters = self.counters
        plans = self.plans
        for station in self.stations:
            g = grants.get(station.ss_id, 0)
            if g:
                station.process_grant(frame)
                planned, counts = station.plan_spend(g)
                plans[station.ss_id] = (g, planned, counts)
                post_backlog = station.backlog() - planned
            elif station.state == IDLE and station.new_unreported <= 0 and (
                    refresh == 0
                    or frame - station.last_service_frame < refresh
                    or station.backlog() == 0):
                continue
            else:
                post_backlog = station.backlog()
            if station.check_t16(frame, rng) and log is not None:
                log.append(f"f={frame} p=2 t16 ss={station.ss_id}")
            station.maybe_generate(frame, g > 0, post_backlog, rng)
            tx = station.contention_tick(frame, slots, post_backlog)
            if tx is not None:
                slot, req = tx
                slot_map.setdefault(slot, []).append(req)
                if log is not None:
                    log.append(f"f={frame} p=2 reqtx {req.cid} slot={slot} "
                               f"kind={req.kind} size={req.size}")
        if not slot_map:
            return
        # one shared uplink chain: sample sole-occupant requests in slot order
        cid_to_ss = self.cid_to_ss
        delivered = []
        collided = 0
        total = 0
        for slot in sorted(slot_map):
            reqs = slot_map[slot]
            k = len(reqs)
            total += k
            if k > 1:
                collided += k
                if log is not None:
                    log.append(f"f={frame} p=2 reqcol slot={slot} n={k}")
                continue
            req = reqs[0]
            if self.ul_chan[cid_to_ss[req.cid]].transmit():
                delivered.append(req)
                if log is not None:
                    log.append(f"f={frame} p=2 reqrx {req.cid} kind={req.kind} size={req.size}")
            elif log is not None:
                log.append(f"f={frame} p=2 reqlost {req.cid}")
        counters.attempts += total
        counters.collided += collided
        counters.active_periods += 1
        if collided:
            counters.collided_periods += 1
        policy = self.policy
        table = self.table
        pending = self.pending_store
        for req in delivered:
            perception.apply_request(table, req, policy, pending)

    def _phase_ul(self, frame: int) -> None:
        table = self.table
        policy = self.policy
        log = self.log
        wired = self.wired_to_server
        on_data = perception.on_data_arrival
        reclaim = perception.reclaim_unused
        for station in self.stations:
            g = self.current_grants.get(station.ss_id, 0)
            if not g:
                continue
            grant_bytes, planned, counts = self.plans[station.ss_id]
            chan = self.ul_chan[station.ss_id]
            received = 0
            for cid, pkt in station.execute_spend(grant_bytes, planned, counts):
                ok = chan.transmit()
                if log is not None:
                    log.append(f"f={frame} p=3 ul {cid} bytes={pkt[-1]} ok={int(ok)}")
                if ok:
                    received += pkt[-1]
                    on_data(table, cid, pkt[-1], policy)
                    wired.push(frame, pkt)
            if received < grant_bytes:
                reclaim(table, station.ss_id, grant_bytes - received, policy)

    def _phase_bookkeeping(self, frame: int) -> None:
        policy = self.policy
        in_flight = self.in_flight
        for ss_id, g in self.current_grants.items():
            # this frame's transmission opportunities are over either way
            left = in_flight[ss_id] - g
            in_flight[ss_id] = left if left > 0 else 0
        if policy is PolicyKind.DDA_D and self.pending_store:
            perception.flush_pending(self.table, self.pending_store, policy)
        effective = frame + self.cfg.map_latency_frames
        grants, self.ul_cursor = bs_mac.ul_schedule(
            self.table, self.ul_cap, range(self.cfg.n_ss), self.ul_cursor,
            policy, effective, in_flight, self.cfg.ul_grant_quantum_bytes)
        for grant in grants:
            in_flight[grant.ss] += grant.size
        if self.log is not None:
            for grant in grants:
                self.log.append(f"f={frame} p=4 grant ss={grant.ss} "
                                f"bytes={grant.size} eff={grant.effective_frame}")
        self.grant_pipeline.append({g.ss: g.size for g in grants})
        alloc, self.dl_cursor = bs_mac.dl_schedule(self.dl_queues, self.dl_cap,
                                                   self.dl_cursor)
        self.dl_pipeline.append(alloc)

    # --- reporting ---------------------------------------------------------

    def _take_snapshot(self) -> None:
        self._sync_counters()
        self.warmup_snap = self.counters.snapshot()

    def _sync_counters(self) -> None:
        c = self.counters
        c.t16_expirations = sum(s.t16_expirations for s in self.stations)
        c.wasted_grant_bytes = sum(s.wasted_grant_bytes for s in self.stations)
        c.desync_clamps = self.table.desync_clamps
        c.drops = sum(q.drops for q in self.dl_queues)
        c.drops += sum(q.drops for s in self.stations for q in s.queues)
        for i, recv in enumerate(self.receivers):
            c.delivered_per_flow[i] = recv.delivered_bytes

    def run(self, frame_hook=None) -> SimulationReport:
        cfg = self.cfg
        n_frames = cfg.n_frames
        for frame in range(n_frames):
            self.clock.frame_index = frame
            self._housekeeping(frame)
            self._phase_dl(frame)
            self._phase_contention(frame)
            self._phase_ul(frame)
            self._phase_bookkeeping(frame)
            if frame_hook is not None:
                frame_hook(self, frame)
        self._sync_counters()
        return self._report(n_frames)

    def _report(self, frames: int) -> SimulationReport:
        cfg = self.cfg
        window_s = max(0.0, (frames - cfg.warmup_frames) * cfg.frame_duration_s) \
            if frames > cfg.warmup_frames else 0.0
        end = self.counters
        snap = self.warmup_snap or Counters(delivered_per_flow=[0] * cfg.n_ss)
        attempts = end.attempts - snap.attempts
        collided = end.collided - snap.collided
        periods = end.active_periods - snap.active_periods
        col_periods = end.collided_periods - snap.collided_periods
        t16 = end.t16_expirations - snap.t16_expirations
        delivered = [e - s for e, s in zip(end.delivered_per_flow,
                                           snap.delivered_per_flow)]
        if self.ul_chan[0].ideal:
            p_loss = 0.0
        else:
            pi_g, pi_b = steady_state(cfg.p_good_to_bad, cfg.p_bad_to_good)
            p_loss = average_loss(cfg.p_loss_good, cfg.p_loss_bad, pi_g, pi_b)
        if window_s > 0:
            per_flow = tuple(b * 8.0 / window_s for b in delivered)
            throughput = sum(per_flow)
            rate = t16 / (cfg.n_ss * window_s)
        else:
            per_flow = tuple(0.0 for _ in range(cfg.n_ss))
            throughput = 0.0
            rate = 0.0
        return SimulationReport(
            scenario=cfg.preset,
            policy=self.policy.value,
            n_ss=cfg.n_ss,
            seed=self.seed,
            frames=frames,
            duration_s=frames * cfg.frame_duration_s,
            window_s=window_s,
            queue_limit=cfg.bs_queue_limit,
            p_loss=p_loss,
            throughput_bps=throughput,
            collision_prob=(collided / attempts) if attempts else 0.0,
            collision_prob_periods=(col_periods / periods) if periods else 0.0,
            t16_rate=rate,
            desync_events=end.desync_clamps - snap.desync_clamps,
            wasted_grant_bytes=end.wasted_grant_bytes - snap.wasted_grant_bytes,
            drops=end.drops - snap.drops,
            per_flow_goodput_bps=per_flow,
            attempts=attempts,
            collided=collided,
            t16_expirations=t16,
            event_log=tuple(self.log) if self.log is not None else None,
        )


def run(scenario: ScenarioConfig, seed: int, collect_log: bool = False,
        frame_hook=None) -> SimulationReport:
    """Execute one deterministic run of the scenario with the given seed."""
    return _Simulation(scenario, seed, collect_log).run(frame_hook)
