"""Simplified TCP NewReno endpoints for long-lived flows, frame-clocked.

Senders are byte-sequence state machines with slow start, congestion
avoidance, fast retransmit/fast recovery with NewReno partial-ACK handling,
and an exponentially backed-off retransmission timer.  Receivers implement
delayed ACKs (one per two full segments, a 200 ms flush timer, immediate
duplicate ACKs on out-of-order data).  All timers tick in whole frames.

Segments are tuples ``(flow_id, seq, end, wire_bytes)`` and ACKs are
``(flow_id, ack_no, wire_bytes)``; the MAC layers only ever look at the
trailing wire size.
"""

from __future__ import annotations

from collections import deque


class TcpSender:
    """NewReno sender with unlimited application data."""

    __slots__ = ("flow_id", "mss", "wire", "rwnd", "snd_una", "snd_nxt",
                 "max_sent", "cwnd", "ssthresh", "dup_acks", "in_recovery",
                 "recover", "rto_frames", "rto_min", "rto_max",
                 "rto_var_floor", "rto_expiry", "srtt", "rttvar", "rtt_seq",
                 "rtt_frame", "timeouts", "fast_rtx", "protocol_errors",
                 "started")

    def __init__(self, flow_id: int, mss: int, header: int, rwnd: int,
                 init_cwnd_segments: int, init_ssthresh: int,
                 rto_initial_frames: int, rto_min_frames: int,
                 rto_max_frames: int):
        self.flow_id = flow_id
        self.mss = mss
        self.wire = mss + header
        self.rwnd = rwnd
        self.snd_una = 0
        self.snd_nxt = 0
        self.max_sent = 0
        self.cwnd = float(init_cwnd_segments * mss)
        self.ssthresh = float(init_ssthresh)
        self.dup_acks = 0
        self.in_recovery = False
        self.recover = 0
        self.rto_frames = rto_initial_frames
        self.rto_min = rto_min_frames
        self.rto_max = rto_max_frames
        # timer-granularity floor on the variance term (classic 100 ms tick)
        self.rto_var_floor = rto_min_frames
        self.rto_expiry = -1          # -1 = disarmed
        self.srtt = -1.0
        self.rttvar = 0.0
        self.rtt_seq = -1
        self.rtt_frame = 0
        self.timeouts = 0
        self.fast_rtx = 0
        self.protocol_errors = 0
        self.started = False

    # --- helpers ----------------------------------------------------------

    def flight(self) -> int:
        return self.snd_nxt - self.snd_una

    def _segment(self, seq: int) -> tuple:
        end = seq + self.mss
        if end > self.max_sent:
            self.max_sent = end
        return (self.flow_id, seq, end, self.wire)

    def _window(self) -> float:
        return self.cwnd if self.cwnd < self.rwnd else float(self.rwnd)

    def _emit_new(self, out: list, now: int) -> None:
        window = self._window()
        mss = self.mss
        while self.snd_nxt + mss - self.snd_una <= window:
            out.append(self._segment(self.snd_nxt))
            if self.rtt_seq < 0:
                self.rtt_seq = self.snd_nxt
                self.rtt_frame = now
            self.snd_nxt += mss
        if self.flight() > 0 and self.rto_expiry < 0:
            self.rto_expiry = now + self.rto_frames

    def _computed_rto(self) -> int:
        var = 4.0 * self.rttvar
        if var < self.rto_var_floor:
            var = self.rto_var_floor
        rto = self.srtt + var
        return int(min(max(rto, self.rto_min), self.rto_max))

    def _update_rtt(self, now: int) -> None:
        sample = float(now - self.rtt_frame)
        if self.srtt < 0:
            self.srtt = sample
            self.rttvar = sample / 2.0
        else:
            self.rttvar = 0.75 * self.rttvar + 0.25 * abs(self.srtt - sample)
            self.srtt = 0.875 * self.srtt + 0.125 * sample
        self.rto_frames = self._computed_rto()
        self.rtt_seq = -1

    # --- events -----------------------------------------------------------

    def start(self, now: int) -> list:
        """Open the flow: emit the initial window."""
        self.started = True
        out: list = []
        self._emit_new(out, now)
        return out

    def on_ack(self, ack: int, now: int) -> list:
        """Process a cumulative ACK; returns segments to transmit.

        After a timeout pulls transmission back, ACKs for older in-flight
        data may exceed snd_nxt; anything up to the high-water mark is
        legitimate forward progress.
        """
        if ack > self.max_sent:
            self.protocol_errors += 1
            return []
        out: list = []
        if ack > self.snd_una:
            if self.rtt_seq >= 0 and ack > self.rtt_seq:
                self._update_rtt(now)
            elif self.srtt >= 0:
                # forward progress clears any timeout backoff
                self.rto_frames = self._computed_rto()
            prev_una = self.snd_una
            self.snd_una = ack
            if self.snd_nxt < ack:
                self.snd_nxt = ack
            if self.in_recovery:
                if ack >= self.recover:
                    # full ACK: recovery is over, deflate to ssthresh
                    self.cwnd = self.ssthresh
                    self.in_recovery = False
                    self.dup_acks = 0
                else:
                    # partial ACK: retransmit the next hole, deflate
                    out.append(self._segment(ack))
                    self.cwnd = max(self.cwnd - (ack - prev_una) + self.mss,
                                    float(self.mss))
                    self.rto_expiry = now + self.rto_frames
            else:
                self.dup_acks = 0
                if self.cwnd < self.ssthresh:
                    self.cwnd += self.mss
                else:
                    self.cwnd += self.mss * self.mss / self.cwnd
            if self.flight() > 0:
                self.rto_expiry = now + self.rto_frames
            else:
                self.rto_expiry = -1
        elif ack == self.snd_una and self.flight() > 0:
            if self.in_recovery:
                self.cwnd += self.mss
            else:
                self.dup_acks += 1
                if self.dup_acks < 3:
                    # limited transmit: keep the ACK clock alive with one
                    # new segment per early duplicate
                    out.append(self._segment(self.snd_nxt))
                    self.snd_nxt += self.mss
                elif self.dup_acks == 3:
                    self.fast_rtx += 1
                    self.ssthresh = max(self.flight() / 2.0, 2.0 * self.mss)
                    self.cwnd = self.ssthresh + 3.0 * self.mss
                    self.recover = self.snd_nxt
                    self.in_recovery = True
                    self.rtt_seq = -1
                    out.append(self._segment(self.snd_una))
                    self.rto_expiry = now + self.rto_frames
        self._emit_new(out, now)
        return out

    def on_timeout(self, now: int) -> list:
        """Retransmission timer fired: collapse to slow start, back off.

        Transmission restarts from snd_una (go-back-N); anything beyond it
        is presumed lost and will be resent as the window reopens.
        """
        if self.flight() <= 0:
            self.rto_expiry = -1
            return []
        self.timeouts += 1
        self.ssthresh = max(self.flight() / 2.0, 2.0 * self.mss)
        self.cwnd = float(self.mss)
        self.in_recovery = False
        self.dup_acks = 0
        self.rtt_seq = -1
        self.rto_frames = min(self.rto_frames * 2, self.rto_max)
        self.rto_expiry = now + self.rto_frames
        self.snd_nxt = self.snd_una + self.mss
        return [self._segment(self.snd_una)]


class TcpReceiver:
    """Delayed-ACK receiver with cumulative in-order delivery accounting."""

    __slots__ = ("flow_id", "ack_wire", "rcv_nxt", "ooo", "pending",
                 "delack_frames", "delack_expiry", "delivered_bytes")

    def __init__(self, flow_id: int, ack_wire: int, delack_frames: int):
        self.flow_id = flow_id
        self.ack_wire = ack_wire
        self.rcv_nxt = 0
        self.ooo: dict[int, int] = {}
        self.pending = 0
        self.delack_frames = delack_frames
        self.delack_expiry = -1
        self.delivered_bytes = 0

    def _ack(self) -> tuple:
        self.pending = 0
        return (self.flow_id, self.rcv_nxt, self.ack_wire)

    def on_segment(self, seq: int, end: int, now: int):
        """Accept one segment; returns an ACK tuple or None."""
        if seq == self.rcv_nxt:
            self.rcv_nxt = end
            self.delivered_bytes += end - seq
            filled_hole = bool(self.ooo)
            while self.rcv_nxt in self.ooo:
                nxt = self.ooo.pop(self.rcv_nxt)
                self.delivered_bytes += nxt - self.rcv_nxt
                self.rcv_nxt = nxt
            if filled_hole:
                return self._ack()
            self.pending += 1
            if self.pending >= 2:
                return self._ack()
            return None
        if seq > self.rcv_nxt:
            # out of order: duplicate ACK right away
            if seq not in self.ooo:
                self.ooo[seq] = end
            return (self.flow_id, self.rcv_nxt, self.ack_wire)
        # old duplicate (retransmission overlap): re-ACK the current edge
        return (self.flow_id, self.rcv_nxt, self.ack_wire)

    def delack_tick(self, now: int):
        """Flush a lone pending segment on the periodic delayed-ACK beat.

        Classic BSD behaviour: the delayed-ACK timer is a free-running
        heartbeat, so a lone segment waits anywhere up to one full period.
        """
        if self.pending > 0 and now % self.delack_frames == 0:
            return self._ack()
        return None


class WiredLink:
    """FIFO, lossless rate+delay pipe between the server and the BS.

    Timing is integer nanoseconds so arrival frames are exact and runs stay
    reproducible.  Packets become visible to the destination at the first
    frame boundary at or after their arrival time.
    """

    __slots__ = ("byte_ns", "delay_ns", "frame_ns", "busy_until_ns", "queue")

    def __init__(self, rate_bps: float, delay_s: float, frame_duration_s: float):
        self.byte_ns = int(round(8e9 / rate_bps))
        self.delay_ns = int(round(delay_s * 1e9))
        self.frame_ns = int(round(frame_duration_s * 1e9))
        self.busy_until_ns = 0
        self.queue: deque = deque()

    def push(self, frame: int, packet) -> None:
        now_ns = frame * self.frame_ns
        start = now_ns if now_ns > self.busy_until_ns else self.busy_until_ns
        self.busy_until_ns = start + packet[-1] * self.byte_ns
        arrival_ns = self.busy_until_ns + self.delay_ns
        arrival_frame = -(-arrival_ns // self.frame_ns)   # ceil division
        self.queue.append((arrival_frame, packet))

    def pop_due(self, frame: int) -> list:
        out = []
        q = self.queue
        while q and q[0][0] <= frame:
            out.append(q.popleft()[1])
        return out
