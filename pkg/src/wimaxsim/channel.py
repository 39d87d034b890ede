"""Air-interface model: per-subframe byte budgets and two-state Markov losses.

Capacity is either given explicitly (bytes per frame and direction) or derived
from the OFDM parameters.  Packet losses follow a Gilbert-Elliot chain whose
state advances once per transmission event; with both loss probabilities at
zero the channel is a pure passthrough and consumes no randomness at all, so
an ideal run is bit-identical to a run with the channel disabled.
"""

from __future__ import annotations

import random
from dataclasses import dataclass

from .config import ConfigError, ScenarioConfig


class ChannelError(ValueError):
    """Raised for degenerate channel parameters."""


@dataclass
class PhyProfile:
    """Physical-layer parameters that determine the per-frame byte budgets."""
    channel_bandwidth_hz: float = 7e6
    bits_per_symbol: int = 6
    coding_rate: float = 0.75
    sampling_factor: float = 8.0 / 7.0
    fft_size: int = 256
    data_subcarriers: int = 192
    guard_fraction: float = 0.125
    frame_duration_s: float = 0.005
    dl_fraction: float = 0.5
    dl_split_mode: str = "fraction"
    contention_slots: int = 8
    contention_slot_bytes: int = 108
    dl_capacity_bytes: int = 0
    ul_capacity_bytes: int = 0

    @classmethod
    def from_config(cls, cfg: ScenarioConfig) -> "PhyProfile":
        return cls(
            channel_bandwidth_hz=cfg.channel_bandwidth_hz,
            bits_per_symbol=cfg.bits_per_symbol,
            coding_rate=cfg.coding_rate,
            sampling_factor=cfg.sampling_factor,
            fft_size=cfg.fft_size,
            data_subcarriers=cfg.data_subcarriers,
            guard_fraction=cfg.guard_fraction,
            frame_duration_s=cfg.frame_duration_s,
            dl_fraction=cfg.dl_fraction,
            dl_split_mode=cfg.dl_split_mode,
            contention_slots=cfg.contention_slots,
            contention_slot_bytes=cfg.contention_slot_bytes,
            dl_capacity_bytes=cfg.dl_capacity_bytes,
            ul_capacity_bytes=cfg.ul_capacity_bytes,
        )

    def symbol_rate(self) -> float:
        """OFDM symbols per second including the cyclic-prefix overhead."""
        fs = self.sampling_factor * self.channel_bandwidth_hz
        return fs / (self.fft_size * (1.0 + self.guard_fraction))


def subframe_capacities(profile: PhyProfile) -> tuple[int, int]:
    """Return (dl_capacity, ul_capacity) in bytes per frame.

    Explicitly configured capacities pass through unchanged.  Otherwise the
    budget follows from the raw coded byte rate split by the DL share, with
    the contention region deducted from the uplink side.
    """
    if profile.dl_capacity_bytes > 0 and profile.ul_capacity_bytes > 0:
        return profile.dl_capacity_bytes, profile.ul_capacity_bytes
    raw_rate = (profile.symbol_rate() * profile.bits_per_symbol
                * profile.data_subcarriers * profile.coding_rate / 8.0)
    total = int(raw_rate * profile.frame_duration_s)
    if profile.dl_split_mode == "ratio":
        # value is DL/UL, e.g. 0.5 means the downlink gets 1/3 of the frame
        share = profile.dl_fraction / (1.0 + profile.dl_fraction)
    else:
        share = profile.dl_fraction
    dl = int(total * share)
    ul = total - dl - profile.contention_slots * profile.contention_slot_bytes
    if profile.dl_capacity_bytes > 0:
        dl = profile.dl_capacity_bytes
    if profile.ul_capacity_bytes > 0:
        ul = profile.ul_capacity_bytes
    if dl <= 0 or ul <= 0:
        raise ConfigError("dl_capacity_bytes: derived subframe capacity is not positive")
    return dl, ul


def steady_state(p_gb: float, p_bg: float) -> tuple[float, float]:
    """Steady-state occupancy (pi_good, pi_bad) of the two-state chain."""
    total = p_gb + p_bg
    if total <= 0.0:
        raise ChannelError("degenerate chain: both transition probabilities are zero")
    return p_bg / total, p_gb / total


def average_loss(p_g: float, p_b: float, pi_g: float, pi_b: float) -> float:
    """Long-run loss probability pi_g*P_g + pi_b*P_b."""
    for name, val in (("p_g", p_g), ("p_b", p_b), ("pi_g", pi_g), ("pi_b", pi_b)):
        if not 0.0 <= val <= 1.0:
            raise ChannelError(f"{name} must be in [0, 1], got {val}")
    return pi_g * p_g + pi_b * p_b


GOOD = 0
BAD = 1


@dataclass
class Transmission:
    """One packet offered to the channel (data PDU or bandwidth request)."""
    payload_bytes: int
    kind: str = "data_pdu"          # data_pdu | bw_request
    src: int = 0
    dst: int = 0

    def __post_init__(self):
        if self.payload_bytes <= 0:
            raise ValueError("payload_bytes must be positive")
        if self.kind not in ("data_pdu", "bw_request"):
            raise ValueError(f"unknown transmission kind {self.kind!r}")


class GilbertElliotChannel:
    """Two-state Markov loss channel, one shared instance per direction.

    Losses apply to data PDUs and bandwidth requests alike.  Each call to
    transmit() samples a loss with the current state's probability and then
    advances the state once.
    """

    __slots__ = ("p_g", "p_b", "p_gb", "p_bg", "_state", "rng", "ideal",
                 "good_events", "total_events")

    def __init__(self, p_g: float, p_b: float, p_gb: float, p_bg: float,
                 rng: random.Random | None = None):
        for name, val in (("p_g", p_g), ("p_b", p_b), ("p_gb", p_gb), ("p_bg", p_bg)):
            if not 0.0 <= val <= 1.0:
                raise ChannelError(f"{name} must be in [0, 1], got {val}")
        if p_gb + p_bg <= 0.0:
            raise ChannelError("degenerate chain: both transition probabilities are zero")
        self.p_g = p_g
        self.p_b = p_b
        self.p_gb = p_gb
        self.p_bg = p_bg
        self._state = GOOD
        self.rng = rng or random.Random()
        # the ideal channel draws nothing, keeping RNG streams identical to a
        # run with the channel disabled
        self.ideal = (p_g == 0.0 and p_b == 0.0)
        self.good_events = 0
        self.total_events = 0

    @property
    def state(self) -> str:
        return "good" if self._state == GOOD else "bad"

    def average_loss(self) -> float:
        pi_g, pi_b = steady_state(self.p_gb, self.p_bg)
        return average_loss(self.p_g, self.p_b, pi_g, pi_b)

    def transmit(self) -> bool:
        """Offer one packet; returns True when it is delivered."""
        if self.ideal:
            return True
        rng_random = self.rng.random
        state = self._state
        self.total_events += 1
        if state == GOOD:
            self.good_events += 1
            delivered = rng_random() >= self.p_g
            if rng_random() < self.p_gb:
                self._state = BAD
        else:
            delivered = rng_random() >= self.p_b
            if rng_random() < self.p_bg:
                self._state = GOOD
        return delivered


def transmit(t: Transmission, ch: GilbertElliotChannel) -> bool:
    """Spec-level transmit: sample a loss for t and advance the chain once."""
    if t.payload_bytes <= 0:
        raise ValueError("payload_bytes must be positive")
    return ch.transmit()
