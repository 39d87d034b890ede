"""Scenario configuration: flat key=value files, presets, validation.

The config format is intentionally flat (``key = value``, ``#`` comments, no
nesting) so scenario files stay diff-friendly and language-agnostic.  Presets
populate every field, so a validated config can never hit a missing key at
run time.
"""

from __future__ import annotations

import dataclasses
from dataclasses import dataclass, field


class ConfigError(ValueError):
    """Raised for unknown keys, type mismatches and out-of-range values."""


PRESETS = ("download_only", "upload_only_mixed", "queue_sweep", "loss_sweep",
           "replay", "custom")
DIRECTIONS = ("download", "upload")
REQUEST_MIXES = ("aggregate_only", "incremental_only", "per_k")
DL_SPLIT_MODES = ("fraction", "ratio")


@dataclass
class ScenarioConfig:
    # scenario selection
    preset: str = "custom"
    direction: str = "download"
    n_ss: int = 10
    policy: str = "dda_d"
    request_mix: str = "aggregate_only"
    aggregate_every_k: int = 50
    duration_s: float = 1000.0
    warmup_s: float = 50.0
    frame_duration_s: float = 0.005
    seeds: tuple[int, ...] = (1,)

    # air interface
    channel_bandwidth_hz: float = 7e6
    bits_per_symbol: int = 6
    coding_rate: float = 0.75
    sampling_factor: float = 8.0 / 7.0
    fft_size: int = 256
    data_subcarriers: int = 192
    guard_fraction: float = 0.125
    dl_fraction: float = 0.5
    dl_split_mode: str = "fraction"
    contention_slots: int = 8
    contention_slot_bytes: int = 108
    dl_capacity_bytes: int = 0     # 0 = derive from the OFDM parameters
    ul_capacity_bytes: int = 0

    # queues
    bs_queue_limit: int = 50
    ss_queue_limit: int = 50

    # contention / reservation timeout
    cw_min: int = 8
    cw_max: int = 128
    t16_ms: float = 100.0

    # wireless loss model (two-state Markov; all-zero loss = ideal channel)
    p_loss_good: float = 0.0
    p_loss_bad: float = 0.0
    p_good_to_bad: float = 0.5
    p_bad_to_good: float = 0.5
    per_ss_channels: bool = False

    # transport
    mss_bytes: int = 960
    header_bytes: int = 40
    rwnd_bytes: int = 65535
    init_cwnd_segments: int = 2
    init_ssthresh_bytes: int = 19200
    rto_min_ms: float = 200.0
    rto_initial_ms: float = 1000.0
    rto_max_s: float = 64.0
    delack_ms: float = 200.0
    flow_start_window_s: float = 5.0

    # wired server<->BS hop
    wired_rate_bps: float = 1e8
    wired_delay_ms: float = 1.0

    # request-to-grant pipeline depth in frames; the granted uplink region
    # follows the request by one DL-MAP decode frame plus allocation lead
    map_latency_frames: int = 3

    # uplink scheduler: per-visit grant cap in bytes (0 = grant full demand)
    ul_grant_quantum_bytes: int = 0

    # station-side self-correction: an idle station with queued data and no
    # recent service re-reports its backlog after this many frames (0 = off)
    request_refresh_frames: int = 2

    # --- derived helpers -------------------------------------------------

    @property
    def n_frames(self) -> int:
        return int(round(self.duration_s / self.frame_duration_s))

    @property
    def warmup_frames(self) -> int:
        return int(round(self.warmup_s / self.frame_duration_s))

    @property
    def t16_frames(self) -> int:
        return max(1, int(round(self.t16_ms / 1000.0 / self.frame_duration_s)))

    def frames(self, seconds: float) -> int:
        """Convert a duration in seconds to whole frames, rounding up."""
        n = seconds / self.frame_duration_s
        return int(n) if n == int(n) else int(n) + 1

    def validate(self) -> "ScenarioConfig":
        _check_choice(self, "preset", PRESETS)
        _check_choice(self, "direction", DIRECTIONS)
        _check_choice(self, "request_mix", REQUEST_MIXES)
        _check_choice(self, "dl_split_mode", DL_SPLIT_MODES)
        _check_positive_int(self, "n_ss")
        _check_positive_int(self, "aggregate_every_k")
        _check_nonneg(self, "duration_s")
        _check_nonneg(self, "warmup_s")
        _check_positive(self, "frame_duration_s")
        if not self.seeds:
            raise ConfigError("seeds: at least one seed is required")
        _check_positive(self, "channel_bandwidth_hz")
        _check_positive_int(self, "bits_per_symbol")
        _check_unit_open(self, "coding_rate")
        _check_positive(self, "sampling_factor")
        _check_positive_int(self, "fft_size")
        _check_positive_int(self, "data_subcarriers")
        if not 0.0 <= self.guard_fraction < 1.0:
            raise ConfigError("guard_fraction: must be in [0, 1)")
        if not 0.0 < self.dl_fraction < 1.0:
            raise ConfigError("dl_fraction: must be strictly between 0 and 1")
        _check_positive_int(self, "contention_slots")
        _check_positive_int(self, "contention_slot_bytes")
        _check_nonneg_int(self, "dl_capacity_bytes")
        _check_nonneg_int(self, "ul_capacity_bytes")
        _check_positive_int(self, "bs_queue_limit")
        _check_positive_int(self, "ss_queue_limit")
        _check_positive_int(self, "cw_min")
        _check_positive_int(self, "cw_max")
        if self.cw_max < self.cw_min:
            raise ConfigError("cw_max: must be >= cw_min")
        _check_positive(self, "t16_ms")
        for key in ("p_loss_good", "p_loss_bad", "p_good_to_bad", "p_bad_to_good"):
            _check_prob(self, key)
        if self.p_good_to_bad + self.p_bad_to_good <= 0.0:
            raise ConfigError("p_good_to_bad: transition probabilities cannot both be zero")
        _check_positive_int(self, "mss_bytes")
        _check_nonneg_int(self, "header_bytes")
        _check_positive_int(self, "rwnd_bytes")
        _check_positive_int(self, "init_cwnd_segments")
        _check_positive_int(self, "init_ssthresh_bytes")
        _check_positive(self, "rto_min_ms")
        _check_positive(self, "rto_initial_ms")
        _check_positive(self, "rto_max_s")
        _check_positive(self, "delack_ms")
        _check_nonneg(self, "flow_start_window_s")
        _check_positive(self, "wired_rate_bps")
        _check_nonneg(self, "wired_delay_ms")
        _check_positive_int(self, "map_latency_frames")
        _check_nonneg_int(self, "ul_grant_quantum_bytes")
        _check_nonneg_int(self, "request_refresh_frames")
        from . import perception
        perception.PolicyKind.from_name(self.policy)  # raises ConfigError
        return self


_PRESET_OVERRIDES: dict[str, dict] = {
    "custom": {},
    "replay": {},
    "download_only": {
        "direction": "download",
        "request_mix": "aggregate_only",
    },
    "upload_only_mixed": {
        "direction": "upload",
        "request_mix": "per_k",
        "aggregate_every_k": 50,
    },
    "queue_sweep": {
        "direction": "download",
        "request_mix": "aggregate_only",
        "n_ss": 10,
        "ss_queue_limit": 20,
    },
    "loss_sweep": {
        "direction": "download",
        "request_mix": "aggregate_only",
        "n_ss": 10,
        "p_loss_good": 0.0,
        "p_good_to_bad": 0.5,
        "p_bad_to_good": 0.5,
    },
}

_FIELDS = {f.name: f for f in dataclasses.fields(ScenarioConfig)}


def make_preset(name: str, **overrides) -> ScenarioConfig:
    """Build a fully-populated config for a named preset."""
    if name not in _PRESET_OVERRIDES:
        raise ConfigError(f"preset: unknown preset {name!r} (choose from {', '.join(PRESETS)})")
    values = dict(_PRESET_OVERRIDES[name])
    values["preset"] = name
    for key, val in overrides.items():
        if key not in _FIELDS:
            raise ConfigError(f"{key}: unknown configuration key")
        values[key] = val
    return ScenarioConfig(**values).validate()


def _parse_value(key: str, raw: str):
    """Parse a raw string into the declared type of a config field."""
    if key not in _FIELDS:
        raise ConfigError(f"{key}: unknown configuration key")
    ftype = _FIELDS[key].type
    raw = raw.strip()
    try:
        if key == "seeds":
            parts = [p for p in raw.replace(",", " ").split() if p]
            return tuple(int(p) for p in parts)
        if ftype in ("int",):
            return int(raw)
        if ftype in ("float",):
            return float(raw)
        if ftype in ("bool",):
            low = raw.lower()
            if low in ("true", "1", "yes", "on"):
                return True
            if low in ("false", "0", "no", "off"):
                return False
            raise ValueError(raw)
        return raw
    except ValueError as exc:
        raise ConfigError(f"{key}: cannot parse {raw!r} as {ftype}") from exc


def load_config(path: str | None = None,
                overrides: dict[str, str] | None = None) -> ScenarioConfig:
    """Load a scenario from a key=value file plus command-line overrides.

    Overrides win over file values; the ``preset`` key (from either source)
    establishes the defaults the remaining keys modify.
    """
    file_items: list[tuple[str, str]] = []
    if path is not None:
        try:
            with open(path, "r", encoding="utf-8") as fh:
                text = fh.read()
        except OSError as exc:
            raise ConfigError(f"config file: cannot read {path!r}: {exc}") from exc
        for lineno, line in enumerate(text.splitlines(), start=1):
            stripped = line.split("#", 1)[0].strip()
            if not stripped:
                continue
            if "=" not in stripped:
                raise ConfigError(f"{path}:{lineno}: expected 'key = value', got {line!r}")
            key, _, raw = stripped.partition("=")
            file_items.append((key.strip(), raw.strip()))

    merged: dict[str, str] = dict(file_items)
    for key, raw in (overrides or {}).items():
        merged[key.strip()] = raw
    preset = merged.pop("preset", "custom")
    values = {key: _parse_value(key, raw) for key, raw in merged.items()}
    return make_preset(preset, **values)


def serialize(cfg: ScenarioConfig) -> str:
    """Render a config as key=value text; load_config(serialize(c)) == c."""
    lines = []
    for f in dataclasses.fields(cfg):
        val = getattr(cfg, f.name)
        if f.name == "seeds":
            val = ",".join(str(s) for s in val)
        elif isinstance(val, bool):
            val = "true" if val else "false"
        elif isinstance(val, float):
            val = repr(val)
        lines.append(f"{f.name} = {val}")
    return "\n".join(lines) + "\n"


# --- field validators ----------------------------------------------------

def _check_choice(cfg, key, choices):
    if getattr(cfg, key) not in choices:
        raise ConfigError(f"{key}: must be one of {', '.join(choices)}")


def _check_positive(cfg, key):
    if not getattr(cfg, key) > 0:
        raise ConfigError(f"{key}: must be positive")


def _check_nonneg(cfg, key):
    if getattr(cfg, key) < 0:
        raise ConfigError(f"{key}: must be non-negative")


def _check_positive_int(cfg, key):
    val = getattr(cfg, key)
    if not isinstance(val, int) or val <= 0:
        raise ConfigError(f"{key}: must be a positive integer")


def _check_nonneg_int(cfg, key):
    val = getattr(cfg, key)
    if not isinstance(val, int) or val < 0:
        raise ConfigError(f"{key}: must be a non-negative integer")


def _check_prob(cfg, key):
    val = getattr(cfg, key)
    if not 0.0 <= val <= 1.0:
        raise ConfigError(f"{key}: must be a probability in [0, 1]")


def _check_unit_open(cfg, key):
    val = getattr(cfg, key)
    if not 0.0 < val <= 1.0:
        raise ConfigError(f"{key}: must be in (0, 1]")
