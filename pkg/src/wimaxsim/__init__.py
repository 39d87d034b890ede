"""Frame-accurate simulator of the 802.16 uplink bandwidth request-grant
mechanism, comparing bandwidth-perception management policies at the BS."""

from .config import ConfigError, ScenarioConfig, load_config, make_preset, serialize
from .engine import FrameClock, FramePhase, now, run
from .metrics import SimulationReport, csv_text, write_csv
from .perception import PolicyKind, replay_trace, replay_trace_file

__all__ = [
    "ConfigError", "ScenarioConfig", "load_config", "make_preset", "serialize",
    "FrameClock", "FramePhase", "now", "run",
    "SimulationReport", "csv_text", "write_csv",
    "PolicyKind", "replay_trace", "replay_trace_file",
]
