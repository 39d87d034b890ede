"""Sweep orchestration: run a grid of (axis value, policy, seed) simulations.

Runs are independent, so the grid can execute on a process pool; results come
back in grid order either way, keeping CSV output deterministic.
"""

from __future__ import annotations

import dataclasses
import multiprocessing

from . import engine
from .config import ConfigError, ScenarioConfig
from .metrics import SimulationReport


class SweepError(RuntimeError):
    """A cell of the sweep failed; the message names the offending cell."""


def build_jobs(cfg: ScenarioConfig, axis: tuple[str, list] | None,
               policies: list[str]) -> list[tuple[ScenarioConfig, str]]:
    """Expand the grid into per-run configs plus a human-readable cell label."""
    if axis is not None:
        key, values = axis
        if key not in {f.name for f in dataclasses.fields(ScenarioConfig)}:
            raise ConfigError(f"{key}: unknown sweep axis key")
        if not values:
            raise ConfigError(f"{key}: sweep axis needs at least one value")
    else:
        key, values = None, [None]
    jobs = []
    for value in values:
        for policy in policies:
            fields = {"policy": policy}
            label = f"policy={policy}"
            if key is not None:
                fields[key] = value
                label += f" {key}={value}"
            run_cfg = dataclasses.replace(cfg, **fields)
            run_cfg.validate()
            jobs.append((run_cfg, label))
    return jobs


def _run_cell(args) -> SimulationReport:
    cfg, seed, label = args
    try:
        return engine.run(cfg, seed)
    except Exception as exc:
        raise SweepError(f"sweep cell [{label} seed={seed}] failed: {exc}") from exc


def run_sweep(cfg: ScenarioConfig, axis: tuple[str, list] | None,
              policies: list[str], jobs: int = 1) -> list[SimulationReport]:
    """Run |axis| x |policies| x |seeds| simulations and return their reports."""
    cells = [(run_cfg, seed, label)
             for run_cfg, label in build_jobs(cfg, axis, policies)
             for seed in cfg.seeds]
    if jobs > 1 and len(cells) > 1:
        with multiprocessing.Pool(jobs) as pool:
            return pool.map(_run_cell, cells, chunksize=1)
    return [_run_cell(cell) for cell in cells]
