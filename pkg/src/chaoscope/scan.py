"""One-parameter bifurcation scans and trajectory export.

A scan integrates the same initial state at every grid value of one
parameter and records chosen observables at evenly spaced times inside a
late window, where transients have died out. Stacking those window values
against the parameter exposes period-doubling cascades and chaotic bands.
"""
from __future__ import annotations

import dataclasses
import io
import json
import multiprocessing
from dataclasses import dataclass
from typing import Optional, Sequence

import numpy as np

from .integrate import IntegrationConfig, Trajectory, integrate, trajectory_csv
from .systems import SamplePoint, SystemDefinition

__all__ = [
    "BifurcationConfig",
    "ScanCell",
    "ScanResult",
    "bifurcation_scan",
    "scan_csv",
    "scan_json",
    "export_trajectory",
]


@dataclass(frozen=True)
class BifurcationConfig:
    param_name: str
    lo: float
    hi: float
    n_param_points: int
    t_total: float = 7500.0
    window_start: float = 7000.0
    window_samples: int = 500
    observables: tuple[str, ...] = ()  # empty means every state variable

    def __post_init__(self) -> None:
        if not self.lo < self.hi:
            raise ValueError(f"need lo < hi, got [{self.lo}, {self.hi}]")
        if self.n_param_points < 1:
            raise ValueError("n_param_points must be >= 1")
        if not self.window_start < self.t_total:
            raise ValueError("window_start must precede t_total")
        if self.window_samples < 1:
            raise ValueError("window_samples must be >= 1")


@dataclass
class ScanCell:
    param_value: float
    observable: str
    values: tuple[float, ...]  # empty when flagged
    flagged: bool = False
    reason: str = ""


@dataclass
class ScanResult:
    param_name: str
    param_values: np.ndarray
    window_times: np.ndarray
    observables: tuple[str, ...]
    cells: list[ScanCell]


def _window_times(cfg: BifurcationConfig) -> np.ndarray:
    if cfg.window_samples == 1:
        return np.array([cfg.t_total])
    return np.linspace(cfg.window_start, cfg.t_total, cfg.window_samples)


def _scan_one(payload):
    system, base_sample, cfg, int_cfg, value, obs_idx = payload
    params = base_sample.params_array()
    params[system.param_index(cfg.param_name)] = value
    sample = SamplePoint.of(system, params, base_sample.initial_state)
    times = _window_times(cfg)

    run_cfg = dataclasses.replace(int_cfg, record_stride=0)
    t_first = float(times[0])
    if t_first > run_cfg.t0:
        traj = integrate(system, sample, t_first, run_cfg)
        if traj.terminated_early:
            return None, traj.termination_reason
        state = traj.final_state
    else:
        state = sample.state_array()
    rows = np.empty((len(times), len(obs_idx)))
    rows[0] = state[obs_idx]
    for i in range(1, len(times)):
        seg_cfg = dataclasses.replace(run_cfg, t0=float(times[i - 1]))
        seg_sample = SamplePoint.of(system, params, state)
        traj = integrate(system, seg_sample, float(times[i]), seg_cfg)
        if traj.terminated_early:
            return None, traj.termination_reason
        state = traj.final_state
        rows[i] = state[obs_idx]
    return rows, ""


def bifurcation_scan(
    system: SystemDefinition,
    base_sample: SamplePoint,
    cfg: BifurcationConfig,
    int_cfg: IntegrationConfig,
    workers: int = 1,
) -> ScanResult:
    """Sweep cfg.param_name over an inclusive even grid, recording each
    observable at the window sampling times; every grid value restarts
    from base_sample's initial state.

    A blowup at one grid value flags that value's cells instead of
    aborting the scan. Results are assembled in grid order regardless of
    worker scheduling.
    """
    system.param_index(cfg.param_name)
    obs = cfg.observables or system.state_names
    obs_idx = np.array([system.state_index(name) for name in obs], dtype=np.int64)
    if cfg.n_param_points == 1:
        values = np.array([cfg.lo])
    else:
        values = np.linspace(cfg.lo, cfg.hi, cfg.n_param_points)

    payloads = [
        (system, base_sample, cfg, int_cfg, float(v), obs_idx) for v in values
    ]
    if workers == 1 or len(payloads) == 1:
        outcomes = [_scan_one(p) for p in payloads]
    else:
        ctx = multiprocessing.get_context("fork")
        with ctx.Pool(processes=min(workers, len(payloads))) as pool:
            outcomes = list(pool.imap(_scan_one, payloads))

    cells: list[ScanCell] = []
    for v, (rows, reason) in zip(values, outcomes):
        for j, name in enumerate(obs):
            if rows is None:
                cells.append(ScanCell(float(v), name, (), flagged=True, reason=reason))
            else:
                cells.append(ScanCell(float(v), name, tuple(float(x) for x in rows[:, j])))
    return ScanResult(cfg.param_name, values, _window_times(cfg), tuple(obs), cells)


def scan_csv(result: ScanResult) -> str:
    """Long-format CSV: param_value,observable,t,value. Flagged cells emit
    a single row with an empty t and the reason in the value column."""
    buf = io.StringIO()
    buf.write("param_value,observable,t,value\n")
    for cell in result.cells:
        if cell.flagged:
            buf.write(f"{cell.param_value!r},{cell.observable},,{cell.reason}\n")
            continue
        for t, v in zip(result.window_times, cell.values):
            buf.write(f"{cell.param_value!r},{cell.observable},{float(t)!r},{v!r}\n")
    return buf.getvalue()


def scan_json(result: ScanResult) -> str:
    doc = {
        "param_name": result.param_name,
        "param_values": [float(v) for v in result.param_values],
        "window_times": [float(t) for t in result.window_times],
        "observables": list(result.observables),
        "cells": [
            {
                "param_value": c.param_value,
                "observable": c.observable,
                "values": list(c.values),
                "flagged": c.flagged,
                "reason": c.reason,
            }
            for c in result.cells
        ],
    }
    return json.dumps(doc)


def export_trajectory(
    system: SystemDefinition,
    sample: SamplePoint,
    t_end: float,
    int_cfg: IntegrationConfig,
    stride: int = 1,
) -> str:
    """CSV of the recorded trajectory, for external plotting or 3-D
    projection; on blowup the partial rows are kept and a flag row names
    the reason."""
    if stride < 1:
        raise ValueError(f"stride must be >= 1, got {stride}")
    cfg = dataclasses.replace(int_cfg, record_stride=stride)
    traj = integrate(system, sample, t_end, cfg)
    return trajectory_csv(traj, system.state_names)
