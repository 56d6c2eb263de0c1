"""Deployment-fault injection: silencing devices over configured intervals."""

from __future__ import annotations

import datetime as dt
from typing import Iterable, Iterator

import numpy as np

from ..model import SensorEvent
from .generate import DayTrace
from .scripts import SimulatedHome


def fault_windows(
    sim: SimulatedHome, start: dt.date, n_days: int
) -> dict[str, list[tuple[float, float]]]:
    """Per-device UTC intervals [t0, t1) during which events are removed.

    Windows outside the simulated range are harmless (they remove nothing);
    range validation happens at configuration load."""
    day0 = sim.home.day_start_utc(start)
    windows: dict[str, list[tuple[float, float]]] = {}
    for f in sim.faults.faults:
        if f.kind == "gateway-outage":
            continue
        dev = sim.roles.get(f.device_role or "")
        if dev is None:
            continue
        end_day = n_days if f.end_day is None else min(f.end_day, n_days)
        t0 = day0 + (f.start_day * 1440 + f.start_min) * 60.0
        t1 = day0 + (end_day * 1440 + f.end_min) * 60.0
        windows.setdefault(dev, []).append((t0, t1))
    return windows


def inject_faults(
    events: Iterable[SensorEvent], windows: dict[str, list[tuple[float, float]]]
) -> Iterator[SensorEvent]:
    """Drop events falling inside a fault window; nothing else changes."""
    for e in events:
        wins = windows.get(e.device_id)
        if wins and any(t0 <= e.timestamp < t1 for t0, t1 in wins):
            continue
        yield e


def apply_fault_windows(trace: DayTrace, windows: dict[str, list[tuple[float, float]]]) -> DayTrace:
    """Trace-level twin of :func:`inject_faults`."""
    new_streams = {}
    for dev, stream in trace.streams.items():
        wins = windows.get(dev)
        if not wins:
            new_streams[dev] = stream
            continue
        keep = np.ones(len(stream.ts), dtype=bool)
        for t0, t1 in wins:
            keep &= ~((stream.ts >= t0) & (stream.ts < t1))
        new_streams[dev] = stream.mask(keep)
    trace.streams = new_streams
    return trace
