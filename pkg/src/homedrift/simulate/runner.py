"""Multi-home simulation driver: drift application, faults, cognitive-test
scheduling, per-day log files, and the ground-truth manifest."""

from __future__ import annotations

import datetime as dt
import json
from dataclasses import dataclass
from pathlib import Path
from typing import Optional

import numpy as np

from .. import codec
from ..model import DeviceKind
from ..streams import Stream
from ..testsched import WeeklySlot, WeeklyTestDriver
from .faults import apply_fault_windows, fault_windows
from .generate import DayTrace, _rng, _TAG_TEST, generate_day_trace
from .scripts import BehaviorScript, SimulatedHome, apply_drift

TEST_SLOT = WeeklySlot(weekday=2, minute_of_day=600)  # Wednesday 10:00


@dataclass
class SimResult:
    manifest: dict
    traces: Optional[dict[str, list[DayTrace]]]
    out_dir: Optional[Path]


def script_for_day(sim: SimulatedHome, day_index: int) -> BehaviorScript:
    script = sim.script
    for scen in sim.scenarios:
        script = apply_drift(script, scen, day_index)
    return script


def simulate(
    homes: list[SimulatedHome],
    start: dt.date,
    days: int,
    seed: int,
    out_dir: str | Path | None = None,
    keep_traces: bool = False,
) -> SimResult:
    """Generate every home's event stream over [start, start + days).

    With ``out_dir`` set, writes one log file per home per day plus
    ``manifest.json`` recording injected drift onsets, fault intervals and
    per-day ground truth for acceptance checks.
    """
    if not homes:
        raise ValueError("need at least one home")
    out_path = Path(out_dir) if out_dir is not None else None
    if out_path is not None:
        out_path.mkdir(parents=True, exist_ok=True)
    all_traces: dict[str, list[DayTrace]] = {}
    manifest_homes = []

    for sim in homes:
        windows = fault_windows(sim, start, days)
        tablet_dev = sim.roles.get("tablet")
        driver = None
        if tablet_dev is not None:
            driver = WeeklyTestDriver(
                device_id=tablet_dev,
                home_id=sim.home.home_id,
                slot=TEST_SLOT,
                confirm_prob=sim.script.test_confirm_prob,
                score_mean=sim.script.test_score_mean,
                score_sd=sim.script.test_score_sd,
            )
        home_days = []
        traces: list[DayTrace] = []
        for day_index in range(days):
            date = start + dt.timedelta(days=day_index)
            script_d = script_for_day(sim, day_index)
            script_prev = script_for_day(sim, day_index - 1) if day_index > 0 else script_d
            trace = generate_day_trace(sim, date, seed, script_d, prev_script=script_prev)
            apply_fault_windows(trace, windows)
            if driver is not None:
                zone_dev = sim.roles.get("tablet-zone")
                presence_ts = np.empty(0)
                if zone_dev in trace.streams:
                    s = trace.streams[zone_dev]
                    presence_ts = s.ts[s.cols["state"] == 1]
                outcomes = driver.advance_day(
                    date,
                    trace.day_start_utc,
                    presence_ts,
                    _rng(seed, sim.home.home_id, date.toordinal(), _TAG_TEST),
                )
                if outcomes:
                    e = outcomes[0]
                    trace.truth.test_compliant = e.payload.compliant
                    trace.truth.test_score = e.payload.score
                    ts = np.array([e.timestamp])
                    compliant = np.array([1 if e.payload.compliant else 0], dtype=np.int8)
                    score = np.array(
                        [-1 if e.payload.score is None else e.payload.score], dtype=np.int64
                    )
                    trace.streams[tablet_dev] = _merge_outcome(
                        trace.streams.get(tablet_dev), ts, compliant, score
                    )
            loc = trace.count_of_kind(DeviceKind.LOCATION_SOURCE)
            home_days.append(
                {
                    "date": date.isoformat(),
                    "events": trace.event_count(),
                    "location_events": loc,
                    "truth": trace.truth.as_dict(),
                }
            )
            if out_path is not None:
                day_dir = out_path / "logs" / sim.home.home_id
                day_dir.mkdir(parents=True, exist_ok=True)
                with open(day_dir / f"{date.isoformat()}.log", "w", encoding="utf-8") as fh:
                    codec.write_log(trace.to_events(), fh)
            if keep_traces:
                traces.append(trace)
        if keep_traces:
            all_traces[sim.home.home_id] = traces
        manifest_homes.append(
            {
                "home_id": sim.home.home_id,
                "subject_id": sim.subject.subject_id,
                "cohort": sim.subject.cohort,
                "location_consent": sim.subject.location_consent,
                "tz_minutes": sim.home.tz_minutes,
                "device_roles": dict(sim.roles),
                "devices": {
                    d.device_id: {
                        "kind": d.kind.value,
                        "interval_s": d.interval_s,
                        "room": sim.home.room_of(d.device_id),
                    }
                    for d in sim.home.devices
                },
                "caregiver_windows": [
                    {"weekday": w.weekday, "start_min": w.start_min, "end_min": w.end_min}
                    for w in sim.home.caregiver_windows
                ],
                "scenarios": [
                    {
                        "name": s.name,
                        "onset_day": s.onset_day,
                        "onset_date": (start + dt.timedelta(days=s.onset_day)).isoformat(),
                        "ramp_days": s.ramp_days,
                        "shifts": [
                            {"param": sh.param, "mode": sh.mode, "value": sh.value}
                            for sh in s.shifts
                        ],
                    }
                    for s in sim.scenarios
                ],
                "faults": [
                    {
                        "kind": f.kind,
                        "device_role": f.device_role,
                        "start_day": f.start_day,
                        "end_day": f.end_day,
                        "start_min": f.start_min,
                        "end_min": f.end_min,
                        "buffering_halts": f.buffering_halts,
                    }
                    for f in sim.faults.faults
                ],
                "days": home_days,
            }
        )

    manifest = {
        "version": 1,
        "seed": seed,
        "start": start.isoformat(),
        "days": days,
        "homes": manifest_homes,
    }
    if out_path is not None:
        with open(out_path / "manifest.json", "w", encoding="utf-8") as fh:
            json.dump(manifest, fh, indent=1, sort_keys=True)
            fh.write("\n")
    return SimResult(manifest=manifest, traces=all_traces if keep_traces else None, out_dir=out_path)


def _merge_outcome(
    existing: Optional[Stream], ts: np.ndarray, compliant: np.ndarray, score: np.ndarray
) -> Stream:
    if existing is None or len(existing) == 0:
        return Stream(DeviceKind.TABLET_PRESENCE, ts, {"compliant": compliant, "score": score})
    all_ts = np.concatenate([existing.ts, ts])
    order = np.argsort(all_ts, kind="stable")
    return Stream(
        DeviceKind.TABLET_PRESENCE,
        all_ts[order],
        {
            "compliant": np.concatenate([existing.cols["compliant"], compliant])[order],
            "score": np.concatenate([existing.cols["score"], score])[order],
        },
    )
