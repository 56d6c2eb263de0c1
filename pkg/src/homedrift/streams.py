"""Columnar event streams: the in-memory working representation.

Event objects are exact but slow at scale; analysis code works on per-device
numpy arrays and converts at the object boundary with
:func:`events_to_streams`.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .model import (
    DeviceKind,
    LocationFix,
    ScalarReading,
    SensorEvent,
    SleepSample,
    TestOutcome,
    ToothbrushSession,
)

PHASE_CODES = {"awake": 0, "light": 1, "deep": 2, "rem": 3}
PHASE_NAMES = {v: k for k, v in PHASE_CODES.items()}
OUT_OF_BED = -1

_OPENISH = ("open", "on")


@dataclass
class Stream:
    kind: DeviceKind
    ts: np.ndarray
    cols: dict[str, np.ndarray] = field(default_factory=dict)

    def mask(self, keep: np.ndarray) -> "Stream":
        return Stream(self.kind, self.ts[keep], {k: v[keep] for k, v in self.cols.items()})

    def __len__(self) -> int:
        return len(self.ts)


def events_to_streams(events) -> dict[str, Stream]:
    """Group events by device into time-sorted columnar streams; arrival
    order does not matter."""
    by_dev: dict[str, list[SensorEvent]] = {}
    for e in events:
        by_dev.setdefault(e.device_id, []).append(e)
    out: dict[str, Stream] = {}
    for dev, evs in by_dev.items():
        evs.sort(key=lambda e: e.timestamp)
        kind = evs[0].kind
        ts = np.array([e.timestamp for e in evs])
        cols: dict[str, np.ndarray] = {}
        p0 = evs[0].payload
        if isinstance(p0, ScalarReading):
            cols["value"] = np.array([e.payload.value for e in evs])
        elif isinstance(p0, SleepSample):
            cols["phase"] = np.array([PHASE_CODES[e.payload.phase] for e in evs], dtype=np.int8)
        elif isinstance(p0, LocationFix):
            cols["lat"] = np.array([e.payload.lat for e in evs])
            cols["lon"] = np.array([e.payload.lon for e in evs])
            cols["acc"] = np.array([e.payload.accuracy_m for e in evs])
        elif isinstance(p0, ToothbrushSession):
            cols["dur"] = np.array([e.payload.duration_s for e in evs])
        elif isinstance(p0, TestOutcome):
            cols["compliant"] = np.array(
                [1 if e.payload.compliant else 0 for e in evs], dtype=np.int8
            )
            cols["score"] = np.array(
                [-1 if e.payload.score is None else e.payload.score for e in evs], dtype=np.int64
            )
        else:  # binary
            cols["state"] = np.array(
                [1 if e.payload.state in _OPENISH else 0 for e in evs], dtype=np.int8
            )
        out[dev] = Stream(kind, ts, cols)
    return out
