"""Shared domain types: device kinds, sensor events, homes and subjects.

Everything here is an immutable value object. Timestamps are UTC epoch
seconds (float, microsecond-aligned); conversion to a home's local time
happens only in feature extraction via ``HomeConfig.tz_minutes``.
"""

from __future__ import annotations

import datetime as dt
from dataclasses import dataclass, field
from enum import Enum
from typing import Optional, Union

DAY_SECONDS = 86400


class DeviceKind(Enum):
    MAGNETIC_CONTACT = "magnetic-contact"
    MOTION_PIR = "motion-pir"
    PRESENCE_MMWAVE = "presence-mmwave"
    TEMPERATURE = "temperature"
    HUMIDITY = "humidity"
    SMART_PLUG_POWER = "smart-plug-power"
    SLEEP_MAT = "sleep-mat"
    SMARTWATCH = "smartwatch"
    TOOTHBRUSH = "toothbrush"
    ENTRANCE_DOOR_CONTACT = "entrance-door-contact"
    TABLET_PRESENCE = "tablet-presence"
    LOCATION_SOURCE = "location-source"


# Reporting modes. Event-driven kinds are silent unless something happens;
# periodic kinds report on a fixed interval. sleep-mat and location-source
# are periodic only while a session (bed occupied / outing) is active.
EVENT_DRIVEN_KINDS = frozenset(
    {
        DeviceKind.MAGNETIC_CONTACT,
        DeviceKind.MOTION_PIR,
        DeviceKind.PRESENCE_MMWAVE,
        DeviceKind.TOOTHBRUSH,
        DeviceKind.ENTRANCE_DOOR_CONTACT,
        DeviceKind.TABLET_PRESENCE,
    }
)
PERIODIC_KINDS = frozenset(
    {
        DeviceKind.TEMPERATURE,
        DeviceKind.HUMIDITY,
        DeviceKind.SMART_PLUG_POWER,
        DeviceKind.SLEEP_MAT,
        DeviceKind.SMARTWATCH,
        DeviceKind.LOCATION_SOURCE,
    }
)
# Subset of periodic kinds that report around the clock; only these get an
# expected-per-day sample count in missing-data accounting.
CONTINUOUS_PERIODIC_KINDS = frozenset(
    {
        DeviceKind.TEMPERATURE,
        DeviceKind.HUMIDITY,
        DeviceKind.SMART_PLUG_POWER,
        DeviceKind.SMARTWATCH,
    }
)

DEFAULT_INTERVAL_S = {
    DeviceKind.TEMPERATURE: 300,
    DeviceKind.HUMIDITY: 300,
    DeviceKind.SMART_PLUG_POWER: 600,
    DeviceKind.SLEEP_MAT: 60,
    DeviceKind.SMARTWATCH: 300,
    DeviceKind.LOCATION_SOURCE: 300,
}

SLEEP_PHASES = ("awake", "light", "deep", "rem")

SCALAR_UNITS = {
    DeviceKind.TEMPERATURE: ("C",),
    DeviceKind.HUMIDITY: ("RH%",),
    DeviceKind.SMART_PLUG_POWER: ("W",),
    DeviceKind.SMARTWATCH: ("steps", "bpm"),
}

BINARY_STATES = {
    DeviceKind.MAGNETIC_CONTACT: ("open", "closed"),
    DeviceKind.ENTRANCE_DOOR_CONTACT: ("open", "closed"),
    DeviceKind.MOTION_PIR: ("on", "off"),
    DeviceKind.PRESENCE_MMWAVE: ("on", "off"),
}

TARGET_OBJECTS = (
    "fridge",
    "pantry",
    "medicine-cabinet",
    "entrance-door",
    "stove",
    "shower",
    "bed",
    "tablet",
    "tv",
    "microwave",
    "washing-machine",
)


class ModelError(ValueError):
    """Invalid domain value."""


@dataclass(frozen=True)
class BinaryState:
    state: str


@dataclass(frozen=True)
class ScalarReading:
    value: float
    unit: str


@dataclass(frozen=True)
class SleepSample:
    phase: str


@dataclass(frozen=True)
class LocationFix:
    lat: float
    lon: float
    accuracy_m: float


@dataclass(frozen=True)
class ToothbrushSession:
    duration_s: float


@dataclass(frozen=True)
class TestOutcome:
    compliant: bool
    score: Optional[int]  # present iff compliant


Payload = Union[
    BinaryState, ScalarReading, SleepSample, LocationFix, ToothbrushSession, TestOutcome
]


def _check_payload(kind: DeviceKind, payload: Payload) -> None:
    if kind in BINARY_STATES:
        if not isinstance(payload, BinaryState):
            raise ModelError(f"{kind.value} requires a binary payload")
        if payload.state not in BINARY_STATES[kind]:
            raise ModelError(f"state {payload.state!r} invalid for {kind.value}")
    elif kind in SCALAR_UNITS:
        if not isinstance(payload, ScalarReading):
            raise ModelError(f"{kind.value} requires a scalar payload")
        if payload.unit not in SCALAR_UNITS[kind]:
            raise ModelError(f"unit {payload.unit!r} invalid for {kind.value}")
    elif kind is DeviceKind.SLEEP_MAT:
        if not isinstance(payload, SleepSample):
            raise ModelError("sleep-mat requires a sleep sample payload")
        if payload.phase not in SLEEP_PHASES:
            raise ModelError(f"unknown sleep phase {payload.phase!r}")
    elif kind is DeviceKind.LOCATION_SOURCE:
        if not isinstance(payload, LocationFix):
            raise ModelError("location-source requires a location fix payload")
    elif kind is DeviceKind.TOOTHBRUSH:
        if not isinstance(payload, ToothbrushSession):
            raise ModelError("toothbrush requires a session payload")
    elif kind is DeviceKind.TABLET_PRESENCE:
        if not isinstance(payload, TestOutcome):
            raise ModelError("tablet-presence requires a test outcome payload")
        if payload.compliant and payload.score is None:
            raise ModelError("compliant test outcome needs a score")
        if payload.score is not None and not 0 <= payload.score <= 100:
            raise ModelError("score out of range 0-100")
    else:  # pragma: no cover - enum is closed
        raise ModelError(f"unhandled kind {kind}")


def align_ts(ts: float) -> float:
    """Snap a timestamp to the microsecond grid (exact serialize round-trip)."""
    return round(ts * 1e6) / 1e6


@dataclass(frozen=True)
class SensorEvent:
    device_id: str
    home_ref: str  # cleartext home id inside the home; pseudonym after sync
    timestamp: float  # UTC epoch seconds
    kind: DeviceKind
    payload: Payload

    def __post_init__(self) -> None:
        _check_payload(self.kind, self.payload)
        object.__setattr__(self, "timestamp", align_ts(self.timestamp))

    def with_home_ref(self, ref: str) -> "SensorEvent":
        return SensorEvent(self.device_id, ref, self.timestamp, self.kind, self.payload)


@dataclass(frozen=True)
class Floorplan:
    rooms: tuple[tuple[str, str], ...]  # (room id, display name)
    adjacency: frozenset[frozenset]  # pairs of room ids
    placements: dict[str, tuple[str, Optional[str]]]  # device_id -> (room, target)

    def __post_init__(self) -> None:
        room_ids = {r for r, _ in self.rooms}
        for pair in self.adjacency:
            if not set(pair) <= room_ids:
                raise ModelError(f"adjacency references unknown room: {sorted(pair)}")
        for dev, (room, target) in self.placements.items():
            if room not in room_ids:
                raise ModelError(f"device {dev} placed in unknown room {room!r}")
            if target is not None and target not in TARGET_OBJECTS:
                raise ModelError(f"unknown target object {target!r} for {dev}")

    @property
    def room_ids(self) -> list[str]:
        return [r for r, _ in self.rooms]

    def adjacent(self, a: str, b: str) -> bool:
        return a == b or frozenset((a, b)) in self.adjacency


@dataclass(frozen=True)
class DeviceSpec:
    device_id: str
    kind: DeviceKind
    interval_s: Optional[int] = None  # periodic kinds only

    def __post_init__(self) -> None:
        if self.kind in PERIODIC_KINDS:
            iv = self.interval_s or DEFAULT_INTERVAL_S[self.kind]
            object.__setattr__(self, "interval_s", iv)
        elif self.interval_s is not None:
            raise ModelError(f"{self.kind.value} is event-driven, no interval allowed")


@dataclass(frozen=True)
class CaregiverWindow:
    weekday: int  # 0=Monday
    start_min: int  # local minute of day
    end_min: int

    def __post_init__(self) -> None:
        if not 0 <= self.weekday <= 6:
            raise ModelError("weekday out of range")
        if not 0 <= self.start_min < self.end_min <= 1440:
            raise ModelError("caregiver window must be a non-empty slice of one day")


@dataclass(frozen=True)
class HomeConfig:
    home_id: str
    floorplan: Floorplan
    devices: tuple[DeviceSpec, ...]
    caregiver_windows: tuple[CaregiverWindow, ...] = ()
    tz_minutes: int = 60
    unmonitorable: tuple[str, ...] = ()  # behaviors this home cannot observe

    def __post_init__(self) -> None:
        if not self.devices:
            raise ModelError("a home needs at least one device")
        ids = [d.device_id for d in self.devices]
        if len(set(ids)) != len(ids):
            raise ModelError("duplicate device id")
        for d in self.devices:
            if d.device_id not in self.floorplan.placements:
                raise ModelError(f"device {d.device_id} has no placement")
        seen: set[tuple[DeviceKind, str]] = set()
        for d in self.devices:
            _, target = self.floorplan.placements[d.device_id]
            if target is not None:
                key = (d.kind, target)
                if key in seen:
                    raise ModelError(f"two {d.kind.value} devices on target {target!r}")
                seen.add(key)
        by_day: dict[int, list[CaregiverWindow]] = {}
        for w in self.caregiver_windows:
            by_day.setdefault(w.weekday, []).append(w)
        for wins in by_day.values():
            wins.sort(key=lambda w: w.start_min)
            for a, b in zip(wins, wins[1:]):
                if b.start_min < a.end_min:
                    raise ModelError("caregiver windows overlap")

    def device(self, device_id: str) -> DeviceSpec:
        for d in self.devices:
            if d.device_id == device_id:
                return d
        raise KeyError(device_id)

    def find_device(self, kind: DeviceKind, target: Optional[str] = None) -> Optional[DeviceSpec]:
        for d in self.devices:
            if d.kind is not kind:
                continue
            room, tgt = self.floorplan.placements[d.device_id]
            if target is None or tgt == target:
                return d
        return None

    def devices_of(self, kind: DeviceKind) -> list[DeviceSpec]:
        return [d for d in self.devices if d.kind is kind]

    def room_of(self, device_id: str) -> str:
        return self.floorplan.placements[device_id][0]

    # -- local time helpers -------------------------------------------------

    def day_start_utc(self, date: dt.date) -> float:
        midnight = dt.datetime(date.year, date.month, date.day, tzinfo=dt.timezone.utc)
        return midnight.timestamp() - self.tz_minutes * 60

    def local_date(self, ts: float) -> dt.date:
        return dt.datetime.fromtimestamp(ts + self.tz_minutes * 60, dt.timezone.utc).date()

    def local_seconds(self, ts: float, date: dt.date) -> float:
        return ts - self.day_start_utc(date)

    def in_caregiver_window(self, ts: float) -> bool:
        date = self.local_date(ts)
        minute = self.local_seconds(ts, date) / 60.0
        wd = date.weekday()
        return any(
            w.weekday == wd and w.start_min <= minute < w.end_min
            for w in self.caregiver_windows
        )


COHORTS = ("neurodegenerative", "non-neurodegenerative")


@dataclass(frozen=True)
class SubjectProfile:
    subject_id: str
    cohort: str
    location_consent: bool = True
    # routine parameter overrides applied to the default behavior script
    routine: dict = field(default_factory=dict)

    def __post_init__(self) -> None:
        if self.cohort not in COHORTS:
            raise ModelError(f"unknown cohort {self.cohort!r}")


@dataclass(frozen=True)
class Identity:
    """Direct identifiers; never leaves the trusted side of the platform."""

    name: str
    home_id: str
