"""Daily behavioral feature extraction.

Every feature is computed from raw device streams plus the per-home metadata
(placements, reporting intervals, caregiver schedule, meal windows). Events
inside caregiver windows are never attributed to the subject. A feature is
either valued or flagged missing, never both; features whose backing device
is absent from the home are missing permanently.
"""

from __future__ import annotations

import csv
import datetime as dt
from dataclasses import dataclass, field
from typing import Iterable, Optional, Sequence

import numpy as np

from . import curation, kernels
from .model import CaregiverWindow, DeviceKind, HomeConfig, SensorEvent
from .streams import PHASE_CODES, Stream, events_to_streams

TEMP_PEAK_THRESHOLD_C = 3.0
HUM_PEAK_THRESHOLD_RH = 10.0
PEAK_BASELINE_WINDOW_S = 7200.0  # trailing median span
PEAK_MERGE_GAP_S = 900.0  # runs closer than this merge into one peak
OUTING_QUIET_S = 900.0  # indoor silence needed after a door event
OCCUPANCY_CAP_S = 1800.0  # max dwell attributed to one motion event
NIGHT_WINDOW = (20 * 3600.0, 11 * 3600.0)  # prev-day 20:00 .. 11:00, wake-up date
MIN_SLEEP_SAMPLES = 60
COVERAGE_MIN = 0.5
MIN_PIR_EVENTS = 5

DEFAULT_LUNCH_WINDOW = (690, 840)  # local minutes, 11:30-14:00
DEFAULT_DINNER_WINDOW = (1110, 1290)


class UnknownHome(KeyError):
    pass


@dataclass(frozen=True)
class HomeMeta:
    """Pseudonym-safe home metadata needed to interpret events. Carries no
    direct identifier."""

    tz_minutes: int
    rooms: tuple[str, ...]
    devices: dict[str, dict]  # device_id -> {kind, interval_s, room, target}
    caregiver_windows: tuple[CaregiverWindow, ...] = ()
    lunch_window: tuple[int, int] = DEFAULT_LUNCH_WINDOW
    dinner_window: tuple[int, int] = DEFAULT_DINNER_WINDOW
    unmonitorable: tuple[str, ...] = ()

    @classmethod
    def from_home(cls, home: HomeConfig) -> "HomeMeta":
        devices = {}
        for d in home.devices:
            room, target = home.floorplan.placements[d.device_id]
            devices[d.device_id] = {
                "kind": d.kind.value,
                "interval_s": d.interval_s,
                "room": room,
                "target": target,
            }
        return cls(
            tz_minutes=home.tz_minutes,
            rooms=tuple(home.floorplan.room_ids),
            devices=devices,
            caregiver_windows=home.caregiver_windows,
            unmonitorable=home.unmonitorable,
        )

    def to_json(self) -> dict:
        return {
            "tz_minutes": self.tz_minutes,
            "rooms": list(self.rooms),
            "devices": self.devices,
            "caregiver_windows": [
                {"weekday": w.weekday, "start_min": w.start_min, "end_min": w.end_min}
                for w in self.caregiver_windows
            ],
            "lunch_window": list(self.lunch_window),
            "dinner_window": list(self.dinner_window),
            "unmonitorable": list(self.unmonitorable),
        }

    @classmethod
    def from_json(cls, doc: dict) -> "HomeMeta":
        return cls(
            tz_minutes=doc["tz_minutes"],
            rooms=tuple(doc["rooms"]),
            devices=doc["devices"],
            caregiver_windows=tuple(
                CaregiverWindow(w["weekday"], w["start_min"], w["end_min"])
                for w in doc["caregiver_windows"]
            ),
            lunch_window=tuple(doc["lunch_window"]),
            dinner_window=tuple(doc["dinner_window"]),
            unmonitorable=tuple(doc["unmonitorable"]),
        )

    # -- lookups -------------------------------------------------------------

    def find(self, kind: DeviceKind, target: Optional[str] = None) -> Optional[str]:
        for dev, info in self.devices.items():
            if info["kind"] != kind.value:
                continue
            if target is None or info["target"] == target:
                return dev
        return None

    def of_kind(self, kind: DeviceKind) -> list[str]:
        return [d for d, info in self.devices.items() if info["kind"] == kind.value]

    def interval(self, dev: str) -> float:
        return float(self.devices[dev]["interval_s"])

    def room(self, dev: str) -> str:
        return self.devices[dev]["room"]

    def day_start_utc(self, date: dt.date) -> float:
        midnight = dt.datetime(date.year, date.month, date.day, tzinfo=dt.timezone.utc)
        return midnight.timestamp() - self.tz_minutes * 60

    def caregiver_mask(self, ts: np.ndarray, date: dt.date) -> np.ndarray:
        """True where a timestamp falls inside a caregiver window."""
        out = np.zeros(len(ts), dtype=bool)
        if not self.caregiver_windows or len(ts) == 0:
            return out
        for offset in (-1, 0, 1):
            d = date + dt.timedelta(days=offset)
            day0 = self.day_start_utc(d)
            wd = d.weekday()
            for w in self.caregiver_windows:
                if w.weekday == wd:
                    out |= (ts >= day0 + w.start_min * 60) & (ts < day0 + w.end_min * 60)
        return out


# -- feature catalog -----------------------------------------------------------

BASE_FEATURES = (
    "lunch_cooking_peaks",
    "dinner_cooking_peaks",
    "fridge_openings",
    "pantry_openings",
    "shower_events",
    "toothbrush_sessions",
    "sleep_total_min",
    "sleep_deep_min",
    "sleep_rem_min",
    "sleep_light_min",
    "wake_up_count",
    "medicine_accesses",
    "steps",
    "outings",
    "lunchtime_outings",
    "outing_minutes",
    "test_compliance",
    "test_score",
)

CATEGORY = {
    "lunch_cooking_peaks": "nutrition",
    "dinner_cooking_peaks": "nutrition",
    "fridge_openings": "nutrition",
    "pantry_openings": "nutrition",
    "shower_events": "hygiene",
    "toothbrush_sessions": "hygiene",
    "sleep_total_min": "sleep",
    "sleep_deep_min": "sleep",
    "sleep_rem_min": "sleep",
    "sleep_light_min": "sleep",
    "wake_up_count": "sleep",
    "medicine_accesses": "therapy",
    "steps": "mobility-home",
    "outings": "mobility-outdoor",
    "lunchtime_outings": "mobility-outdoor",
    "outing_minutes": "mobility-outdoor",
    "test_compliance": "cognition",
    "test_score": "cognition",
}

SEASON_SENSITIVE = frozenset({"outings", "lunchtime_outings", "outing_minutes"})

# Explanation groups pair the two lunch-habit features across categories.
EXPLANATION_GROUP = dict(CATEGORY)
EXPLANATION_GROUP["lunch_cooking_peaks"] = "lunch-habits"
EXPLANATION_GROUP["lunchtime_outings"] = "lunch-habits"


def feature_names(meta: HomeMeta) -> list[str]:
    names = list(BASE_FEATURES)
    names += [f"occupancy_{room}_min" for room in meta.rooms]
    return names


def category_of(feature: str) -> str:
    return CATEGORY.get(feature, "mobility-home")


def explanation_group_of(feature: str) -> str:
    return EXPLANATION_GROUP.get(feature, category_of(feature))


@dataclass
class DailyFeatureVector:
    home_ref: str
    date: dt.date
    values: dict[str, float] = field(default_factory=dict)
    missing: set[str] = field(default_factory=set)
    low_confidence: set[str] = field(default_factory=set)

    def get(self, name: str) -> Optional[float]:
        return self.values.get(name)


# -- peak detection --------------------------------------------------------------


def count_peak_runs(
    ls: np.ndarray, values: np.ndarray, threshold: float
) -> list[tuple[float, float]]:
    """Merged above-baseline runs as (start_s, end_s); baseline is the trailing
    2h median. Input times are local seconds, imputation already applied."""
    if len(ls) == 0:
        return []
    baseline = kernels.trailing_median(
        np.asarray(ls, dtype=np.float64),
        np.asarray(values, dtype=np.float64),
        PEAK_BASELINE_WINDOW_S,
    )
    above = values >= baseline + threshold
    runs: list[tuple[float, float]] = []
    i = 0
    n = len(ls)
    while i < n:
        if above[i]:
            j = i
            while j + 1 < n and above[j + 1]:
                j += 1
            runs.append((float(ls[i]), float(ls[j])))
            i = j + 1
        else:
            i += 1
    merged: list[tuple[float, float]] = []
    for s, e in runs:
        if merged and s - merged[-1][1] < PEAK_MERGE_GAP_S:
            merged[-1] = (merged[-1][0], e)
        else:
            merged.append((s, e))
    return merged


def detect_temperature_peaks(
    ls: np.ndarray, values: np.ndarray, window_min: tuple[int, int],
    threshold: float = TEMP_PEAK_THRESHOLD_C,
) -> int:
    """Peaks whose run starts inside the local-minute window."""
    w0, w1 = window_min[0] * 60.0, window_min[1] * 60.0
    runs = count_peak_runs(ls, values, threshold)
    return sum(1 for s, _ in runs if w0 <= s < w1)


# -- outings ---------------------------------------------------------------------


def detect_outings(
    door_ts: np.ndarray,
    activity_ts: np.ndarray,
    day_end_s: float = 86400.0,
    caregiver: Optional[np.ndarray] = None,
) -> list[tuple[float, float]]:
    """Outing = door event followed by >= 15 min with no indoor activity,
    ending at the last door event before activity resumes. Door events inside
    caregiver windows are not usable as boundaries. Times are local seconds."""
    door_ts = np.asarray(door_ts, dtype=np.float64)
    activity_ts = np.asarray(activity_ts, dtype=np.float64)
    if caregiver is None:
        caregiver = np.zeros(len(door_ts), dtype=bool)
    outings: list[tuple[float, float]] = []
    i = 0
    n = len(door_ts)
    while i < n:
        t0 = float(door_ts[i])
        if caregiver[i]:
            i += 1
            continue
        later = activity_ts[activity_ts > t0]
        quiet_until = float(later[0]) if len(later) else day_end_s
        if quiet_until - t0 < OUTING_QUIET_S:
            i += 1
            continue
        inner = door_ts[(door_ts > t0) & (door_ts < quiet_until)]
        t1 = float(inner[-1]) if len(inner) else min(quiet_until, day_end_s)
        outings.append((t0, t1))
        while i < n and door_ts[i] <= t1:
            i += 1
    return outings


# -- sleep -----------------------------------------------------------------------


def extract_sleep(
    night_ls: np.ndarray,
    night_phase: np.ndarray,
    interval_s: float,
    bedroom_presence_ls: Optional[np.ndarray] = None,
) -> dict[str, float]:
    """Phase minutes and wake-up count for one night-window sample set.

    ``night_ls`` is seconds relative to the attribution day's local midnight
    (evening samples are negative). Wake-ups are awake runs of >= 2 samples
    strictly inside the episode. ``bedroom_presence_ls`` only corroborates
    the episode; the caller uses it to tell "mat silent but bedroom occupied"
    (a likely device fault) apart from an absent subject.
    """
    minutes_per_sample = interval_s / 60.0
    counts = {name: int(np.sum(night_phase == code)) for name, code in PHASE_CODES.items()}
    total = counts["light"] + counts["deep"] + counts["rem"]
    wakeups = 0
    phase = night_phase
    i, n = 0, len(phase)
    while i < n:
        if phase[i] == PHASE_CODES["awake"]:
            j = i
            while j < n and phase[j] == PHASE_CODES["awake"]:
                j += 1
            if j - i >= 2 and i > 0 and j < n:
                wakeups += 1
            i = j
        else:
            i += 1
    return {
        "sleep_total_min": total * minutes_per_sample,
        "sleep_deep_min": counts["deep"] * minutes_per_sample,
        "sleep_rem_min": counts["rem"] * minutes_per_sample,
        "sleep_light_min": counts["light"] * minutes_per_sample,
        "wake_up_count": float(wakeups),
    }


# -- daily extraction --------------------------------------------------------------


def _imputed_series(stream: Stream, day0: float, interval: float):
    """Local-second series with small gaps linearly imputed; missing slots
    (large gaps) are dropped from the returned arrays."""
    ls = stream.ts - day0
    gaps = []
    if len(ls) >= 2:
        deltas = np.diff(ls)
        for i in np.nonzero(deltas > 2 * interval)[0]:
            missed = int(round(deltas[i] / interval)) - 1
            gaps.append(
                curation.Gap("", float(ls[i]), float(ls[i + 1]), missed)
            )
    ts2, vals2, mask2 = curation.impute(ls, stream.cols["value"], gaps, interval)
    valid = mask2 != curation.MASK_MISSING
    return ts2[valid], vals2[valid]


def _window_coverage(ls: np.ndarray, w0: float, w1: float, interval: float) -> float:
    expected = max(1.0, (w1 - w0) / interval)
    have = float(np.sum((ls >= w0) & (ls < w1)))
    return have / expected


def extract_daily_streams(
    streams: dict[str, Stream],
    meta: HomeMeta,
    date: dt.date,
    night_sleep: tuple[np.ndarray, np.ndarray] | None = None,
    home_ref: str = "",
) -> DailyFeatureVector:
    """Compute the full daily vector from columnar streams.

    ``night_sleep`` carries the attribution-window sleep samples as
    (local_seconds_relative_to_this_day, phase_codes); when None, the sleep
    features are computed from this day's sleep stream clipped to the window.
    """
    day0 = meta.day_start_utc(date)
    vec = DailyFeatureVector(home_ref=home_ref, date=date)
    names = feature_names(meta)

    def give(name: str, value: float) -> None:
        vec.values[name] = float(value)

    def miss(name: str) -> None:
        vec.missing.add(name)

    # --- cooking peaks (stove temperature) ---
    stove = meta.find(DeviceKind.TEMPERATURE, "stove")
    for feat, window in (
        ("lunch_cooking_peaks", meta.lunch_window),
        ("dinner_cooking_peaks", meta.dinner_window),
    ):
        if stove is None:
            miss(feat)
            continue
        stream = streams.get(stove)
        interval = meta.interval(stove)
        if stream is None or len(stream) == 0:
            miss(feat)
            continue
        ls, vals = _imputed_series(stream, day0, interval)
        w0, w1 = window[0] * 60.0, window[1] * 60.0
        if _window_coverage(ls, w0, w1, interval) < COVERAGE_MIN:
            miss(feat)
            continue
        give(feat, detect_temperature_peaks(ls, vals, window))

    # --- showers (bathroom humidity peaks over the whole day) ---
    hum = meta.find(DeviceKind.HUMIDITY, "shower")
    if hum is None or hum not in streams or len(streams[hum]) == 0:
        miss("shower_events")
    else:
        interval = meta.interval(hum)
        ls, vals = _imputed_series(streams[hum], day0, interval)
        if _window_coverage(ls, 0.0, 86400.0, interval) < COVERAGE_MIN:
            miss("shower_events")
        else:
            give("shower_events", len(count_peak_runs(ls, vals, HUM_PEAK_THRESHOLD_RH)))

    # --- contact counters ---
    for feat, target in (
        ("fridge_openings", "fridge"),
        ("pantry_openings", "pantry"),
        ("medicine_accesses", "medicine-cabinet"),
    ):
        dev = meta.find(DeviceKind.MAGNETIC_CONTACT, target)
        if dev is None:
            miss(feat)
            continue
        stream = streams.get(dev)
        if stream is None:
            give(feat, 0)
            continue
        give(feat, int(np.sum(stream.cols["state"] == 1)))

    # --- toothbrush sessions ---
    tb = meta.find(DeviceKind.TOOTHBRUSH)
    if tb is None:
        miss("toothbrush_sessions")
    else:
        give("toothbrush_sessions", len(streams.get(tb, Stream(DeviceKind.TOOTHBRUSH, np.empty(0)))))

    # --- sleep ---
    mat = meta.find(DeviceKind.SLEEP_MAT, "bed")
    if mat is None:
        for f in ("sleep_total_min", "sleep_deep_min", "sleep_rem_min", "sleep_light_min", "wake_up_count"):
            miss(f)
    else:
        if night_sleep is None:
            stream = streams.get(mat)
            if stream is None:
                night_ls = np.empty(0)
                night_phase = np.empty(0, dtype=np.int8)
            else:
                ls = stream.ts - day0
                keep = ls < NIGHT_WINDOW[1]
                night_ls, night_phase = ls[keep], stream.cols["phase"][keep]
        else:
            night_ls, night_phase = night_sleep
        if len(night_ls) < MIN_SLEEP_SAMPLES:
            for f in ("sleep_total_min", "sleep_deep_min", "sleep_rem_min", "sleep_light_min", "wake_up_count"):
                miss(f)
            # silent mat while the bedroom PIR saw night activity smells like
            # the mat was unplugged; mark the gap as suspicious
            bed_pir = next(
                (d for d in meta.of_kind(DeviceKind.MOTION_PIR) if meta.room(d) == meta.room(mat)),
                None,
            )
            if bed_pir is not None and bed_pir in streams:
                pls = streams[bed_pir].ts - day0
                if int(np.sum((pls >= -4 * 3600.0) & (pls < NIGHT_WINDOW[1]))) >= 2:
                    vec.low_confidence.add("sleep_total_min")
        else:
            for name, value in extract_sleep(night_ls, night_phase, meta.interval(mat)).items():
                give(name, value)

    # --- occupancy + indoor activity (subject-attributed) ---
    pir_devs = meta.of_kind(DeviceKind.MOTION_PIR)
    act_ts: list[np.ndarray] = []
    act_room: list[np.ndarray] = []
    for dev in pir_devs:
        s = streams.get(dev)
        if s is None or len(s) == 0:
            continue
        keep = ~meta.caregiver_mask(s.ts, date)
        ts = s.ts[keep]
        act_ts.append(ts)
        act_room.append(np.full(len(ts), meta.rooms.index(meta.room(dev)), dtype=np.int64))
    presence_devs = meta.of_kind(DeviceKind.PRESENCE_MMWAVE)
    presence_ts = []
    for dev in presence_devs:
        s = streams.get(dev)
        if s is None or len(s) == 0:
            continue
        on = s.cols["state"] == 1
        keep = on & ~meta.caregiver_mask(s.ts, date)
        presence_ts.append(s.ts[keep])
    if act_ts:
        all_ts = np.concatenate(act_ts)
        all_room = np.concatenate(act_room)
        order = np.argsort(all_ts, kind="stable")
        all_ts, all_room = all_ts[order], all_room[order]
    else:
        all_ts = np.empty(0)
        all_room = np.empty(0, dtype=np.int64)

    if not pir_devs or len(all_ts) < MIN_PIR_EVENTS:
        for room in meta.rooms:
            miss(f"occupancy_{room}_min")
    else:
        day_end = day0 + 86400.0
        nxt = np.append(all_ts[1:], day_end)
        dwell = np.minimum(nxt - all_ts, OCCUPANCY_CAP_S)
        for idx, room in enumerate(meta.rooms):
            give(f"occupancy_{room}_min", float(dwell[all_room == idx].sum() / 60.0))

    # --- steps ---
    watch = meta.find(DeviceKind.SMARTWATCH)
    if watch is None:
        miss("steps")
    else:
        stream = streams.get(watch)
        interval = meta.interval(watch)
        if stream is None or len(stream) / (86400.0 / interval) < COVERAGE_MIN:
            miss("steps")
        else:
            give("steps", float(stream.cols["value"].sum()))

    # --- outings ---
    door = meta.find(DeviceKind.ENTRANCE_DOOR_CONTACT, "entrance-door")
    if door is None:
        for f in ("outings", "lunchtime_outings", "outing_minutes"):
            miss(f)
    else:
        s = streams.get(door)
        door_ts = s.ts if s is not None else np.empty(0)
        indoor = [all_ts] + presence_ts
        indoor_ts = np.sort(np.concatenate(indoor)) if indoor else np.empty(0)
        cg = meta.caregiver_mask(door_ts, date)
        outings = detect_outings(door_ts - day0, indoor_ts - day0, 86400.0, cg)
        lunch0, lunch1 = meta.lunch_window[0] * 60.0, meta.lunch_window[1] * 60.0
        give("outings", len(outings))
        give("lunchtime_outings", sum(1 for s0, e0 in outings if s0 < lunch1 and e0 > lunch0))
        give("outing_minutes", sum(e0 - s0 for s0, e0 in outings) / 60.0)
        if bool(cg.any()):
            vec.low_confidence.update(("outings", "lunchtime_outings", "outing_minutes"))

    # --- cognitive test ---
    tablet = meta.find(DeviceKind.TABLET_PRESENCE)
    if tablet is None:
        miss("test_compliance")
        miss("test_score")
    else:
        s = streams.get(tablet)
        if s is None or len(s) == 0:
            miss("test_compliance")
            miss("test_score")
        else:
            compliant = int(s.cols["compliant"][-1])
            give("test_compliance", compliant)
            score = int(s.cols["score"][-1])
            if compliant and score >= 0:
                give("test_score", score)
            else:
                miss("test_score")

    # sanity: every catalog feature is valued xor missing
    for name in names:
        if name not in vec.values and name not in vec.missing:
            vec.missing.add(name)
        assert not (name in vec.values and name in vec.missing)
    return vec


def night_slice(
    prev_streams: dict[str, Stream] | None,
    today_streams: dict[str, Stream],
    meta: HomeMeta,
    date: dt.date,
) -> tuple[np.ndarray, np.ndarray] | None:
    """Sleep samples in [prev 20:00, today 11:00), relative to today's midnight."""
    mat = meta.find(DeviceKind.SLEEP_MAT, "bed")
    if mat is None:
        return None
    day0 = meta.day_start_utc(date)
    parts_ls = []
    parts_ph = []
    if prev_streams is not None and mat in prev_streams:
        s = prev_streams[mat]
        ls = s.ts - day0  # negative for the previous evening
        keep = ls >= NIGHT_WINDOW[0] - 86400.0
        parts_ls.append(ls[keep])
        parts_ph.append(s.cols["phase"][keep])
    if mat in today_streams:
        s = today_streams[mat]
        ls = s.ts - day0
        keep = ls < NIGHT_WINDOW[1]
        parts_ls.append(ls[keep])
        parts_ph.append(s.cols["phase"][keep])
    if not parts_ls:
        return np.empty(0), np.empty(0, dtype=np.int8)
    return np.concatenate(parts_ls), np.concatenate(parts_ph)


def extract_daily(
    events: Sequence[SensorEvent],
    meta: HomeMeta,
    date: dt.date,
    prev_evening_events: Sequence[SensorEvent] = (),
    home_ref: str = "",
) -> DailyFeatureVector:
    """Event-object entry point (see :func:`extract_daily_streams`)."""
    streams = events_to_streams(events)
    prev = events_to_streams(prev_evening_events) if prev_evening_events else None
    night = night_slice(prev, streams, meta, date)
    return extract_daily_streams(streams, meta, date, night_sleep=night, home_ref=home_ref)


def extract_range(
    days: list[tuple[dt.date, dict[str, Stream]]],
    meta: HomeMeta,
    home_ref: str = "",
) -> list[DailyFeatureVector]:
    """Extract consecutive days, wiring each day's previous evening through."""
    out = []
    prev: dict[str, Stream] | None = None
    for date, streams in days:
        night = night_slice(prev, streams, meta, date)
        out.append(extract_daily_streams(streams, meta, date, night_sleep=night, home_ref=home_ref))
        prev = streams
    return out


# -- columnar table io -------------------------------------------------------------

TABLE_HEADER = "#homedrift-features 1"


def write_feature_table(vectors: Iterable[DailyFeatureVector], meta: HomeMeta, fh) -> None:
    names = feature_names(meta)
    fh.write(TABLE_HEADER + "\n")
    writer = csv.writer(fh, lineterminator="\n")
    writer.writerow(["date"] + names + ["low_confidence"])
    for v in vectors:
        row = [v.date.isoformat()]
        for name in names:
            row.append("" if name in v.missing else repr(v.values[name]))
        row.append(";".join(sorted(v.low_confidence)))
        writer.writerow(row)


def read_feature_table(fh, home_ref: str = "") -> list[DailyFeatureVector]:
    header = fh.readline().rstrip("\n")
    if header != TABLE_HEADER:
        raise ValueError(f"not a feature table: {header!r}")
    reader = csv.reader(fh)
    names = next(reader)
    assert names[0] == "date" and names[-1] == "low_confidence"
    feature_cols = names[1:-1]
    out = []
    for row in reader:
        if not row:
            continue
        v = DailyFeatureVector(home_ref=home_ref, date=dt.date.fromisoformat(row[0]))
        for name, cell in zip(feature_cols, row[1:-1]):
            if cell == "":
                v.missing.add(name)
            else:
                v.values[name] = float(cell)
        if row[-1]:
            v.low_confidence = set(row[-1].split(";"))
        out.append(v)
    return out
