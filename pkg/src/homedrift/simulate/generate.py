"""Per-day sensor trace generation.

A day is planned in local time as activity blocks (sleep, meals, hygiene,
medicine, outings) plus a first-order Markov walk between blocks, then each
device synthesizes its stream from the plan. Streams are columnar numpy
arrays; :class:`SensorEvent` objects are materialized only at serialization
boundaries.

All randomness is derived from (seed, home id, date ordinal, purpose tag),
so any day of any home can be regenerated independently and identically.
"""

from __future__ import annotations

import datetime as dt
import hashlib
from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from .. import kernels
from ..model import (
    BinaryState,
    DeviceKind,
    LocationFix,
    ScalarReading,
    SensorEvent,
    SleepSample,
    TestOutcome,
    ToothbrushSession,
    align_ts,
)
from ..streams import OUT_OF_BED, PHASE_CODES, PHASE_NAMES, Stream
from .scripts import BEHAVIOR_ROLE, ROOMS, BehaviorScript, SimulatedHome

STOVE_DELTA_C = 8.0
STOVE_TAU_S = 1200.0
SHOWER_DELTA_RH = 25.0
SHOWER_TAU_S = 900.0

_TAG_NIGHT = 1
_TAG_DAY = 2
_TAG_TEST = 3
_TAG_CAREGIVER = 4


class InconsistentConfig(ValueError):
    """Script expects a target object the home neither hosts nor declares missing."""


def _rng(seed: int, home_id: str, ordinal: int, tag: int) -> np.random.Generator:
    digest = hashlib.sha256(f"{seed}:{home_id}:{ordinal}:{tag}".encode()).digest()
    key = int.from_bytes(digest[:16], "big")
    return np.random.Generator(np.random.Philox(key=key))


def home_base_coords(home_id: str) -> tuple[float, float]:
    digest = hashlib.sha256(home_id.encode()).digest()
    u = int.from_bytes(digest[:4], "big") / 2**32
    v = int.from_bytes(digest[4:8], "big") / 2**32
    return 45.40 + 0.12 * u, 9.10 + 0.16 * v


@dataclass
class NightPlan:
    bed_min: float  # local minute the episode starts (on its own day)
    wake_min: float  # local minute it ends (next day)
    phases: np.ndarray  # per-minute code over the episode; OUT_OF_BED = gap
    excursions: list[tuple[int, int]]  # (minute offset in episode, duration min)

    @property
    def evening_minutes(self) -> int:
        return int(round(1440 - self.bed_min))

    def phase_counts(self, first_minute: int = 0) -> dict[str, int]:
        part = self.phases[first_minute:]
        return {name: int(np.sum(part == code)) for name, code in PHASE_CODES.items()}

    def wakeup_runs(self, first_minute: int = 0) -> int:
        """Awake runs of >= 2 samples strictly inside the (sub)episode.

        Counted over the emitted sample sequence, i.e. out-of-bed minutes are
        dropped first, exactly as the mat reports it.
        """
        part = self.phases[first_minute:]
        part = part[part != OUT_OF_BED]
        runs = 0
        i = 0
        n = len(part)
        while i < n:
            if part[i] == PHASE_CODES["awake"]:
                j = i
                while j < n and part[j] == PHASE_CODES["awake"]:
                    j += 1
                if j - i >= 2 and i > 0 and j < n:
                    runs += 1
                i = j
            else:
                i += 1
        return runs


@dataclass
class Block:
    start_s: float
    end_s: float
    room: str
    tag: str
    hot: bool = False
    shower: bool = False
    microwave: bool = False


@dataclass
class DayTruth:
    lunch_mode: str = "cold"
    dinner_mode: str = "cold"
    breakfast_hot: bool = False
    shower: bool = False
    toothbrush_sessions: int = 0
    medicine_accesses: int = 0
    outings: list[tuple[float, float, bool]] = field(default_factory=list)  # (s, e, detectable)
    sleep: dict[str, int] = field(default_factory=dict)
    wake_ups: int = 0
    steps: int = 0
    test_compliant: Optional[bool] = None
    test_score: Optional[int] = None

    def as_dict(self) -> dict:
        return {
            "lunch_mode": self.lunch_mode,
            "dinner_mode": self.dinner_mode,
            "breakfast_hot": self.breakfast_hot,
            "shower": self.shower,
            "toothbrush_sessions": self.toothbrush_sessions,
            "medicine_accesses": self.medicine_accesses,
            "outings": [[round(s, 1), round(e, 1), det] for s, e, det in self.outings],
            "sleep": self.sleep,
            "wake_ups": self.wake_ups,
            "steps": self.steps,
            "test_compliant": self.test_compliant,
            "test_score": self.test_score,
        }


@dataclass
class DayTrace:
    home_id: str
    date: dt.date
    day_start_utc: float
    streams: dict[str, Stream]
    truth: DayTruth
    night_prev: Optional[NightPlan] = None
    night_tonight: Optional[NightPlan] = None

    def event_count(self) -> int:
        return sum(len(s) for s in self.streams.values())

    def count_of_kind(self, kind: DeviceKind) -> int:
        return sum(len(s) for s in self.streams.values() if s.kind is kind)

    def to_events(self) -> list[SensorEvent]:
        out: list[SensorEvent] = []
        for dev_id, stream in self.streams.items():
            k = stream.kind
            for i in range(len(stream.ts)):
                ts = float(stream.ts[i])
                if k in (
                    DeviceKind.MAGNETIC_CONTACT,
                    DeviceKind.ENTRANCE_DOOR_CONTACT,
                ):
                    payload = BinaryState("open" if stream.cols["state"][i] else "closed")
                elif k in (DeviceKind.MOTION_PIR, DeviceKind.PRESENCE_MMWAVE):
                    payload = BinaryState("on" if stream.cols["state"][i] else "off")
                elif k is DeviceKind.TEMPERATURE:
                    payload = ScalarReading(float(stream.cols["value"][i]), "C")
                elif k is DeviceKind.HUMIDITY:
                    payload = ScalarReading(float(stream.cols["value"][i]), "RH%")
                elif k is DeviceKind.SMART_PLUG_POWER:
                    payload = ScalarReading(float(stream.cols["value"][i]), "W")
                elif k is DeviceKind.SMARTWATCH:
                    payload = ScalarReading(float(stream.cols["value"][i]), "steps")
                elif k is DeviceKind.SLEEP_MAT:
                    payload = SleepSample(PHASE_NAMES[int(stream.cols["phase"][i])])
                elif k is DeviceKind.LOCATION_SOURCE:
                    payload = LocationFix(
                        float(stream.cols["lat"][i]),
                        float(stream.cols["lon"][i]),
                        float(stream.cols["acc"][i]),
                    )
                elif k is DeviceKind.TOOTHBRUSH:
                    payload = ToothbrushSession(float(stream.cols["dur"][i]))
                else:  # tablet-presence test outcome
                    score = int(stream.cols["score"][i])
                    payload = TestOutcome(bool(stream.cols["compliant"][i]), None if score < 0 else score)
                out.append(SensorEvent(dev_id, self.home_id, ts, k, payload))
        out.sort(key=lambda e: (e.timestamp, e.device_id))
        return out


def _strict_increase(ts: np.ndarray) -> np.ndarray:
    """Sort and nudge duplicate per-device timestamps apart by 1 ms."""
    ts = np.sort(ts)
    for i in range(1, len(ts)):
        if ts[i] <= ts[i - 1]:
            ts[i] = ts[i - 1] + 1e-3
    return np.array([align_ts(t) for t in ts]) if len(ts) else ts


# -- night plan ----------------------------------------------------------------


def night_plan(script: BehaviorScript, rng: np.random.Generator) -> NightPlan:
    if not script.sleep_block_enabled:
        return NightPlan(bed_min=1440.0, wake_min=0.0, phases=np.empty(0, dtype=np.int8), excursions=[])
    bed = float(np.clip(rng.normal(script.bed_time_min, script.bed_jitter_min), 1230, 1438))
    wake = float(np.clip(rng.normal(script.wake_time_min, script.wake_jitter_min), 300, 660))
    total = int(round(1440 - bed)) + int(round(wake))

    n_wakeups = int(rng.poisson(script.wakeups_mean))
    n_excursions = int(rng.poisson(script.night_excursions_mean))
    inserts: list[np.ndarray] = []
    for _ in range(n_wakeups):
        inserts.append(np.zeros(int(rng.integers(2, 6)), dtype=np.int8))
    excursion_durs = []
    for _ in range(n_excursions):
        gap = int(rng.integers(4, 11))
        excursion_durs.append(gap + 3)
        inserts.append(np.array([0, 0] + [OUT_OF_BED] * gap + [0], dtype=np.int8))
    insert_total = sum(len(a) for a in inserts)
    sleep_minutes = max(total - insert_total, 60)

    fd = float(np.clip(rng.normal(script.deep_frac, script.frac_jitter), 0.02, 0.6))
    fr = float(np.clip(rng.normal(script.rem_frac, script.frac_jitter), 0.02, 0.6))
    n_deep = int(round(fd * sleep_minutes))
    n_rem = int(round(fr * sleep_minutes))
    n_light = sleep_minutes - n_deep - n_rem

    # arrange phases in ~95-minute cycles: light, deep, light, rem
    n_cycles = max(1, sleep_minutes // 95)
    seq: list[np.ndarray] = []
    deep_left, rem_left, light_left = n_deep, n_rem, n_light
    for c in range(n_cycles):
        cycles_left = n_cycles - c
        d = deep_left // cycles_left
        r = rem_left // cycles_left
        l = light_left // cycles_left
        seq.append(np.full(l - l // 2, PHASE_CODES["light"], dtype=np.int8))
        seq.append(np.full(d, PHASE_CODES["deep"], dtype=np.int8))
        seq.append(np.full(l // 2, PHASE_CODES["light"], dtype=np.int8))
        seq.append(np.full(r, PHASE_CODES["rem"], dtype=np.int8))
        deep_left -= d
        rem_left -= r
        light_left -= l
    seq.append(np.full(light_left, PHASE_CODES["light"], dtype=np.int8))
    seq.append(np.full(deep_left, PHASE_CODES["deep"], dtype=np.int8))
    seq.append(np.full(rem_left, PHASE_CODES["rem"], dtype=np.int8))
    phases = np.concatenate(seq)

    # splice wake-ups and excursions at random interior points
    excursions: list[tuple[int, int]] = []
    if inserts:
        margin = min(20, len(phases) // 4)
        points = np.sort(rng.integers(margin, max(margin + 1, len(phases) - margin), len(inserts)))
        pieces = []
        prev = 0
        offset = 0
        for pt, ins in zip(points, inserts):
            pieces.append(phases[prev:pt])
            offset += pt - prev
            if OUT_OF_BED in ins:
                excursions.append((offset + 2, int(np.sum(ins == OUT_OF_BED))))
            pieces.append(ins)
            offset += len(ins)
            prev = pt
        pieces.append(phases[prev:])
        phases = np.concatenate(pieces)

    return NightPlan(bed_min=bed, wake_min=wake, phases=phases, excursions=excursions)


# -- day plan ------------------------------------------------------------------


def _season_factor(date: dt.date) -> float:
    doy = date.timetuple().tm_yday
    return float(np.cos(2 * np.pi * (doy - 202) / 365.25))


def _draw_in(rng: np.random.Generator, lo: float, hi: float) -> float:
    return float(rng.uniform(lo, hi))


@dataclass
class DayPlan:
    wake_s: float
    bed_s: float
    blocks: list[Block]
    outings: list[tuple[float, float]]
    truth: DayTruth


def plan_day(
    script: BehaviorScript,
    date: dt.date,
    wake_min: float,
    bed_min: float,
    rng: np.random.Generator,
) -> DayPlan:
    truth = DayTruth()
    wake_s = wake_min * 60.0
    bed_s = bed_min * 60.0
    blocks: list[Block] = []
    outings: list[tuple[float, float]] = []

    # morning hygiene
    hyg_start = wake_s + 300
    shower = rng.random() < script.shower_prob
    brush_am = rng.random() < script.toothbrush_morning_prob
    if shower or brush_am:
        blocks.append(Block(hyg_start, hyg_start + (720 if shower else 360), "bathroom", "hygiene", shower=shower))
    truth.shower = shower

    # breakfast (draw both uniforms unconditionally to keep the stream stable)
    u_hot_b = rng.random()
    if script.breakfast.enabled:
        lo = max(wake_s + 1500, script.breakfast.window[0] * 60)
        b_start = _draw_in(rng, lo, max(script.breakfast.window[1] * 60 - 1500, lo + 60))
        hot_b = u_hot_b < script.breakfast.hot_prob
        blocks.append(
            Block(b_start, b_start + (1500 if hot_b else 900), "kitchen", "breakfast", hot=hot_b, microwave=not hot_b and rng.random() < 0.35)
        )
        truth.breakfast_hot = hot_b

    # lunch: outing beats cooking beats cold
    u_out, u_hot = rng.random(), rng.random()
    lw0, lw1 = script.lunch.window[0] * 60, script.lunch.window[1] * 60
    if not script.lunch.enabled:
        truth.lunch_mode = "none"
    elif u_out < script.lunch.out_prob:
        truth.lunch_mode = "out"
        start = _draw_in(rng, lw0, lw1 - 3600)
        outings.append((start, start + _draw_in(rng, 2700, 5400)))
    elif u_hot < script.lunch.hot_prob:
        truth.lunch_mode = "hot"
        dur = _draw_in(rng, 1500, 2400)
        start = _draw_in(rng, lw0 + 300, lw1 - dur - 600)
        blocks.append(Block(start, start + dur, "kitchen", "lunch", hot=True))
    else:
        truth.lunch_mode = "cold"
        start = _draw_in(rng, lw0 + 300, lw1 - 1500)
        blocks.append(Block(start, start + 900, "kitchen", "lunch", microwave=rng.random() < 0.6))

    # other outings (afternoon), seasonally modulated when enabled
    rate = script.outing_rate_per_day * (1.0 + script.seasonal_outing_amp * _season_factor(date))
    if rng.random() < np.clip(rate, 0.0, 1.0):
        start = _draw_in(rng, 14.4 * 3600, 16.6 * 3600)
        dur = float(np.clip(rng.normal(script.outing_duration_mean_min * 60, script.outing_duration_sd_min * 60), 1800, 10800))
        outings.append((start, start + dur))

    # dinner
    u_hot_d = rng.random()
    dw0, dw1 = script.dinner.window[0] * 60, script.dinner.window[1] * 60
    hot_d = u_hot_d < script.dinner.hot_prob
    if not script.dinner.enabled:
        truth.dinner_mode = "none"
    elif hot_d:
        truth.dinner_mode = "hot"
        dur = _draw_in(rng, 1800, 2700)
        start = _draw_in(rng, dw0 + 300, dw1 - dur - 600)
        blocks.append(Block(start, start + dur, "kitchen", "dinner", hot=True))
    else:
        truth.dinner_mode = "cold"
        start = _draw_in(rng, dw0 + 300, dw1 - 1500)
        blocks.append(Block(start, start + 900, "kitchen", "dinner", microwave=rng.random() < 0.6))

    # medicine visits
    for t_min in script.medicine_times_min:
        take = rng.random() < script.medicine_adherence
        t = t_min * 60.0 + rng.normal(0, 420)
        if take and wake_s + 600 < t < bed_s - 300:
            blocks.append(Block(t, t + 120, "bathroom", "medicine"))

    # evening toothbrush
    brush_pm = rng.random() < script.toothbrush_evening_prob
    if brush_pm:
        blocks.append(Block(bed_s - 1500, bed_s - 1200, "bathroom", "brush"))
    if brush_am:
        blocks.append(Block(hyg_start - 280, hyg_start - 120, "bathroom", "brush"))

    # resolve collisions: outings win over blocks; later outing loses overlap
    outings.sort()
    kept_outings: list[tuple[float, float]] = []
    for s, e in outings:
        if kept_outings and s < kept_outings[-1][1] + 600:
            continue
        kept_outings.append((s, min(e, bed_s - 900)))
    blocks = [
        b
        for b in blocks
        if not any(s - 60 < b.start_s < e + 60 or s - 60 < b.end_s < e + 60 for s, e in kept_outings)
    ]
    blocks.sort(key=lambda b: b.start_s)
    fixed: list[Block] = []
    for b in blocks:
        if fixed and b.start_s < fixed[-1].end_s + 60:
            shift = fixed[-1].end_s + 60 - b.start_s
            b = Block(b.start_s + shift, b.end_s + shift, b.room, b.tag, b.hot, b.shower, b.microwave)
        if b.end_s < bed_s - 60 and b.start_s > wake_s:
            fixed.append(b)
    truth.medicine_accesses = sum(1 for b in fixed if b.tag == "medicine")
    truth.toothbrush_sessions = sum(1 for b in fixed if b.tag == "brush")
    return DayPlan(wake_s=wake_s, bed_s=bed_s, blocks=fixed, outings=kept_outings, truth=truth)


# -- timeline ------------------------------------------------------------------

_ROOM_IDX = {r: i for i, (r, _) in enumerate(ROOMS)}
_ROOM_IDS = [r for r, _ in ROOMS]


def _bfs_path(adjacency: frozenset, a: str, b: str) -> list[str]:
    if a == b:
        return [a]
    frontier = [[a]]
    seen = {a}
    while frontier:
        path = frontier.pop(0)
        for r in _ROOM_IDS:
            if r in seen or frozenset((path[-1], r)) not in adjacency:
                continue
            if r == b:
                return path + [r]
            seen.add(r)
            frontier.append(path + [r])
    return [a, b]  # disconnected floorplans do not occur with the default layout


def build_timeline(
    plan: DayPlan,
    matrix: np.ndarray,
    transitions_per_hour: float,
    adjacency: frozenset,
    rng: np.random.Generator,
) -> list[tuple[float, float, str]]:
    """(start_s, end_s, room) covering awake-at-home time; rooms change only
    along the adjacency graph."""
    anchors: list[tuple[float, float, str | None]] = []
    for b in plan.blocks:
        anchors.append((b.start_s, b.end_s, b.room))
    for s, e in plan.outings:
        anchors.append((s, e, None))  # None = out of home
    anchors.sort()
    if transitions_per_hour <= 0:
        # a motionless subject: presence only where blocks pin them
        return [(b.start_s, b.end_s, b.room) for b in plan.blocks]
    timeline: list[tuple[float, float, str]] = []
    cum = np.cumsum(matrix, axis=1)
    cur_room = "bedroom"
    cursor = plan.wake_s

    def fill_gap(t0: float, t1: float, start_room: str, target: str | None) -> str:
        nonlocal timeline
        room = start_room
        t = t0
        if t1 - t0 > 240:
            # wander, leaving time to walk to the target room
            walk_end = t1 - 120
            n_est = max(4, int((walk_end - t) / 3600 * transitions_per_hour * 2) + 4)
            dwells = rng.exponential(3600.0 / max(transitions_per_hour, 0.1), n_est)
            moves = kernels.markov_walk(cum, _ROOM_IDX[room], rng.random(n_est))
            for dwell, move in zip(dwells, moves):
                seg_end = min(t + max(dwell, 30.0), walk_end)
                timeline.append((t, seg_end, room))
                t = seg_end
                if t >= walk_end:
                    break
                room = _ROOM_IDS[int(move)]
        if target is not None and target != room:
            path = _bfs_path(adjacency, room, target)
            hop = max((t1 - t) / max(len(path) - 1, 1), 8.0)
            for nxt in path[1:]:
                seg_end = min(t + min(hop, 45.0), t1)
                timeline.append((t, seg_end, room))
                t = seg_end
                room = nxt
        if t < t1:
            timeline.append((t, t1, room))
        return room

    for a_start, a_end, a_room in anchors:
        if a_start > cursor:
            cur_room = fill_gap(cursor, a_start, cur_room, a_room or "hall")
        if a_room is None:
            cur_room = "hall"  # re-enter via the hallway
        else:
            timeline.append((a_start, a_end, a_room))
            cur_room = a_room
        cursor = max(cursor, a_end)
    if cursor < plan.bed_s:
        fill_gap(cursor, plan.bed_s - 60, cur_room, "bedroom")
        timeline.append((plan.bed_s - 60, plan.bed_s, "bedroom"))
    timeline = [(s, e, r) for s, e, r in timeline if e > s]
    timeline.sort()
    return timeline


# -- trace synthesis -----------------------------------------------------------


def _periodic_grid(interval_s: int) -> np.ndarray:
    return np.arange(0.0, 86400.0, float(interval_s))


def generate_day_trace(
    sim: SimulatedHome,
    date: dt.date,
    seed: int,
    script: BehaviorScript | None = None,
    prev_script: BehaviorScript | None = None,
) -> DayTrace:
    """Deterministic sensor trace for one local day of one home."""
    home = sim.home
    script = script or sim.script
    prev_script = prev_script or script
    _check_config(sim, script)
    ordinal = date.toordinal()
    rng = _rng(seed, home.home_id, ordinal, _TAG_DAY)
    prev_night = night_plan(prev_script, _rng(seed, home.home_id, ordinal - 1, _TAG_NIGHT))
    tonight = night_plan(script, _rng(seed, home.home_id, ordinal, _TAG_NIGHT))

    plan = plan_day(script, date, prev_night.wake_min, tonight.bed_min, rng)
    timeline = build_timeline(
        plan, script.matrix(), script.transitions_per_hour, home.floorplan.adjacency, rng
    )
    day0 = home.day_start_utc(date)
    streams: dict[str, list] = {}

    def add(role: str, local_s: np.ndarray, **cols: np.ndarray) -> None:
        dev = sim.roles.get(role)
        if dev is None or len(local_s) == 0:
            return
        streams.setdefault(dev, []).append((np.asarray(local_s, dtype=np.float64), cols))

    # --- motion (subject walk + block dwell) ---
    pir_events: dict[str, list[float]] = {r: [] for r in _ROOM_IDS}
    for t0, t1, room in timeline:
        pir_events[room].append(t0 + 2.0)
        t = t0 + rng.exponential(300.0)
        while t < t1 - 5:
            pir_events[room].append(t)
            t += rng.exponential(300.0)
    # night excursion motion: previous night's morning part and tonight's evening part
    for plan_n, base_min, lo, hi in (
        (prev_night, -prev_night.evening_minutes, 0.0, prev_night.wake_min),
        (tonight, tonight.bed_min, tonight.bed_min, 1440.0),
    ):
        for ex_start, ex_dur in plan_n.excursions:
            m0 = base_min + ex_start if plan_n is tonight else ex_start - prev_night.evening_minutes
            if not lo <= m0 < hi:
                continue
            t = m0 * 60.0
            room_target = str(rng.choice(["bathroom", "kitchen", "living"]))
            path = _bfs_path(home.floorplan.adjacency, "bedroom", room_target)
            for r in path + list(reversed(path[:-1])):
                pir_events[r].append(t)
                t += float(rng.uniform(15, 40))

    # --- caregiver confound: extra motion regardless of the subject ---
    rng_cg = _rng(seed, home.home_id, ordinal, _TAG_CAREGIVER)
    wd = date.weekday()
    for w in home.caregiver_windows:
        if w.weekday != wd:
            continue
        t = w.start_min * 60.0 + float(rng_cg.uniform(10, 90))
        while t < w.end_min * 60.0 - 10:
            room = str(rng_cg.choice(["kitchen", "living", "hall"]))
            pir_events[room].append(t)
            t += float(rng_cg.exponential(180.0))

    for room, times in pir_events.items():
        if times:
            ts = _strict_increase(np.asarray(times) + day0)
            add(f"pir-{room}", ts - day0, state=np.ones(len(ts), dtype=np.int8))

    # --- tablet-zone presence (living room occupancy intervals) ---
    living: list[tuple[float, float]] = []
    for t0, t1, room in timeline:
        if room != "living":
            continue
        if living and t0 - living[-1][1] < 30:
            living[-1] = (living[-1][0], t1)
        else:
            living.append((t0, t1))
    pres_ts, pres_state = [], []
    for t0, t1 in living:
        pres_ts += [t0 + 1.0, t1]
        pres_state += [1, 0]
    add("tablet-zone", np.asarray(pres_ts), state=np.asarray(pres_state, dtype=np.int8))

    # --- contacts ---
    def access_pair(times: list[float]) -> tuple[np.ndarray, np.ndarray]:
        ts, st = [], []
        for t in times:
            ts += [t, t + float(rng.uniform(8, 25))]
            st += [1, 0]
        order = np.argsort(ts)
        return np.asarray(ts)[order], np.asarray(st, dtype=np.int8)[order]

    fridge_times: list[float] = []
    pantry_times: list[float] = []
    for b in plan.blocks:
        if b.tag in ("breakfast", "lunch", "dinner"):
            n_f = int(rng.integers(2, 4)) if b.hot else int(rng.integers(1, 3))
            n_p = int(rng.integers(1, 3)) if b.hot else int(rng.integers(0, 2))
            for k in range(n_f):
                fridge_times.append(b.start_s - 60 + k * float(rng.uniform(30, 120)))
            for k in range(n_p):
                pantry_times.append(b.start_s - 40 + k * float(rng.uniform(40, 140)))
    for _ in range(int(rng.poisson(script.snack_rate_per_day))):  # snacks
        at_home = [(t0, t1) for t0, t1, r in timeline if r == "kitchen" and t1 - t0 > 120]
        if at_home:
            s, e = at_home[int(rng.integers(0, len(at_home)))]
            fridge_times.append(float(rng.uniform(s, e - 30)))
    ts, st = access_pair(sorted(fridge_times))
    add("fridge", ts, state=st)
    ts, st = access_pair(sorted(pantry_times))
    add("pantry", ts, state=st)
    med_times = sorted(b.start_s + 20 for b in plan.blocks if b.tag == "medicine")
    ts, st = access_pair(med_times)
    add("medicine", ts, state=st)

    # --- entrance door at outing boundaries ---
    door_ts, door_st = [], []
    detectable = []
    for s, e in plan.outings:
        door_ts += [s, s + 18.0, e, e + 14.0]
        door_st += [1, 0, 1, 0]
        det = not (home.in_caregiver_window(day0 + s) or home.in_caregiver_window(day0 + e))
        detectable.append(det)
    add("entrance", np.asarray(door_ts), state=np.asarray(door_st, dtype=np.int8))
    plan.truth.outings = [
        (s, e, det) for (s, e), det in zip(plan.outings, detectable)
    ]

    # --- stove temperature ---
    dev = sim.roles.get("stove-temp")
    if dev is not None:
        interval = home.device(dev).interval_s
        grid = _periodic_grid(interval)
        base = 20.3 + 0.9 * np.cos(2 * np.pi * (grid - 54000.0) / 86400.0)
        base += script.seasonal_temp_amp_c * _season_factor(date)
        values = base + rng.normal(0.0, 0.18, len(grid))
        for b in plan.blocks:
            if b.hot:
                delta = float(np.clip(rng.normal(STOVE_DELTA_C, 0.8), 6.0, 10.5))
                values += kernels.cooking_contribution(
                    grid - b.start_s, b.end_s - b.start_s, delta, STOVE_TAU_S
                )
        add("stove-temp", grid, value=values)

    # --- shower humidity ---
    dev = sim.roles.get("shower-hum")
    if dev is not None:
        interval = home.device(dev).interval_s
        grid = _periodic_grid(interval)
        values = 45.0 + 2.0 * np.cos(2 * np.pi * (grid - 28800.0) / 86400.0)
        values += rng.normal(0.0, 0.8, len(grid))
        for b in plan.blocks:
            if b.shower:
                delta = float(np.clip(rng.normal(SHOWER_DELTA_RH, 2.0), 18.0, 32.0))
                values += kernels.cooking_contribution(grid - (b.start_s + 120.0), 480.0, delta, SHOWER_TAU_S)
        values = np.clip(values, 5.0, 99.0)
        add("shower-hum", grid, value=values)

    # --- microwave power ---
    dev = sim.roles.get("microwave-power")
    if dev is not None:
        interval = home.device(dev).interval_s
        grid = _periodic_grid(interval)
        values = np.abs(rng.normal(1.5, 0.3, len(grid)))
        for b in plan.blocks:
            if b.microwave:
                use = (grid >= b.start_s + 60) & (grid < b.start_s + 300)
                values[use] = rng.normal(950.0, 60.0, int(use.sum()))
        add("microwave-power", grid, value=values)

    # --- sleep mat samples (previous night's morning + tonight's evening) ---
    mat_s: list[float] = []
    mat_phase: list[int] = []
    ev = prev_night.evening_minutes
    for m in range(ev, len(prev_night.phases)):
        code = prev_night.phases[m]
        if code != OUT_OF_BED:
            mat_s.append((m - ev) * 60.0)
            mat_phase.append(int(code))
    ev_t = tonight.evening_minutes
    for m in range(0, min(ev_t, len(tonight.phases))):
        code = tonight.phases[m]
        if code != OUT_OF_BED:
            mat_s.append((tonight.bed_min + m) * 60.0)
            mat_phase.append(int(code))
    add("sleep-mat", np.asarray(mat_s), phase=np.asarray(mat_phase, dtype=np.int8))

    # --- smartwatch steps ---
    dev = sim.roles.get("watch")
    if dev is not None:
        interval = home.device(dev).interval_s
        grid = _periodic_grid(interval)
        asleep = (grid < plan.wake_s) | (grid >= plan.bed_s)
        out = np.zeros(len(grid), dtype=bool)
        for s, e in plan.outings:
            out |= (grid >= s) & (grid < e)
        steps = np.zeros(len(grid))
        home_awake = ~asleep & ~out
        # indoor step rate scales with walk intensity (a motionless script
        # reads zero steps); out-of-home walking dominates regardless
        home_rate = 12.0 * script.transitions_per_hour / 6.0
        if home_rate > 0:
            steps[home_awake] = rng.poisson(home_rate, int(home_awake.sum()))
        steps[out & ~asleep] = rng.poisson(55.0, int((out & ~asleep).sum()))
        add("watch", grid, value=steps)
        plan.truth.steps = int(steps.sum())

    # --- location fixes during outings (consent gated twice: no device, no events) ---
    if sim.subject.location_consent and "gps" in sim.roles:
        interval = home.device(sim.roles["gps"]).interval_s
        lat0, lon0 = home_base_coords(home.home_id)
        loc_ts, lats, lons, accs = [], [], [], []
        for s, e in plan.outings:
            pts = np.arange(s + 120.0, e - 60.0, float(interval))
            if len(pts) == 0:
                continue
            lat_walk = lat0 + np.cumsum(rng.normal(0, 8e-4, len(pts)))
            lon_walk = lon0 + np.cumsum(rng.normal(0, 8e-4, len(pts)))
            loc_ts += list(pts)
            lats += list(lat_walk)
            lons += list(lon_walk)
            accs += list(rng.uniform(5, 25, len(pts)))
        add("gps", np.asarray(loc_ts), lat=np.asarray(lats), lon=np.asarray(lons), acc=np.asarray(accs))

    # --- toothbrush sessions ---
    brush_ts = [b.end_s for b in plan.blocks if b.tag == "brush"]
    durs = [float(np.clip(rng.normal(120.0, 20.0), 40.0, 240.0)) for _ in brush_ts]
    add("toothbrush", np.asarray(brush_ts), dur=np.asarray(durs))

    # finalize: absolute timestamps, strict per-device ordering
    final: dict[str, Stream] = {}
    for dev_id, chunks in streams.items():
        kind = home.device(dev_id).kind
        ts = np.concatenate([c[0] for c in chunks]) + day0
        cols: dict[str, np.ndarray] = {}
        for name in chunks[0][1]:
            cols[name] = np.concatenate([np.asarray(c[1][name]) for c in chunks])
        order = np.argsort(ts, kind="stable")
        ts = ts[order]
        cols = {k: v[order] for k, v in cols.items()}
        fixed_ts = _strict_increase(ts.copy())
        final[dev_id] = Stream(kind, fixed_ts, cols)

    truth = plan.truth
    truth.sleep = prev_night.phase_counts()
    truth.wake_ups = prev_night.wakeup_runs()
    return DayTrace(
        home_id=home.home_id,
        date=date,
        day_start_utc=day0,
        streams=final,
        truth=truth,
        night_prev=prev_night,
        night_tonight=tonight,
    )


def _check_config(sim: SimulatedHome, script: BehaviorScript) -> None:
    wants = {
        "nutrition-cooking": (script.lunch.enabled and script.lunch.hot_prob > 0)
        or (script.dinner.enabled and script.dinner.hot_prob > 0),
        "hygiene-shower": script.shower_prob > 0,
        "hygiene-toothbrush": script.toothbrush_morning_prob > 0 or script.toothbrush_evening_prob > 0,
        "therapy": bool(script.medicine_times_min),
        "sleep": script.sleep_block_enabled,
        "outdoor-mobility": script.outing_rate_per_day > 0
        or (script.lunch.enabled and script.lunch.out_prob > 0),
        "cognition": True,
    }
    for behavior, wanted in wants.items():
        if not wanted:
            continue
        role = BEHAVIOR_ROLE[behavior]
        if role not in sim.roles and behavior not in sim.home.unmonitorable:
            raise InconsistentConfig(
                f"script exercises {behavior!r} but home {sim.home.home_id} has no "
                f"{role!r} device and does not declare the behavior unmonitorable"
            )


def generate_day(
    sim: SimulatedHome,
    date: dt.date,
    seed: int,
    script: BehaviorScript | None = None,
    prev_script: BehaviorScript | None = None,
) -> list[SensorEvent]:
    """Event-object view of :func:`generate_day_trace` (sorted by ts, device)."""
    return generate_day_trace(sim, date, seed, script, prev_script).to_events()
