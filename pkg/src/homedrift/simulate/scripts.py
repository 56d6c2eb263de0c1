"""Behavior scripts, drift scenarios, fault specs, and default home layouts."""

from __future__ import annotations

import hashlib
from dataclasses import dataclass, field, fields, replace

import numpy as np

from ..model import (
    CaregiverWindow,
    DeviceKind,
    DeviceSpec,
    Floorplan,
    HomeConfig,
    ModelError,
    SubjectProfile,
)

ROOMS = (
    ("kitchen", "Kitchen"),
    ("living", "Living room"),
    ("bedroom", "Bedroom"),
    ("bathroom", "Bathroom"),
    ("hall", "Hallway"),
)
ADJACENCY = frozenset(
    frozenset(p)
    for p in [
        ("hall", "kitchen"),
        ("hall", "living"),
        ("hall", "bathroom"),
        ("hall", "bedroom"),
        ("kitchen", "living"),
        ("living", "bedroom"),
    ]
)

# Local-minute meal windows (feature extraction uses the same defaults).
LUNCH_WINDOW = (690, 840)  # 11:30 - 14:00
DINNER_WINDOW = (1110, 1290)  # 18:30 - 21:30
BREAKFAST_WINDOW = (435, 570)  # 07:15 - 09:30


@dataclass(frozen=True)
class MealPlan:
    window: tuple[int, int]
    hot_prob: float
    out_prob: float = 0.0
    enabled: bool = True

    def __post_init__(self) -> None:
        if not 0 <= self.window[0] < self.window[1] <= 1440:
            raise ModelError("meal window out of range")
        for p in (self.hot_prob, self.out_prob):
            if not 0.0 <= p <= 1.0:
                raise ModelError("meal probability outside [0,1]")


@dataclass(frozen=True)
class BehaviorScript:
    """Daily activity plan template; all times are local minutes."""

    bed_time_min: float = 1350.0
    bed_jitter_min: float = 18.0
    wake_time_min: float = 420.0
    wake_jitter_min: float = 18.0
    sleep_block_enabled: bool = True
    deep_frac: float = 0.22
    rem_frac: float = 0.20
    frac_jitter: float = 0.025
    wakeups_mean: float = 1.0
    night_excursions_mean: float = 0.3
    snack_rate_per_day: float = 0.7
    breakfast: MealPlan = field(default_factory=lambda: MealPlan(BREAKFAST_WINDOW, 0.15))
    lunch: MealPlan = field(default_factory=lambda: MealPlan(LUNCH_WINDOW, 0.8, 0.1))
    dinner: MealPlan = field(default_factory=lambda: MealPlan(DINNER_WINDOW, 0.7, 0.02))
    shower_prob: float = 0.8
    toothbrush_morning_prob: float = 0.92
    toothbrush_evening_prob: float = 0.92
    medicine_times_min: tuple[int, ...] = (510, 1300)
    medicine_adherence: float = 0.9
    outing_rate_per_day: float = 0.45
    outing_duration_mean_min: float = 90.0
    outing_duration_sd_min: float = 25.0
    transitions_per_hour: float = 6.0
    transition_matrix: tuple[tuple[float, ...], ...] | None = None  # rows over ROOMS order
    seasonal_outing_amp: float = 0.0
    seasonal_temp_amp_c: float = 0.0
    test_confirm_prob: float = 0.92
    test_score_mean: float = 84.0
    test_score_sd: float = 6.0

    def __post_init__(self) -> None:
        probs = [
            self.deep_frac,
            self.rem_frac,
            self.shower_prob,
            self.toothbrush_morning_prob,
            self.toothbrush_evening_prob,
            self.medicine_adherence,
            self.test_confirm_prob,
        ]
        if any(not 0.0 <= p <= 1.0 for p in probs):
            raise ModelError("script probability outside [0,1]")
        if self.deep_frac + self.rem_frac > 0.9:
            raise ModelError("sleep phase fractions leave no room for light sleep")
        windows = sorted(
            [self.breakfast.window, self.lunch.window, self.dinner.window]
        )
        for a, b in zip(windows, windows[1:]):
            if b[0] < a[1]:
                raise ModelError("meal windows overlap")
        if self.transition_matrix is not None:
            for row in self.transition_matrix:
                if abs(sum(row) - 1.0) > 1e-9:
                    raise ModelError("transition matrix rows must sum to 1")

    def matrix(self) -> np.ndarray:
        if self.transition_matrix is not None:
            return np.asarray(self.transition_matrix, dtype=np.float64)
        return default_transition_matrix()


def default_transition_matrix() -> np.ndarray:
    """Walk preference over adjacent rooms: living and kitchen attract."""
    ids = [r for r, _ in ROOMS]
    weight = {"kitchen": 2.0, "living": 3.0, "bedroom": 1.0, "bathroom": 1.0, "hall": 1.0}
    n = len(ids)
    m = np.zeros((n, n))
    for i, a in enumerate(ids):
        for j, b in enumerate(ids):
            if i != j and frozenset((a, b)) in ADJACENCY:
                m[i, j] = weight[b]
        m[i] /= m[i].sum()
    return m


# -- drift scenarios ---------------------------------------------------------


@dataclass(frozen=True)
class ParamShift:
    param: str  # dotted path into BehaviorScript, e.g. "lunch.hot_prob"
    mode: str  # "set" | "mul" | "add"
    value: float

    def __post_init__(self) -> None:
        if self.mode not in ("set", "mul", "add"):
            raise ModelError(f"unknown shift mode {self.mode!r}")


@dataclass(frozen=True)
class DriftScenario:
    name: str
    onset_day: int
    ramp_days: int
    shifts: tuple[ParamShift, ...]

    def __post_init__(self) -> None:
        if self.onset_day < 0 or self.ramp_days < 0:
            raise ModelError("onset/ramp must be non-negative")


def builtin_scenario(name: str, onset_day: int, ramp_days: int = 0) -> DriftScenario:
    shifts = {
        "lunch-shift": (
            ParamShift("lunch.hot_prob", "set", 0.3),
            ParamShift("lunch.out_prob", "set", 0.55),
        ),
        "sleep-shift": (
            ParamShift("deep_frac", "set", 0.12),
            ParamShift("rem_frac", "set", 0.30),
        ),
        "hygiene-decline": (
            ParamShift("shower_prob", "set", 0.3),
            ParamShift("toothbrush_morning_prob", "set", 0.35),
            ParamShift("toothbrush_evening_prob", "set", 0.35),
        ),
        "therapy-nonadherence": (ParamShift("medicine_adherence", "set", 0.4),),
        "wandering": (ParamShift("night_excursions_mean", "set", 3.0),),
    }
    if name not in shifts:
        raise ModelError(f"unknown built-in scenario {name!r}")
    return DriftScenario(name, onset_day, ramp_days, shifts[name])


BUILTIN_SCENARIOS = (
    "lunch-shift",
    "sleep-shift",
    "hygiene-decline",
    "therapy-nonadherence",
    "wandering",
)


def _get_path(script: BehaviorScript, path: str) -> float:
    obj = script
    for part in path.split("."):
        obj = getattr(obj, part)
    return float(obj)


def _set_path(script: BehaviorScript, path: str, value: float) -> BehaviorScript:
    parts = path.split(".")
    if len(parts) == 1:
        f = {f.name for f in fields(script)}
        if parts[0] not in f:
            raise ModelError(f"unknown script parameter {path!r}")
        return replace(script, **{parts[0]: value})
    if len(parts) == 2:
        meal = getattr(script, parts[0])
        if not isinstance(meal, MealPlan):
            raise ModelError(f"unknown script parameter {path!r}")
        return replace(script, **{parts[0]: replace(meal, **{parts[1]: value})})
    raise ModelError(f"unknown script parameter {path!r}")


def apply_drift(script: BehaviorScript, scenario: DriftScenario, day_index: int) -> BehaviorScript:
    """Script in effect on ``day_index``: identity before onset, fully shifted
    after onset+ramp, linear interpolation inside the ramp."""
    if day_index < scenario.onset_day:
        return script
    if scenario.ramp_days == 0:
        t = 1.0
    else:
        t = min(1.0, (day_index - scenario.onset_day) / scenario.ramp_days)
    out = script
    for shift in scenario.shifts:
        base = _get_path(script, shift.param)
        if shift.mode == "set":
            target = shift.value
        elif shift.mode == "mul":
            target = base * shift.value
        else:
            target = base + shift.value
        out = _set_path(out, shift.param, base + t * (target - base))
    return out


# -- faults ------------------------------------------------------------------

FAULT_KINDS = ("device-dropout", "gateway-outage", "device-removed", "battery-decay")


@dataclass(frozen=True)
class Fault:
    kind: str
    start_day: int
    end_day: int | None = None  # exclusive unless end_min > 0; None = run end
    device_role: str | None = None  # resolved against the home's role map
    start_min: int = 0  # minute offset inside start_day
    end_min: int = 0  # minute offset inside end_day
    buffering_halts: bool = False  # gateway-outage only

    def __post_init__(self) -> None:
        if self.kind not in FAULT_KINDS:
            raise ModelError(f"unknown fault kind {self.kind!r}")
        if self.kind != "gateway-outage" and self.device_role is None:
            raise ModelError(f"{self.kind} needs a device_role")
        if not (0 <= self.start_min <= 1440 and 0 <= self.end_min <= 1440):
            raise ModelError("fault minutes out of range")
        if self.end_day is not None:
            a = self.start_day * 1440 + self.start_min
            b = self.end_day * 1440 + self.end_min
            if b <= a:
                raise ModelError("fault end must be after start")


@dataclass(frozen=True)
class FaultSpec:
    faults: tuple[Fault, ...] = ()

    def outage_days(self, n_days: int) -> list[tuple[int, int, bool]]:
        out = []
        for f in self.faults:
            if f.kind == "gateway-outage":
                end = n_days if f.end_day is None else min(f.end_day, n_days)
                out.append((f.start_day, end, f.buffering_halts))
        return out


# -- default home layout -------------------------------------------------------


def _home_rng(seed: int, home_id: str) -> np.random.Generator:
    digest = hashlib.sha256(f"{seed}:{home_id}".encode()).digest()
    return np.random.Generator(np.random.Philox(int.from_bytes(digest[:8], "big")))


ROLE_LAYOUT: list[tuple[str, DeviceKind, str, str | None]] = [
    ("entrance", DeviceKind.ENTRANCE_DOOR_CONTACT, "hall", "entrance-door"),
    ("fridge", DeviceKind.MAGNETIC_CONTACT, "kitchen", "fridge"),
    ("pantry", DeviceKind.MAGNETIC_CONTACT, "kitchen", "pantry"),
    ("medicine", DeviceKind.MAGNETIC_CONTACT, "bathroom", "medicine-cabinet"),
    ("pir-kitchen", DeviceKind.MOTION_PIR, "kitchen", None),
    ("pir-living", DeviceKind.MOTION_PIR, "living", None),
    ("pir-bedroom", DeviceKind.MOTION_PIR, "bedroom", None),
    ("pir-bathroom", DeviceKind.MOTION_PIR, "bathroom", None),
    ("pir-hall", DeviceKind.MOTION_PIR, "hall", None),
    ("tablet-zone", DeviceKind.PRESENCE_MMWAVE, "living", "tablet"),
    ("stove-temp", DeviceKind.TEMPERATURE, "kitchen", "stove"),
    ("shower-hum", DeviceKind.HUMIDITY, "bathroom", "shower"),
    ("microwave-power", DeviceKind.SMART_PLUG_POWER, "kitchen", "microwave"),
    ("sleep-mat", DeviceKind.SLEEP_MAT, "bedroom", "bed"),
    ("watch", DeviceKind.SMARTWATCH, "bedroom", None),
    ("toothbrush", DeviceKind.TOOTHBRUSH, "bathroom", None),
    ("tablet", DeviceKind.TABLET_PRESENCE, "living", None),
    ("gps", DeviceKind.LOCATION_SOURCE, "hall", None),
]

# Behaviors that require a device role; homes lacking the role must declare
# the behavior unmonitorable, otherwise generate_day raises.
BEHAVIOR_ROLE = {
    "nutrition-cooking": "stove-temp",
    "hygiene-shower": "shower-hum",
    "hygiene-toothbrush": "toothbrush",
    "therapy": "medicine",
    "sleep": "sleep-mat",
    "outdoor-mobility": "entrance",
    "cognition": "tablet",
}


@dataclass(frozen=True)
class SimulatedHome:
    home: HomeConfig
    subject: SubjectProfile
    script: BehaviorScript
    roles: dict[str, str]  # role -> device_id
    scenarios: tuple[DriftScenario, ...] = ()
    faults: FaultSpec = FaultSpec()

    def role_of(self, device_id: str) -> str | None:
        for role, dev in self.roles.items():
            if dev == device_id:
                return role
        return None


def build_home(
    home_id: str,
    subject: SubjectProfile,
    seed: int,
    script: BehaviorScript | None = None,
    caregiver_windows: tuple[CaregiverWindow, ...] = (),
    tz_minutes: int = 60,
    without_roles: tuple[str, ...] = (),
    unmonitorable: tuple[str, ...] = (),
    scenarios: tuple[DriftScenario, ...] = (),
    faults: FaultSpec = FaultSpec(),
) -> SimulatedHome:
    """Default five-room home; device ids are seed-derived hex (never identity)."""
    rng = _home_rng(seed, home_id)
    devices = []
    placements = {}
    roles = {}
    for role, kind, room, target in ROLE_LAYOUT:
        if role in without_roles:
            continue
        if kind is DeviceKind.LOCATION_SOURCE and not subject.location_consent:
            continue
        dev_id = "dev-" + bytes(rng.integers(0, 256, 6, dtype=np.uint8)).hex()
        devices.append(DeviceSpec(dev_id, kind))
        placements[dev_id] = (room, target)
        roles[role] = dev_id
    floorplan = Floorplan(ROOMS, ADJACENCY, placements)
    home = HomeConfig(
        home_id=home_id,
        floorplan=floorplan,
        devices=tuple(devices),
        caregiver_windows=caregiver_windows,
        tz_minutes=tz_minutes,
        unmonitorable=unmonitorable,
    )
    return SimulatedHome(
        home=home,
        subject=subject,
        script=script or BehaviorScript(**subject.routine),
        roles=roles,
        scenarios=scenarios,
        faults=faults,
    )
