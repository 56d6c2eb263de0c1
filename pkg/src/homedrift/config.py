"""Scenario/run configuration: versioned human-editable YAML.

Schema (version 1):

    version: 1
    start: 2026-01-01        # first simulated local day
    days: 365
    seed: 7
    homes:
      - home_id: home-001
        subject: {id: subj-001, name: "Participant One",
                  cohort: neurodegenerative, location_consent: true}
        tz_minutes: 60
        caregiver_windows: [{weekday: 1, start: "14:00", end: "16:00"}]
        routine: {"lunch.hot_prob": 0.8}       # dotted script overrides
        scenarios:
          - {name: lunch-shift, onset_day: 180, ramp_days: 0}
          - name: custom
            onset_day: 120
            ramp_days: 10
            shifts: [{param: shower_prob, mode: set, value: 0.4}]
        faults:
          - {kind: device-dropout, device_role: stove-temp,
             start_day: 40, start_min: 360, end_day: 40, end_min: 720}
        without_roles: [toothbrush]
        unmonitorable: [hygiene-toothbrush]
        seasonal: {outing_amp: 0.0, temp_amp_c: 0.0}
"""

from __future__ import annotations

import datetime as dt
from dataclasses import dataclass, field
from pathlib import Path

import yaml

from .drift import Thresholds
from .model import CaregiverWindow, Identity, ModelError, SubjectProfile
from .simulate import (
    BUILTIN_SCENARIOS,
    BehaviorScript,
    DriftScenario,
    Fault,
    FaultSpec,
    ParamShift,
    SimulatedHome,
    build_home,
    builtin_scenario,
)
from .simulate.scripts import _set_path

CONFIG_VERSION = 1


class ConfigError(ValueError):
    def __init__(self, path: str, message: str):
        super().__init__(f"{path}: {message}")
        self.path = path


@dataclass
class HomeSetup:
    sim: SimulatedHome
    identity: Identity


@dataclass
class RunConfig:
    start: dt.date
    days: int
    seed: int
    homes: list[HomeSetup]
    thresholds: Thresholds = field(default_factory=Thresholds)

    def __post_init__(self) -> None:
        if self.days < 1:
            raise ConfigError("days", "date range is empty")
        if not self.homes:
            raise ConfigError("homes", "need at least one home")


def _minute(text: str, path: str) -> int:
    try:
        h, m = text.split(":")
        minute = int(h) * 60 + int(m)
    except Exception:
        raise ConfigError(path, f"bad time {text!r}, expected HH:MM")
    if not 0 <= minute <= 1440:
        raise ConfigError(path, "time of day out of range")
    return minute


def _scenario(doc: dict, path: str) -> DriftScenario:
    name = doc.get("name")
    if name is None:
        raise ConfigError(path + ".name", "missing scenario name")
    onset = doc.get("onset_day")
    if onset is None:
        raise ConfigError(path + ".onset_day", "missing onset day")
    ramp = doc.get("ramp_days", 0)
    if name in BUILTIN_SCENARIOS:
        return builtin_scenario(name, onset, ramp)
    shifts = doc.get("shifts")
    if not shifts:
        raise ConfigError(path + ".shifts", f"unknown built-in {name!r} and no explicit shifts")
    return DriftScenario(
        name,
        onset,
        ramp,
        tuple(ParamShift(s["param"], s.get("mode", "set"), float(s["value"])) for s in shifts),
    )


def load_scenario(path: str | Path, seed_override: int | None = None) -> RunConfig:
    path = Path(path)
    if not path.exists():
        raise ConfigError(str(path), "scenario file does not exist")
    doc = yaml.safe_load(path.read_text())
    if not isinstance(doc, dict):
        raise ConfigError(str(path), "scenario file is not a mapping")
    if doc.get("version") != CONFIG_VERSION:
        raise ConfigError("version", f"expected version {CONFIG_VERSION}")
    try:
        start = dt.date.fromisoformat(str(doc["start"]))
    except (KeyError, ValueError):
        raise ConfigError("start", "missing or invalid ISO date")
    days = doc.get("days")
    if not isinstance(days, int) or days < 1:
        raise ConfigError("days", "must be a positive integer")
    seed = seed_override if seed_override is not None else doc.get("seed", 0)

    homes: list[HomeSetup] = []
    for i, h in enumerate(doc.get("homes", [])):
        hp = f"homes[{i}]"
        home_id = h.get("home_id")
        if not home_id:
            raise ConfigError(hp + ".home_id", "missing")
        s = h.get("subject", {})
        try:
            subject = SubjectProfile(
                subject_id=s.get("id", f"subject-{i:03d}"),
                cohort=s.get("cohort", "non-neurodegenerative"),
                location_consent=bool(s.get("location_consent", True)),
            )
        except ModelError as exc:
            raise ConfigError(hp + ".subject", str(exc))
        windows = []
        for j, w in enumerate(h.get("caregiver_windows", [])):
            wp = f"{hp}.caregiver_windows[{j}]"
            try:
                windows.append(
                    CaregiverWindow(int(w["weekday"]), _minute(w["start"], wp), _minute(w["end"], wp))
                )
            except (KeyError, ModelError) as exc:
                raise ConfigError(wp, str(exc))
        script = BehaviorScript()
        for key, value in (h.get("routine") or {}).items():
            try:
                script = _set_path(script, key, float(value))
            except ModelError as exc:
                raise ConfigError(f"{hp}.routine.{key}", str(exc))
        seasonal = h.get("seasonal") or {}
        if seasonal:
            script = _set_path(script, "seasonal_outing_amp", float(seasonal.get("outing_amp", 0.0)))
            script = _set_path(script, "seasonal_temp_amp_c", float(seasonal.get("temp_amp_c", 0.0)))
        scenarios = tuple(
            _scenario(sdoc, f"{hp}.scenarios[{k}]") for k, sdoc in enumerate(h.get("scenarios", []))
        )
        faults = []
        for k, fdoc in enumerate(h.get("faults", [])):
            fp = f"{hp}.faults[{k}]"
            try:
                faults.append(
                    Fault(
                        kind=fdoc["kind"],
                        start_day=int(fdoc["start_day"]),
                        end_day=fdoc.get("end_day"),
                        device_role=fdoc.get("device_role"),
                        start_min=int(fdoc.get("start_min", 0)),
                        end_min=int(fdoc.get("end_min", 0)),
                        buffering_halts=bool(fdoc.get("buffering_halts", False)),
                    )
                )
            except (KeyError, ModelError) as exc:
                raise ConfigError(fp, str(exc))
        for scen in scenarios:
            if scen.onset_day >= days:
                raise ConfigError(f"{hp}.scenarios", f"{scen.name} onset outside the run")
        for k, f in enumerate(faults):
            if f.start_day >= days:
                raise ConfigError(f"{hp}.faults[{k}]", f"{f.kind} starts outside the run")
        try:
            sim = build_home(
                home_id=home_id,
                subject=subject,
                seed=seed,
                script=script,
                caregiver_windows=tuple(windows),
                tz_minutes=int(h.get("tz_minutes", 60)),
                without_roles=tuple(h.get("without_roles", [])),
                unmonitorable=tuple(h.get("unmonitorable", [])),
                scenarios=scenarios,
                faults=FaultSpec(tuple(faults)),
            )
        except ModelError as exc:
            raise ConfigError(hp, str(exc))
        homes.append(HomeSetup(sim=sim, identity=Identity(s.get("name", subject.subject_id), home_id)))

    thresholds = Thresholds()
    if "thresholds" in doc:
        try:
            thresholds = Thresholds().with_overrides(**doc["thresholds"])
        except (TypeError, ValueError) as exc:
            raise ConfigError("thresholds", str(exc))
    return RunConfig(start=start, days=days, seed=seed, homes=homes, thresholds=thresholds)


def load_thresholds(path: str | Path) -> Thresholds:
    doc = yaml.safe_load(Path(path).read_text()) or {}
    try:
        return Thresholds().with_overrides(**doc)
    except (TypeError, ValueError) as exc:
        raise ConfigError(str(path), str(exc))
