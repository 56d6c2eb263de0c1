from .faults import apply_fault_windows, fault_windows, inject_faults
from .generate import (
    DayTrace,
    DayTruth,
    InconsistentConfig,
    NightPlan,
    Stream,
    generate_day,
    generate_day_trace,
)
from .runner import SimResult, script_for_day, simulate
from .scripts import (
    BUILTIN_SCENARIOS,
    BehaviorScript,
    DriftScenario,
    Fault,
    FaultSpec,
    MealPlan,
    ParamShift,
    SimulatedHome,
    apply_drift,
    build_home,
    builtin_scenario,
)

__all__ = [
    "BUILTIN_SCENARIOS",
    "BehaviorScript",
    "DayTrace",
    "DayTruth",
    "DriftScenario",
    "Fault",
    "FaultSpec",
    "InconsistentConfig",
    "MealPlan",
    "NightPlan",
    "ParamShift",
    "SimResult",
    "SimulatedHome",
    "Stream",
    "apply_drift",
    "apply_fault_windows",
    "build_home",
    "builtin_scenario",
    "fault_windows",
    "generate_day",
    "generate_day_trace",
    "inject_faults",
    "script_for_day",
    "simulate",
]
