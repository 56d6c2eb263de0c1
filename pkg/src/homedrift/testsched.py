"""Weekly cognitive-test scheduling state machine.

A test is scheduled once per week at the subject's convenient slot, starts
only after presence is detected near the tablet and the subject confirms,
and is rescheduled (+24h by default) on a decline or when no presence shows
up within the presence window. Three misses make the week incomplete.
"""

from __future__ import annotations

import datetime as dt
from dataclasses import dataclass, replace
from enum import Enum
from typing import Optional

import numpy as np

from .model import DeviceKind, SensorEvent, TestOutcome

PRESENCE_WINDOW_MIN = 120  # minutes after the scheduled time before auto-reschedule
RESCHEDULE_OFFSET_MIN = 24 * 60
MAX_ATTEMPTS = 3


class Phase(Enum):
    SCHEDULED = "scheduled"
    AWAITING_PRESENCE = "awaiting-presence"
    PROMPTED = "prompted"
    RUNNING = "running"
    COMPLETED = "completed"
    RESCHEDULED = "rescheduled"
    INCOMPLETE_FOR_WEEK = "incomplete-for-week"


TERMINAL = (Phase.COMPLETED, Phase.INCOMPLETE_FOR_WEEK)


class Input(Enum):
    SCHEDULED_TIME_REACHED = "scheduled-time-reached"
    PRESENCE_DETECTED = "presence-detected"
    PRESENCE_WINDOW_ELAPSED = "presence-window-elapsed"
    CONFIRM_YES = "confirm-yes"
    CONFIRM_NO = "confirm-no"
    TEST_FINISHED = "test-finished"


@dataclass(frozen=True)
class WeeklySlot:
    weekday: int  # 0=Monday
    minute_of_day: int


@dataclass(frozen=True)
class ScheduleState:
    anchor: WeeklySlot
    phase: Phase = Phase.SCHEDULED
    attempts_used: int = 0
    score: Optional[int] = None
    miss_reasons: tuple[str, ...] = ()  # "absent" / "declined", one per miss

    @property
    def terminal(self) -> bool:
        return self.phase in TERMINAL


class NonTerminalWeek(RuntimeError):
    """weekly_reset called while the previous week is still in flight."""


def tick(state: ScheduleState, inp: Input, score: Optional[int] = None) -> ScheduleState:
    """Advance the machine by one input; irrelevant inputs are ignored."""
    p = state.phase
    if p is Phase.SCHEDULED and inp is Input.SCHEDULED_TIME_REACHED:
        return replace(state, phase=Phase.AWAITING_PRESENCE)
    if p is Phase.AWAITING_PRESENCE and inp is Input.PRESENCE_DETECTED:
        return replace(state, phase=Phase.PROMPTED)
    if p is Phase.AWAITING_PRESENCE and inp is Input.PRESENCE_WINDOW_ELAPSED:
        return _miss(state, "absent")
    if p is Phase.PROMPTED and inp is Input.CONFIRM_YES:
        return replace(state, phase=Phase.RUNNING)
    if p is Phase.PROMPTED and inp is Input.CONFIRM_NO:
        return _miss(state, "declined")
    if p is Phase.RUNNING and inp is Input.TEST_FINISHED:
        if score is None or not 0 <= score <= 100:
            raise ValueError("test-finished needs a score in 0..100")
        return replace(state, phase=Phase.COMPLETED, score=score)
    if p is Phase.RESCHEDULED and inp is Input.SCHEDULED_TIME_REACHED:
        return replace(state, phase=Phase.AWAITING_PRESENCE)
    return state  # meaningless for the current phase


def _miss(state: ScheduleState, reason: str) -> ScheduleState:
    attempts = state.attempts_used + 1
    reasons = state.miss_reasons + (reason,)
    if attempts >= MAX_ATTEMPTS:
        return replace(
            state, phase=Phase.INCOMPLETE_FOR_WEEK, attempts_used=attempts, miss_reasons=reasons
        )
    return replace(state, phase=Phase.RESCHEDULED, attempts_used=attempts, miss_reasons=reasons)


def weekly_reset(state: ScheduleState, anchor: Optional[WeeklySlot] = None) -> ScheduleState:
    if not state.terminal:
        raise NonTerminalWeek(f"previous week still {state.phase.value}")
    return ScheduleState(anchor=anchor or state.anchor)


def compliance(state: ScheduleState) -> Optional[TestOutcome]:
    """Weekly compliance payload; None while the week is not terminal."""
    if state.phase is Phase.COMPLETED:
        return TestOutcome(True, state.score)
    if state.phase is Phase.INCOMPLETE_FOR_WEEK:
        return TestOutcome(False, None)
    return None


class WeeklyTestDriver:
    """Runs the state machine against simulated presence, one day at a time.

    The driver owns the cross-day bookkeeping (attempt dates, prompt times)
    and emits one test-outcome event per terminal week on the tablet device.
    """

    def __init__(
        self,
        device_id: str,
        home_id: str,
        slot: WeeklySlot,
        confirm_prob: float = 0.92,
        score_mean: float = 84.0,
        score_sd: float = 6.0,
        test_duration_s: float = 600.0,
    ):
        self.device_id = device_id
        self.home_id = home_id
        self.state = ScheduleState(anchor=slot)
        self.confirm_prob = confirm_prob
        self.score_mean = score_mean
        self.score_sd = score_sd
        self.test_duration_s = test_duration_s
        self._attempt_date: Optional[dt.date] = None

    def advance_day(
        self,
        date: dt.date,
        day_start_utc: float,
        presence_ts: np.ndarray,
        rng: np.random.Generator,
    ) -> list[SensorEvent]:
        """Process one calendar day; returns outcome events emitted that day."""
        slot = self.state.anchor
        if self.state.terminal:
            if date.weekday() == slot.weekday:
                self.state = weekly_reset(self.state)
            else:
                return []
        if self.state.phase is Phase.SCHEDULED:
            if date.weekday() != slot.weekday:
                return []
            self._attempt_date = date
        if self._attempt_date != date:
            return []

        sched_ts = day_start_utc + slot.minute_of_day * 60.0
        self.state = tick(self.state, Input.SCHEDULED_TIME_REACHED)
        window_end = sched_ts + PRESENCE_WINDOW_MIN * 60.0
        hits = presence_ts[(presence_ts >= sched_ts) & (presence_ts < window_end)]
        if len(hits) == 0:
            self.state = tick(self.state, Input.PRESENCE_WINDOW_ELAPSED)
            return self._after_attempt(date, window_end)
        prompt_ts = float(hits[0])
        self.state = tick(self.state, Input.PRESENCE_DETECTED)
        if rng.random() >= self.confirm_prob:
            self.state = tick(self.state, Input.CONFIRM_NO)
            return self._after_attempt(date, prompt_ts)
        self.state = tick(self.state, Input.CONFIRM_YES)
        score = int(np.clip(round(rng.normal(self.score_mean, self.score_sd)), 0, 100))
        self.state = tick(self.state, Input.TEST_FINISHED, score=score)
        return self._emit(prompt_ts + self.test_duration_s)

    def _after_attempt(self, date: dt.date, at_ts: float) -> list[SensorEvent]:
        if self.state.phase is Phase.INCOMPLETE_FOR_WEEK:
            return self._emit(at_ts)
        # rescheduled +24h, same time next day
        self._attempt_date = date + dt.timedelta(days=1)
        return []

    def _emit(self, ts: float) -> list[SensorEvent]:
        outcome = compliance(self.state)
        assert outcome is not None
        return [
            SensorEvent(self.device_id, self.home_id, ts, DeviceKind.TABLET_PRESENCE, outcome)
        ]
