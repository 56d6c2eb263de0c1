"""Canonical line-oriented event serialization.

One event per line, UTF-8, tab-separated fields in this order:

    timestamp(ISO-8601 UTC)  device_id  home_ref  kind  payload...

Payload field order per kind:
    binary kinds        state                     (open|closed / on|off)
    scalar kinds        value  unit               (C / RH% / W / steps / bpm)
    sleep-mat           phase                     (awake|light|deep|rem)
    location-source     lat  lon  accuracy_m
    toothbrush          duration_s
    tablet-presence     compliant(0|1)  score     (score '-' when absent)

Event log files start with the version line ``#homedrift-events 1``.
Floats are written with repr() so serialize/parse round-trips exactly.
"""

from __future__ import annotations

import datetime as dt
from typing import Iterable, Iterator, TextIO

from .model import (
    BINARY_STATES,
    SCALAR_UNITS,
    SLEEP_PHASES,
    BinaryState,
    DeviceKind,
    LocationFix,
    ScalarReading,
    SensorEvent,
    SleepSample,
    TestOutcome,
    ToothbrushSession,
)

FILE_HEADER = "#homedrift-events 1"

_KIND_BY_VALUE = {k.value: k for k in DeviceKind}


class CodecError(ValueError):
    """Base class for parse failures."""

    def __init__(self, message: str, field: str | None = None):
        super().__init__(message)
        self.field = field


class MalformedLine(CodecError):
    pass


class UnknownKind(CodecError):
    pass


class PayloadSchemaMismatch(CodecError):
    pass


def _format_ts(ts: float) -> str:
    micros = round(ts * 1e6)
    d = dt.datetime.fromtimestamp(micros / 1e6, dt.timezone.utc)
    if micros % 1_000_000:
        return d.strftime("%Y-%m-%dT%H:%M:%S.%f") + "Z"
    return d.strftime("%Y-%m-%dT%H:%M:%SZ")


def _parse_ts(text: str) -> float:
    try:
        if text.endswith("Z"):
            text = text[:-1] + "+00:00"
        d = dt.datetime.fromisoformat(text)
    except ValueError as exc:
        raise MalformedLine(f"bad timestamp: {exc}", field="timestamp") from None
    if d.tzinfo is None:
        raise MalformedLine("timestamp must carry a UTC offset", field="timestamp")
    return round(d.timestamp() * 1e6) / 1e6


def _format_float(v: float) -> str:
    return repr(float(v))


def serialize_event(e: SensorEvent) -> str:
    """Render one event as its canonical line (no trailing newline)."""
    head = [_format_ts(e.timestamp), e.device_id, e.home_ref, e.kind.value]
    p = e.payload
    if isinstance(p, BinaryState):
        tail = [p.state]
    elif isinstance(p, ScalarReading):
        tail = [_format_float(p.value), p.unit]
    elif isinstance(p, SleepSample):
        tail = [p.phase]
    elif isinstance(p, LocationFix):
        tail = [_format_float(p.lat), _format_float(p.lon), _format_float(p.accuracy_m)]
    elif isinstance(p, ToothbrushSession):
        tail = [_format_float(p.duration_s)]
    elif isinstance(p, TestOutcome):
        tail = ["1" if p.compliant else "0", "-" if p.score is None else str(p.score)]
    else:  # pragma: no cover
        raise TypeError(f"unknown payload {type(p)}")
    return "\t".join(head + tail)


def _parse_float(token: str, field: str) -> float:
    try:
        return float(token)
    except ValueError:
        raise PayloadSchemaMismatch(f"field {field}: {token!r} is not a number", field=field)


def parse_event(line: str) -> SensorEvent:
    """Inverse of :func:`serialize_event`; rejects schema-mismatched payloads."""
    line = line.rstrip("\n")
    parts = line.split("\t")
    if len(parts) < 5:
        raise MalformedLine(f"expected >=5 tab-separated fields, got {len(parts)}")
    ts_text, device_id, home_ref, kind_text = parts[:4]
    tail = parts[4:]
    if not device_id:
        raise MalformedLine("empty device_id", field="device_id")
    kind = _KIND_BY_VALUE.get(kind_text)
    if kind is None:
        raise UnknownKind(f"unknown kind {kind_text!r}", field="kind")
    ts = _parse_ts(ts_text)

    if kind in BINARY_STATES:
        if len(tail) != 1:
            raise PayloadSchemaMismatch(
                f"{kind.value} expects 1 payload field (state), got {len(tail)}", field="state"
            )
        if tail[0] not in BINARY_STATES[kind]:
            raise PayloadSchemaMismatch(
                f"field state: {tail[0]!r} invalid for {kind.value}", field="state"
            )
        payload = BinaryState(tail[0])
    elif kind in SCALAR_UNITS:
        if len(tail) != 2:
            raise PayloadSchemaMismatch(
                f"{kind.value} expects 2 payload fields (value, unit), got {len(tail)}",
                field="value",
            )
        value = _parse_float(tail[0], "value")
        if tail[1] not in SCALAR_UNITS[kind]:
            raise PayloadSchemaMismatch(
                f"field unit: {tail[1]!r} invalid for {kind.value}", field="unit"
            )
        payload = ScalarReading(value, tail[1])
    elif kind is DeviceKind.SLEEP_MAT:
        if len(tail) != 1:
            raise PayloadSchemaMismatch("sleep-mat expects 1 payload field (phase)", field="phase")
        if tail[0] not in SLEEP_PHASES:
            raise PayloadSchemaMismatch(
                f"field phase: unknown sleep phase {tail[0]!r}", field="phase"
            )
        payload = SleepSample(tail[0])
    elif kind is DeviceKind.LOCATION_SOURCE:
        if len(tail) != 3:
            raise PayloadSchemaMismatch(
                "location-source expects 3 payload fields (lat, lon, accuracy_m)", field="lat"
            )
        payload = LocationFix(
            _parse_float(tail[0], "lat"),
            _parse_float(tail[1], "lon"),
            _parse_float(tail[2], "accuracy_m"),
        )
    elif kind is DeviceKind.TOOTHBRUSH:
        if len(tail) != 1:
            raise PayloadSchemaMismatch(
                "toothbrush expects 1 payload field (duration_s)", field="duration_s"
            )
        payload = ToothbrushSession(_parse_float(tail[0], "duration_s"))
    else:  # tablet-presence / test outcome
        if len(tail) != 2:
            raise PayloadSchemaMismatch(
                "tablet-presence expects 2 payload fields (compliant, score)", field="compliant"
            )
        if tail[0] not in ("0", "1"):
            raise PayloadSchemaMismatch(
                f"field compliant: {tail[0]!r} must be 0 or 1", field="compliant"
            )
        score: int | None
        if tail[1] == "-":
            score = None
        else:
            try:
                score = int(tail[1])
            except ValueError:
                raise PayloadSchemaMismatch(
                    f"field score: {tail[1]!r} is not an integer", field="score"
                )
        try:
            payload = TestOutcome(tail[0] == "1", score)
        except ValueError as exc:
            raise PayloadSchemaMismatch(f"field score: {exc}", field="score")

    try:
        return SensorEvent(device_id, home_ref, ts, kind, payload)
    except ValueError as exc:
        raise PayloadSchemaMismatch(str(exc), field="payload")


def write_log(events: Iterable[SensorEvent], fh: TextIO) -> int:
    """Write a versioned event log; returns the number of events written."""
    fh.write(FILE_HEADER + "\n")
    n = 0
    for e in events:
        fh.write(serialize_event(e) + "\n")
        n += 1
    return n


def read_log(fh: TextIO) -> Iterator[SensorEvent]:
    header = fh.readline().rstrip("\n")
    if header != FILE_HEADER:
        raise MalformedLine(f"missing or wrong file header: {header!r}", field="header")
    for line in fh:
        if line.strip():
            yield parse_event(line)
