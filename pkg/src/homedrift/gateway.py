"""Home-side collector: durable local event store, device-liveness alerting,
daily missing-data reports, and the nightly pseudonymized sync batch.

Batch wire format (UTF-8, also the payload of the HTTP POST):

    #homedrift-batch 1
    batch-id: <pseudonym>:<date>
    pseudonym: <hex>
    date: <iso>
    events: <count>
    blob: <base64 | ->
    digest: <sha256 hex>
    --
    <event lines, home_ref replaced by the pseudonym, sorted by (device, ts)>

The digest is SHA-256 over ``event_lines_utf8 + b"\\x00" + blob_bytes`` where
``blob_bytes`` is the raw AES-GCM ciphertext (empty when no blob). Location
fixes never appear among the event lines: they are sealed into the blob,
decryptable only with the per-subject location key.
"""

from __future__ import annotations

import base64
import datetime as dt
import hashlib
import io
import time
from dataclasses import dataclass
from pathlib import Path
from typing import Optional

from cryptography.hazmat.primitives.ciphers.aead import AESGCM

from . import codec
from .model import (
    CONTINUOUS_PERIODIC_KINDS,
    EVENT_DRIVEN_KINDS,
    DeviceKind,
    HomeConfig,
    SensorEvent,
)

BATCH_HEADER = "#homedrift-batch 1"
EVENT_DRIVEN_BUDGET_S = 72 * 3600.0
SESSION_BUDGET_S = 36 * 3600.0  # sleep-mat is silent while the bed is empty
# cadence-appropriate exceptions: weekly tests, outings-only location fixes
KIND_BUDGET_S = {
    DeviceKind.TABLET_PRESENCE: 8 * 86400.0,
    DeviceKind.LOCATION_SOURCE: 5 * 86400.0,
}


class GatewayError(RuntimeError):
    pass


class UnknownDevice(GatewayError):
    pass


class StaleTimestamp(GatewayError):
    pass


class ConsentViolation(GatewayError):
    pass


class FutureDate(GatewayError):
    pass


class MissingLocationKey(GatewayError):
    pass


class TransportError(RuntimeError):
    """Endpoint unreachable; the batch stays queued."""


def silence_budget_s(kind: DeviceKind, interval_s: Optional[int]) -> float:
    if kind in KIND_BUDGET_S:
        return KIND_BUDGET_S[kind]
    if kind in CONTINUOUS_PERIODIC_KINDS:
        return 2.0 * float(interval_s)
    if kind in EVENT_DRIVEN_KINDS:
        return EVENT_DRIVEN_BUDGET_S
    return SESSION_BUDGET_S


@dataclass
class Alert:
    kind: str  # device-silent | gateway-unreachable | low-battery
    raised_at: float
    device_id: Optional[str] = None
    details: str = ""


@dataclass
class DeviceDayReport:
    device_id: str
    kind: DeviceKind
    expected: Optional[int]  # None for event-driven / session-periodic kinds
    observed: int
    missing_intervals: list[tuple[float, float, int]]  # (start_ts, end_ts, samples)

    @property
    def missed(self) -> int:
        return sum(m for _, _, m in self.missing_intervals)


@dataclass
class MissingDataReport:
    home_id: str
    date: dt.date
    devices: list[DeviceDayReport]

    def render_text(self) -> str:
        lines = [f"missing-data report {self.home_id} {self.date.isoformat()}"]
        for d in self.devices:
            exp = "-" if d.expected is None else str(d.expected)
            lines.append(
                f"{d.device_id}\t{d.kind.value}\texpected={exp}\tobserved={d.observed}"
                f"\tmissed={d.missed}\tgaps={len(d.missing_intervals)}"
            )
            for s, e, m in d.missing_intervals:
                lines.append(f"\tgap\t{s:.0f}\t{e:.0f}\t{m}")
        return "\n".join(lines) + "\n"


@dataclass
class SyncBatch:
    pseudonym: str
    date: dt.date
    event_lines: list[str]
    blob: Optional[bytes]

    @property
    def batch_id(self) -> str:
        return f"{self.pseudonym}:{self.date.isoformat()}"

    def payload_bytes(self) -> bytes:
        text = "".join(line + "\n" for line in self.event_lines)
        return text.encode() + b"\x00" + (self.blob or b"")

    @property
    def digest(self) -> str:
        return hashlib.sha256(self.payload_bytes()).hexdigest()

    def serialize(self) -> str:
        blob_text = "-" if self.blob is None else base64.b64encode(self.blob).decode()
        head = [
            BATCH_HEADER,
            f"batch-id: {self.batch_id}",
            f"pseudonym: {self.pseudonym}",
            f"date: {self.date.isoformat()}",
            f"events: {len(self.event_lines)}",
            f"blob: {blob_text}",
            f"digest: {self.digest}",
            "--",
        ]
        return "\n".join(head) + "\n" + "".join(line + "\n" for line in self.event_lines)

    @classmethod
    def parse(cls, text: str) -> "SyncBatch":
        lines = text.split("\n")
        if not lines or lines[0] != BATCH_HEADER:
            raise ValueError("not a sync batch")
        fields = {}
        i = 1
        while i < len(lines) and lines[i] != "--":
            key, _, value = lines[i].partition(": ")
            fields[key] = value
            i += 1
        if i >= len(lines):
            raise ValueError("missing payload separator")
        event_lines = [l for l in lines[i + 1 :] if l]
        blob = None if fields.get("blob", "-") == "-" else base64.b64decode(fields["blob"])
        batch = cls(
            pseudonym=fields["pseudonym"],
            date=dt.date.fromisoformat(fields["date"]),
            event_lines=event_lines,
            blob=blob,
        )
        if int(fields["events"]) != len(event_lines):
            raise ValueError("event count mismatch")
        if fields["digest"] != batch.digest:
            raise ValueError("digest mismatch")
        return batch


def _nonce(batch_id: str) -> bytes:
    return hashlib.sha256(batch_id.encode()).digest()[:12]


def seal_location_fixes(lines: list[str], key: bytes, batch_id: str) -> bytes:
    """Authenticated encryption of serialized location fixes; the nonce is
    derived from the batch id so rebuilding a day is byte-stable."""
    plaintext = "".join(line + "\n" for line in lines).encode()
    return AESGCM(key).encrypt(_nonce(batch_id), plaintext, batch_id.encode())


def open_location_blob(blob: bytes, key: bytes, batch_id: str) -> list[SensorEvent]:
    plaintext = AESGCM(key).decrypt(_nonce(batch_id), blob, batch_id.encode())
    return [codec.parse_event(line) for line in plaintext.decode().splitlines() if line]


class Gateway:
    """Collector for one home. Single-threaded by design: ingestion is
    serialized, and batches are built from fully written days only."""

    def __init__(
        self,
        home: HomeConfig,
        pseudonym: str,
        location_key: Optional[bytes] = None,
        location_consent: bool = True,
        store_dir: str | Path | None = None,
    ):
        self.home = home
        self.pseudonym = pseudonym
        self.location_key = location_key
        self.location_consent = location_consent
        self.store_dir = Path(store_dir) if store_dir else None
        self._devices = {d.device_id: d for d in home.devices}
        self.last_seen: dict[str, float] = {}  # the liveness table
        self._days: dict[dt.date, list[SensorEvent]] = {}
        self._flushed: set[dt.date] = set()
        self.alerts: list[Alert] = []
        self._open_silent: set[str] = set()
        self.pending: dict[str, SyncBatch] = {}  # batch_id -> batch awaiting ack
        self.synced: dict[str, str] = {}  # batch_id -> digest

    # -- ingestion ------------------------------------------------------------

    def ingest_local(self, e: SensorEvent) -> None:
        dev = self._devices.get(e.device_id)
        if dev is None:
            raise UnknownDevice(e.device_id)
        if e.kind is DeviceKind.LOCATION_SOURCE and not self.location_consent:
            raise ConsentViolation("location events rejected: no consent")
        last = self.last_seen.get(e.device_id)
        if last is not None and e.timestamp <= last:
            raise StaleTimestamp(f"{e.device_id}: {e.timestamp} <= {last}")
        self.last_seen[e.device_id] = e.timestamp
        if e.device_id in self._open_silent:
            self._open_silent.discard(e.device_id)  # device is back; alert closes
        self._days.setdefault(self.home.local_date(e.timestamp), []).append(e)

    def day_events(self, date: dt.date) -> list[SensorEvent]:
        return list(self._days.get(date, []))

    def stored_dates(self) -> list[dt.date]:
        return sorted(self._days)

    def flush_day(self, date: dt.date) -> None:
        """Persist one finished day to the append-only local log."""
        if self.store_dir is None or date in self._flushed:
            return
        day_dir = self.store_dir / "days"
        day_dir.mkdir(parents=True, exist_ok=True)
        with open(day_dir / f"{date.isoformat()}.log", "w", encoding="utf-8") as fh:
            codec.write_log(self._days.get(date, []), fh)
        self._flushed.add(date)

    # -- liveness -------------------------------------------------------------

    def liveness_check(self, now: float) -> list[Alert]:
        fresh: list[Alert] = []
        for dev_id, dev in self._devices.items():
            last = self.last_seen.get(dev_id)
            if last is None:
                continue  # never seen: installation-time concern, not silence
            if dev_id in self._open_silent:
                continue  # already alerted; no duplicates while still silent
            if now - last > silence_budget_s(dev.kind, dev.interval_s):
                alert = Alert(
                    kind="device-silent",
                    raised_at=now,
                    device_id=dev_id,
                    details=f"silent for {now - last:.0f}s",
                )
                self._open_silent.add(dev_id)
                self.alerts.append(alert)
                fresh.append(alert)
        if fresh and self.store_dir is not None:
            self.store_dir.mkdir(parents=True, exist_ok=True)
            with open(self.store_dir / "alerts.log", "a", encoding="utf-8") as fh:
                fh.write(render_alerts(fresh))
        return fresh

    # -- daily missing-data report ---------------------------------------------

    def daily_missing_report(self, date: dt.date, now: Optional[float] = None) -> MissingDataReport:
        day_start = self.home.day_start_utc(date)
        day_end = day_start + 86400.0
        if now is None:
            now = time.time()
        if now < day_end:
            raise FutureDate(f"{date.isoformat()} is not complete yet")
        events = self._days.get(date, [])
        by_dev: dict[str, list[float]] = {}
        for e in events:
            by_dev.setdefault(e.device_id, []).append(e.timestamp)
        reports = []
        for dev_id, dev in self._devices.items():
            ts = by_dev.get(dev_id, [])
            observed = len(ts)
            if dev.kind not in CONTINUOUS_PERIODIC_KINDS:
                reports.append(DeviceDayReport(dev_id, dev.kind, None, observed, []))
                continue
            interval = float(dev.interval_s)
            expected = int(round(86400.0 / interval))
            # virtual samples one period before the day and at its end make the
            # edge arithmetic uniform: missed = round(gap/interval) - 1
            bounds = [day_start - interval] + ts + [day_end]
            intervals = []
            for a, b in zip(bounds, bounds[1:]):
                gap = b - a
                if gap > 2 * interval:
                    missed = int(round(gap / interval)) - 1
                    intervals.append((a, b, missed))
            reports.append(DeviceDayReport(dev_id, dev.kind, expected, observed, intervals))
        return MissingDataReport(home_id=self.home.home_id, date=date, devices=reports)

    def write_report(self, report: MissingDataReport) -> None:
        if self.store_dir is None:
            return
        rep_dir = self.store_dir / "reports"
        rep_dir.mkdir(parents=True, exist_ok=True)
        (rep_dir / f"{report.date.isoformat()}.txt").write_text(report.render_text())

    # -- nightly sync ------------------------------------------------------------

    def build_sync_batch(self, date: dt.date) -> SyncBatch:
        """Pseudonymize the day and seal its location fixes into the blob."""
        events = self._days.get(date, [])
        regular: list[SensorEvent] = []
        location: list[SensorEvent] = []
        for e in events:
            if e.kind is DeviceKind.LOCATION_SOURCE:
                location.append(e)
            else:
                regular.append(e.with_home_ref(self.pseudonym))
        regular.sort(key=lambda e: (e.device_id, e.timestamp))
        batch_id = f"{self.pseudonym}:{date.isoformat()}"
        blob = None
        if location:
            if self.location_key is None:
                raise MissingLocationKey(batch_id)
            loc_lines = [
                codec.serialize_event(e.with_home_ref(self.pseudonym))
                for e in sorted(location, key=lambda e: (e.device_id, e.timestamp))
            ]
            blob = seal_location_fixes(loc_lines, self.location_key, batch_id)
        return SyncBatch(
            pseudonym=self.pseudonym,
            date=date,
            event_lines=[codec.serialize_event(e) for e in regular],
            blob=blob,
        )

    def sync(self, batch: SyncBatch, transport) -> str:
        """At-least-once delivery; safe because ingestion is idempotent on
        (batch id, digest). Returns 'accepted'/'duplicate', or 'retry-later'
        after queuing on transport failure."""
        try:
            status = transport.post_batch(batch.serialize())
        except TransportError:
            self.pending[batch.batch_id] = batch
            return "retry-later"
        self.pending.pop(batch.batch_id, None)
        self.synced[batch.batch_id] = batch.digest
        return status

    def sync_day(self, date: dt.date, transport) -> str:
        return self.sync(self.build_sync_batch(date), transport)

    def sync_pending(self, transport) -> list[str]:
        results = []
        for batch in list(self.pending.values()):
            results.append(self.sync(batch, transport))
        return results


def render_alerts(alerts: list[Alert]) -> str:
    out = io.StringIO()
    for a in alerts:
        out.write(f"{a.raised_at:.0f}\t{a.kind}\t{a.device_id or '-'}\t{a.details}\n")
    return out.getvalue()
