"""End-to-end orchestration: simulate homes, run each gateway day by day,
sync nightly batches into the platform, then run the pseudonymized analysis
and store results.

Re-running a finished or crashed run against the same output directory is
safe: batch ingestion is idempotent on (batch id, digest) and analysis
results are versioned appends.
"""

from __future__ import annotations

import datetime as dt
import hashlib
import io
import json
from dataclasses import dataclass, field
from pathlib import Path
from typing import Callable, Optional

import numpy as np

from . import codec
from .config import HomeSetup, RunConfig
from .drift import (
    AnalysisResult,
    Thresholds,
    analyze_subject,
    clinician_summary,
    reports_to_json,
)
from .features import DailyFeatureVector, HomeMeta, extract_range, write_feature_table
from .gateway import Gateway, TransportError
from .model import DeviceKind, SensorEvent
from .platform import AlreadyRegistered, PlatformService
from .simulate import DayTrace, SimulatedHome, simulate
from .streams import events_to_streams


# -- transports -----------------------------------------------------------------


class InProcessTransport:
    def __init__(self, service: PlatformService):
        self.service = service

    def post_batch(self, text: str) -> str:
        return self.service.ingest_batch(text, credential="gateway")


class HttpTransport:
    """POSTs batches to a running platform; ``client`` is any httpx-compatible
    client (a real one or a test client)."""

    def __init__(self, client, base_url: str, token: str):
        self.client = client
        self.base_url = base_url.rstrip("/")
        self.token = token

    def post_batch(self, text: str) -> str:
        try:
            resp = self.client.post(
                self.base_url + "/api/batches",
                content=text,
                headers={"Authorization": f"Bearer {self.token}"},
            )
        except Exception as exc:
            raise TransportError(str(exc))
        if resp.status_code >= 500:
            raise TransportError(f"platform returned {resp.status_code}")
        if resp.status_code >= 400:
            raise RuntimeError(f"batch rejected: {resp.text}")
        return resp.json()["status"]


class OutageTransport:
    """Wraps a transport and simulates unreachability on configured nights."""

    def __init__(self, inner, outage_nights: set[int], start: dt.date):
        self.inner = inner
        self.outage_nights = outage_nights
        self.start = start
        self.tonight: Optional[int] = None

    def post_batch(self, text: str) -> str:
        if self.tonight is not None and self.tonight in self.outage_nights:
            raise TransportError("gateway link down (injected outage)")
        return self.inner.post_batch(text)


def location_key_for(seed: int, home_id: str) -> bytes:
    return hashlib.sha256(f"{seed}:{home_id}:location-key".encode()).digest()[:16]


def platform_tokens(seed: int) -> dict[str, str]:
    """Deterministic static bearer tokens, one per role."""
    tokens = {}
    for role in ("clinician", "analyst", "location-analysis", "gateway"):
        digest = hashlib.sha256(f"{seed}:{role}:token".encode()).hexdigest()[:12]
        tokens[f"tok-{digest}"] = role
    return tokens


# -- run artifacts ------------------------------------------------------------------


@dataclass
class RunSummary:
    out_dir: Optional[Path]
    pseudonyms: dict[str, str]  # home_id -> pseudonym
    stored_events: dict[str, int]  # pseudonym -> platform event count
    emitted_non_location: dict[str, int]
    reports: dict[str, list]  # pseudonym -> ChangeReport list
    alerts: dict[str, int] = field(default_factory=dict)


def run_simulation(cfg: RunConfig, out_dir: str | Path) -> dict:
    """cmd_simulate: event logs plus the ground-truth manifest."""
    result = simulate(
        [h.sim for h in cfg.homes], cfg.start, cfg.days, cfg.seed, out_dir=out_dir
    )
    return result.manifest


def run_pipeline(
    cfg: RunConfig,
    out_dir: str | Path | None = None,
    service: Optional[PlatformService] = None,
    transport_factory: Optional[Callable[[HomeSetup], object]] = None,
    force_resend: bool = False,
    write_logs: bool = False,
) -> RunSummary:
    """cmd_run: the full loop. ``transport_factory`` lets callers route sync
    through HTTP; the default is in-process against ``service``."""
    out_path = Path(out_dir) if out_dir else None
    if service is None:
        rng = np.random.Generator(np.random.Philox(key=cfg.seed ^ 0x9E3779B97F4A7C15))
        service = PlatformService(
            root=out_path / "platform" if out_path else None, rng=rng
        )
    sim_result = simulate(
        [h.sim for h in cfg.homes],
        cfg.start,
        cfg.days,
        cfg.seed,
        out_dir=out_path if write_logs else None,
        keep_traces=True,
    )
    if out_path:
        (out_path / "keys.json").parent.mkdir(parents=True, exist_ok=True)

    pseudonyms: dict[str, str] = {}
    stored: dict[str, int] = {}
    emitted: dict[str, int] = {}
    all_reports: dict[str, list] = {}
    alerts: dict[str, int] = {}
    keys: dict[str, str] = {}

    for setup in cfg.homes:
        sim = setup.sim
        home_id = sim.home.home_id
        try:
            pseudonym = service.register_subject(setup.identity, credential="clinician")
        except AlreadyRegistered:
            pseudonym = service.find_pseudonym(setup.identity, credential="clinician")
        pseudonyms[home_id] = pseudonym
        key = location_key_for(cfg.seed, home_id)
        keys[home_id] = key.hex()
        meta = HomeMeta.from_home(sim.home)
        service.store_metadata(pseudonym, meta.to_json(), credential="gateway")

        gw = Gateway(
            sim.home,
            pseudonym,
            location_key=key,
            location_consent=sim.subject.location_consent,
            store_dir=out_path / "gateways" / home_id if out_path else None,
        )
        base_transport = (
            transport_factory(setup) if transport_factory else InProcessTransport(service)
        )
        outage_nights = set()
        halt_nights = set()
        for d0, d1, halts in sim.faults.outage_days(cfg.days):
            for d in range(d0, d1):
                outage_nights.add(d)
                if halts:
                    halt_nights.add(d)
        transport = OutageTransport(base_transport, outage_nights, cfg.start)

        non_location = 0
        traces = sim_result.traces[home_id]
        for day_index, trace in enumerate(traces):
            date = trace.date
            events = trace.to_events()
            if day_index in halt_nights:
                continue  # buffering halted: the day is lost at the gateway
            for e in events:
                gw.ingest_local(e)
                if e.kind is not DeviceKind.LOCATION_SOURCE:
                    non_location += 1
            gw.flush_day(date)
            day_end = trace.day_start_utc + 86400.0
            gw.liveness_check(day_end)
            gw.write_report(gw.daily_missing_report(date, now=day_end + 60))
            transport.tonight = day_index
            status = gw.sync_day(date, transport)
            if status != "retry-later":
                gw.sync_pending(transport)
        transport.tonight = None
        gw.sync_pending(transport)
        if force_resend:
            for batch_date in gw.stored_dates():
                gw.sync_day(batch_date, transport)
        emitted[pseudonym] = non_location
        stored[pseudonym] = service.stored_event_count(pseudonym)
        alerts[home_id] = len(gw.alerts)

    if out_path:
        (out_path / "keys.json").write_text(json.dumps(keys, sort_keys=True, indent=1))
        (out_path / "pseudonyms.json").write_text(json.dumps(pseudonyms, sort_keys=True, indent=1))

    # analysis over pseudonymized platform data
    for setup in cfg.homes:
        pseudonym = pseudonyms[setup.sim.home.home_id]
        result, vectors = analyze_platform_subject(
            service, pseudonym, cfg.start, cfg.start + dt.timedelta(days=cfg.days), cfg.thresholds
        )
        meta = HomeMeta.from_json(service.get_metadata(pseudonym, credential="analyst"))
        buf = io.StringIO()
        write_feature_table(vectors, meta, buf)
        summary = clinician_summary(pseudonym, result.reports)
        service.store_results(
            pseudonym, buf.getvalue(), reports_to_json(result.reports), summary,
            credential="analyst",
        )
        all_reports[pseudonym] = result.reports
        if out_path:
            sum_dir = out_path / "summaries"
            sum_dir.mkdir(parents=True, exist_ok=True)
            (sum_dir / f"{pseudonym}.txt").write_text(summary)

    return RunSummary(
        out_dir=out_path,
        pseudonyms=pseudonyms,
        stored_events=stored,
        emitted_non_location=emitted,
        reports=all_reports,
        alerts=alerts,
    )


# -- analysis helpers ------------------------------------------------------------------


def vectors_from_events(
    lines_or_events, meta: HomeMeta, start: dt.date, end: dt.date, home_ref: str = ""
) -> list[DailyFeatureVector]:
    """Group a pseudonymized event stream into local days and extract."""
    events: list[SensorEvent] = []
    for item in lines_or_events:
        events.append(codec.parse_event(item) if isinstance(item, str) else item)
    by_date: dict[dt.date, list[SensorEvent]] = {}
    for e in events:
        day0 = meta.day_start_utc(start)
        date = start + dt.timedelta(days=int((e.timestamp - day0) // 86400))
        by_date.setdefault(date, []).append(e)
    days = []
    d = start
    while d < end:
        evs = by_date.get(d, [])
        days.append((d, events_to_streams(evs)))
        d += dt.timedelta(days=1)
    return extract_range(days, meta, home_ref=home_ref)


def analyze_platform_subject(
    service: PlatformService,
    pseudonym: str,
    start: dt.date,
    end: dt.date,
    thresholds: Thresholds = Thresholds(),
) -> tuple[AnalysisResult, list[DailyFeatureVector]]:
    """UNTRUSTED-side analysis: everything comes through the query API under
    the analyst role (location stays sealed)."""
    meta = HomeMeta.from_json(service.get_metadata(pseudonym, credential="analyst"))
    page = service.query_events(pseudonym, start, end, credential="analyst")
    vectors = vectors_from_events(page["events"], meta, start, end, home_ref=pseudonym)
    result = analyze_subject(vectors, thresholds, pseudonym=pseudonym, reference_start=start)
    return result, vectors


def vectors_from_traces(
    sim: SimulatedHome, traces: list[DayTrace], home_ref: str = ""
) -> list[DailyFeatureVector]:
    """Fast path used by the Monte-Carlo acceptance runs: features straight
    from simulator traces (asserted elsewhere to match the synced path)."""
    meta = HomeMeta.from_home(sim.home)
    return extract_range([(t.date, t.streams) for t in traces], meta, home_ref=home_ref)


def analyze_home_traces(
    sim: SimulatedHome,
    traces: list[DayTrace],
    thresholds: Thresholds = Thresholds(),
    pseudonym: str = "",
) -> AnalysisResult:
    vectors = vectors_from_traces(sim, traces, home_ref=pseudonym or sim.home.home_id)
    return analyze_subject(vectors, thresholds, pseudonym=pseudonym or sim.home.home_id)
