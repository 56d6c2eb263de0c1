"""Telemedicine platform core: idempotent batch ingestion, the pseudonymized
event store partitioned by (pseudonym, date), the access-controlled pseudo-id
manager, and versioned analysis results.

Roles: ``gateway`` may ingest, ``analyst`` works on pseudonymized data,
``location-analysis`` additionally receives the sealed location blobs, and
``clinician`` may re-identify (every re-identification is audited).
"""

from __future__ import annotations

import base64
import datetime as dt
import io
import json
import secrets
import threading
import time
from dataclasses import dataclass, field
from pathlib import Path
from typing import Optional

import numpy as np

from .. import codec
from ..drift import Thresholds, analyze_subject
from ..features import HomeMeta, read_feature_table
from ..gateway import SyncBatch
from ..model import DeviceKind, Identity

ROLES = ("clinician", "analyst", "location-analysis", "gateway")


class PlatformError(RuntimeError):
    code = "platform-error"


class Denied(PlatformError):
    code = "denied"


class AlreadyRegistered(PlatformError):
    code = "already-registered"


class UnknownPseudonym(PlatformError):
    code = "unknown-pseudonym"


class DigestMismatch(PlatformError):
    code = "digest-mismatch"


class MalformedBatch(PlatformError):
    code = "malformed-batch"


class NoResults(PlatformError):
    code = "no-results"


def _require(credential: str, *allowed: str) -> None:
    if credential not in allowed:
        raise Denied(f"role {credential!r} may not perform this operation")


@dataclass
class AuditRow:
    caller: str
    pseudonym: str
    at: float


@dataclass
class StoredBatch:
    batch_id: str
    digest: str
    received_at: float
    event_count: int


@dataclass
class _Results:
    versions: list[dict] = field(default_factory=list)  # {features, reports, summary}


class PlatformService:
    """File-backed when ``root`` is given, in-memory otherwise. Partition
    writes are serialized under one lock; queries see committed batches only."""

    def __init__(self, root: str | Path | None = None, rng: Optional[np.random.Generator] = None):
        self.root = Path(root) if root else None
        self._rng = rng
        self._lock = threading.Lock()
        self._identities: dict[str, Identity] = {}  # pseudonym -> identity
        self._by_identity: dict[tuple[str, str], str] = {}
        self._batches: dict[str, StoredBatch] = {}
        self._events: dict[tuple[str, str], list[str]] = {}  # (pseudonym, date) -> lines
        self._blobs: dict[tuple[str, str], bytes] = {}
        self._meta: dict[str, dict] = {}
        self._results: dict[str, _Results] = {}
        self.audit_log: list[AuditRow] = []
        self.last_batch_at: dict[str, float] = {}
        if self.root:
            self.root.mkdir(parents=True, exist_ok=True)
            self._load()

    # -- persistence -----------------------------------------------------------

    def _load(self) -> None:
        idx = self.root / "index.json"
        if not idx.exists():
            return
        doc = json.loads(idx.read_text())
        self._identities = {
            p: Identity(v["name"], v["home_id"]) for p, v in doc["identities"].items()
        }
        self._by_identity = {
            (v.name, v.home_id): p for p, v in self._identities.items()
        }
        self._batches = {
            b["batch_id"]: StoredBatch(**b) for b in doc["batches"]
        }
        self._meta = doc["metadata"]
        for key_text in doc["partitions"]:
            pseudonym, date = key_text.split("/")
            path = self.root / "events" / pseudonym / f"{date}.log"
            lines = path.read_text().splitlines()[1:]  # drop file header
            self._events[(pseudonym, date)] = lines
            blob_path = self.root / "blobs" / pseudonym / f"{date}.bin"
            if blob_path.exists():
                self._blobs[(pseudonym, date)] = blob_path.read_bytes()
        for pseudonym in self._identities:
            res_dir = self.root / "results" / pseudonym
            if not res_dir.exists():
                continue
            res = _Results()
            for vdir in sorted(res_dir.iterdir(), key=lambda p: int(p.name[1:])):
                res.versions.append(
                    {
                        "features": (vdir / "features.csv").read_text(),
                        "reports": (vdir / "reports.json").read_text(),
                        "summary": (vdir / "summary.txt").read_text(),
                    }
                )
            if res.versions:
                self._results[pseudonym] = res

    def _save_index(self) -> None:
        if not self.root:
            return
        doc = {
            "identities": {
                p: {"name": i.name, "home_id": i.home_id} for p, i in self._identities.items()
            },
            "batches": [
                {
                    "batch_id": b.batch_id,
                    "digest": b.digest,
                    "received_at": b.received_at,
                    "event_count": b.event_count,
                }
                for b in self._batches.values()
            ],
            "metadata": self._meta,
            "partitions": [f"{p}/{d}" for p, d in self._events],
        }
        (self.root / "index.json").write_text(json.dumps(doc, sort_keys=True, indent=1))

    # -- pseudo-id manager -------------------------------------------------------

    def register_subject(self, identity: Identity, credential: str = "clinician") -> str:
        _require(credential, "clinician")
        key = (identity.name, identity.home_id)
        with self._lock:
            if key in self._by_identity:
                raise AlreadyRegistered(identity.home_id)
            if self._rng is not None:
                pseudonym = bytes(self._rng.integers(0, 256, 16, dtype=np.uint8)).hex()
            else:
                pseudonym = secrets.token_hex(16)
            self._identities[pseudonym] = identity
            self._by_identity[key] = pseudonym
            self._save_index()
        return pseudonym

    def resolve_identity(self, pseudonym: str, credential: str) -> Identity:
        self.audit_log.append(AuditRow(caller=credential, pseudonym=pseudonym, at=time.time()))
        if self.root:
            with open(self.root / "audit.log", "a", encoding="utf-8") as fh:
                fh.write(f"{time.time():.3f}\t{credential}\t{pseudonym}\n")
        _require(credential, "clinician")
        identity = self._identities.get(pseudonym)
        if identity is None:
            raise UnknownPseudonym(pseudonym)
        return identity

    def find_pseudonym(self, identity: Identity, credential: str) -> str:
        _require(credential, "clinician")
        pseudonym = self._by_identity.get((identity.name, identity.home_id))
        if pseudonym is None:
            raise UnknownPseudonym(f"{identity.home_id} is not registered")
        return pseudonym

    def pseudonyms(self, credential: str) -> list[str]:
        _require(credential, "clinician", "analyst", "location-analysis")
        return sorted(self._identities)

    # -- ingestion ----------------------------------------------------------------

    def ingest_batch(self, batch_text: str, credential: str = "gateway") -> str:
        _require(credential, "gateway")
        try:
            batch = SyncBatch.parse(batch_text)
        except ValueError as exc:
            if "digest mismatch" in str(exc):
                raise DigestMismatch(str(exc))
            raise MalformedBatch(str(exc))
        if batch.pseudonym not in self._identities:
            raise UnknownPseudonym(batch.pseudonym)
        key = (batch.pseudonym, batch.date.isoformat())
        with self._lock:
            known = self._batches.get(batch.batch_id)
            if known is not None:
                if known.digest != batch.digest:
                    raise DigestMismatch(
                        f"batch {batch.batch_id} already stored with a different digest"
                    )
                return "duplicate"
            self._events[key] = list(batch.event_lines)
            if batch.blob is not None:
                self._blobs[key] = batch.blob
            self._batches[batch.batch_id] = StoredBatch(
                batch_id=batch.batch_id,
                digest=batch.digest,
                received_at=time.time(),
                event_count=len(batch.event_lines),
            )
            self.last_batch_at[batch.pseudonym] = time.time()
            if self.root:
                ev_dir = self.root / "events" / batch.pseudonym
                ev_dir.mkdir(parents=True, exist_ok=True)
                with open(ev_dir / f"{batch.date.isoformat()}.log", "w", encoding="utf-8") as fh:
                    fh.write(codec.FILE_HEADER + "\n")
                    for line in batch.event_lines:
                        fh.write(line + "\n")
                if batch.blob is not None:
                    blob_dir = self.root / "blobs" / batch.pseudonym
                    blob_dir.mkdir(parents=True, exist_ok=True)
                    (blob_dir / f"{batch.date.isoformat()}.bin").write_bytes(batch.blob)
                self._save_index()
        return "accepted"

    # -- queries -------------------------------------------------------------------

    def stored_event_count(self, pseudonym: str) -> int:
        return sum(
            b.event_count for b in self._batches.values() if b.batch_id.startswith(pseudonym + ":")
        )

    def query_events(
        self,
        pseudonym: str,
        start: dt.date,
        end: dt.date,
        kinds: Optional[list[str]] = None,
        credential: str = "analyst",
        limit: Optional[int] = None,
        offset: int = 0,
    ) -> dict:
        """Time-ordered event lines for [start, end); location data is returned
        only as opaque blobs regardless of the caller's role. ``limit``/
        ``offset`` page through large ranges."""
        _require(credential, "analyst", "location-analysis", "clinician")
        if pseudonym not in self._identities:
            raise UnknownPseudonym(pseudonym)
        want_location = kinds is None or DeviceKind.LOCATION_SOURCE.value in kinds
        lines: list[str] = []
        blobs: list[dict] = []
        d = start
        while d < end:
            key = (pseudonym, d.isoformat())
            day_lines = self._events.get(key, [])
            if kinds is None:
                lines.extend(day_lines)
            else:
                wanted = set(kinds)
                for line in day_lines:
                    if line.split("\t")[3] in wanted:
                        lines.append(line)
            if want_location and key in self._blobs:
                blobs.append(
                    {
                        "date": d.isoformat(),
                        "batch_id": f"{pseudonym}:{d.isoformat()}",
                        "ciphertext_b64": base64.b64encode(self._blobs[key]).decode(),
                    }
                )
            d += dt.timedelta(days=1)
        lines.sort(key=lambda l: l.split("\t")[0])
        total = len(lines)
        if offset or limit is not None:
            lines = lines[offset : None if limit is None else offset + limit]
        return {
            "version": 1,
            "pseudonym": pseudonym,
            "events": lines,
            "location_blobs": blobs,
            "total_events": total,
            "offset": offset,
        }

    # -- metadata --------------------------------------------------------------------

    def store_metadata(self, pseudonym: str, meta: dict, credential: str = "gateway") -> None:
        _require(credential, "gateway", "clinician")
        if pseudonym not in self._identities:
            raise UnknownPseudonym(pseudonym)
        HomeMeta.from_json(meta)  # validates shape
        with self._lock:
            self._meta[pseudonym] = meta
            self._save_index()

    def get_metadata(self, pseudonym: str, credential: str = "analyst") -> dict:
        _require(credential, "analyst", "location-analysis", "clinician")
        meta = self._meta.get(pseudonym)
        if meta is None:
            raise UnknownPseudonym(pseudonym)
        return meta

    # -- analysis results ---------------------------------------------------------------

    def store_results(
        self,
        pseudonym: str,
        features_text: str,
        reports_json: str,
        summary_text: str,
        credential: str = "analyst",
    ) -> int:
        _require(credential, "analyst")
        if pseudonym not in self._identities:
            raise UnknownPseudonym(pseudonym)
        with self._lock:
            res = self._results.setdefault(pseudonym, _Results())
            res.versions.append(
                {"features": features_text, "reports": reports_json, "summary": summary_text}
            )
            version = len(res.versions)
            if self.root:
                vdir = self.root / "results" / pseudonym / f"v{version}"
                vdir.mkdir(parents=True, exist_ok=True)
                (vdir / "features.csv").write_text(features_text)
                (vdir / "reports.json").write_text(reports_json)
                (vdir / "summary.txt").write_text(summary_text)
        return version

    def query_results(
        self, pseudonym: str, version: Optional[int] = None, credential: str = "analyst"
    ) -> dict:
        """Latest (or requested) result version; a subject with no stored
        results yields an empty version-0 document, not an error."""
        _require(credential, "analyst", "clinician")
        if pseudonym not in self._identities:
            raise UnknownPseudonym(pseudonym)
        res = self._results.get(pseudonym)
        if res is None or not res.versions:
            return {"features": "", "reports": "[]", "summary": "", "version": 0, "latest": 0}
        if version is None:
            version = len(res.versions)
        if not 1 <= version <= len(res.versions):
            raise NoResults(f"{pseudonym} has no version {version}")
        doc = dict(res.versions[version - 1])
        doc["version"] = version
        doc["latest"] = len(res.versions)
        return doc

    # -- what-if re-scoring ----------------------------------------------------------------

    def rescore(
        self, pseudonym: str, overrides: dict, credential: str = "analyst"
    ) -> dict:
        """Re-run the detector on the stored feature table with overridden
        thresholds; nothing is persisted."""
        _require(credential, "analyst", "clinician")
        stored = self.query_results(pseudonym, credential="analyst")
        if stored["version"] == 0:
            raise NoResults(pseudonym)
        vectors = read_feature_table(io.StringIO(stored["features"]), home_ref=pseudonym)
        thresholds = Thresholds().with_overrides(**overrides)
        result = analyze_subject(vectors, thresholds, pseudonym=pseudonym)
        return {
            "thresholds": overrides,
            "reports": [r.to_json() for r in result.reports],
            "flags": {
                feature: [
                    {
                        "start": w.start.isoformat(),
                        "end": w.end.isoformat(),
                        "flagged": w.flagged,
                        "direction": w.direction,
                        "effect": w.effect,
                        "p_value": w.p_value,
                    }
                    for w in scores
                ]
                for feature, scores in result.window_scores.items()
            },
        }

    # -- gateway connectivity ----------------------------------------------------------------

    def connectivity_alerts(self, now: float, max_silence_s: float = 36 * 3600.0) -> list[dict]:
        out = []
        for pseudonym, at in self.last_batch_at.items():
            if now - at > max_silence_s:
                out.append(
                    {"kind": "gateway-unreachable", "pseudonym": pseudonym, "silent_s": now - at}
                )
        return out
