import datetime as dt
import io

import numpy as np
import pytest
from fastapi.testclient import TestClient

from homedrift import gateway as gw
from homedrift.drift import reports_to_json
from homedrift.features import HomeMeta, write_feature_table
from homedrift.model import DeviceKind, Identity
from homedrift.pipeline import vectors_from_traces
from homedrift.platform import (
    AlreadyRegistered,
    Denied,
    DigestMismatch,
    MalformedBatch,
    PlatformService,
    UnknownPseudonym,
)
from homedrift.platform.httpapi import create_app
from conftest import START

KEY = bytes(range(16))


def _service(**kw):
    return PlatformService(rng=np.random.default_rng(5), **kw)


def _batch_for(sim, result, pseudonym, day_index=0):
    g = gw.Gateway(sim.home, pseudonym, location_key=KEY)
    for e in result.traces[sim.home.home_id][day_index].to_events():
        g.ingest_local(e)
    return g.build_sync_batch(result.traces[sim.home.home_id][day_index].date)


def test_register_resolve_and_audit():
    svc = _service()
    p = svc.register_subject(Identity("Participant One", "home-001"))
    assert len(p) == 32
    with pytest.raises(AlreadyRegistered):
        svc.register_subject(Identity("Participant One", "home-001"))
    identity = svc.resolve_identity(p, credential="clinician")
    assert identity.home_id == "home-001"
    with pytest.raises(Denied):
        svc.resolve_identity(p, credential="analyst")
    with pytest.raises(UnknownPseudonym):
        svc.resolve_identity("f" * 32, credential="clinician")
    # every call audited, allowed or not
    assert len(svc.audit_log) == 3
    assert {r.caller for r in svc.audit_log} == {"clinician", "analyst"}


def test_thousand_registrations_unique():
    svc = _service()
    seen = set()
    for i in range(1000):
        seen.add(svc.register_subject(Identity(f"Subject {i}", f"casa-{i:04d}")))
    assert len(seen) == 1000


def test_ingest_accept_duplicate_and_digest_mismatch(sim_month):
    sim, result = sim_month
    svc = _service()
    p = svc.register_subject(Identity("One", "home-001"))
    batch = _batch_for(sim, result, p)
    text = batch.serialize()
    assert svc.ingest_batch(text) == "accepted"
    count = svc.stored_event_count(p)
    assert count == len(batch.event_lines)
    assert svc.ingest_batch(text) == "duplicate"
    assert svc.stored_event_count(p) == count
    # altered payload under the same batch id
    tampered = batch.serialize().replace("21.", "22.", 1)
    with pytest.raises((DigestMismatch, MalformedBatch)):
        svc.ingest_batch(tampered)
    assert svc.stored_event_count(p) == count


def test_ingest_requires_gateway_role(sim_month):
    sim, result = sim_month
    svc = _service()
    p = svc.register_subject(Identity("One", "home-001"))
    batch = _batch_for(sim, result, p)
    with pytest.raises(Denied):
        svc.ingest_batch(batch.serialize(), credential="analyst")


def test_query_events_empty_range_and_conservation(sim_month):
    sim, result = sim_month
    svc = _service()
    p = svc.register_subject(Identity("One", "home-001"))
    total = 0
    for i in range(5):
        batch = _batch_for(sim, result, p, day_index=i)
        svc.ingest_batch(batch.serialize())
        total += len(batch.event_lines)
    empty = svc.query_events(p, START, START, credential="analyst")
    assert empty["events"] == [] and empty["location_blobs"] == []
    page = svc.query_events(p, START, START + dt.timedelta(days=5), credential="analyst")
    assert len(page["events"]) == total
    ts = [line.split("\t")[0] for line in page["events"]]
    assert ts == sorted(ts)


def test_location_returned_only_as_ciphertext(sim_month):
    sim, result = sim_month
    svc = _service()
    p = svc.register_subject(Identity("One", "home-001"))
    with_fix = None
    for i, trace in enumerate(result.traces["home-001"]):
        if trace.count_of_kind(DeviceKind.LOCATION_SOURCE):
            with_fix = i
            break
    assert with_fix is not None
    batch = _batch_for(sim, result, p, day_index=with_fix)
    svc.ingest_batch(batch.serialize())
    page = svc.query_events(
        p, START + dt.timedelta(days=with_fix), START + dt.timedelta(days=with_fix + 1),
        kinds=["location-source"], credential="analyst",
    )
    assert page["events"] == []
    assert len(page["location_blobs"]) == 1
    blob = page["location_blobs"][0]
    import base64

    opened = gw.open_location_blob(base64.b64decode(blob["ciphertext_b64"]), KEY, blob["batch_id"])
    assert opened, "location-analysis key decrypts the blob"


def test_results_versioning_latest_wins(sim_month):
    sim, result = sim_month
    svc = _service()
    p = svc.register_subject(Identity("One", "home-001"))
    empty = svc.query_results(p)  # nothing stored yet: empty, not an error
    assert empty["version"] == 0 and empty["reports"] == "[]"
    svc.store_results(p, "table-v1", "[]", "s1")
    svc.store_results(p, "table-v2", "[]", "s2")
    latest = svc.query_results(p)
    assert latest["version"] == 2 and latest["features"] == "table-v2"
    first = svc.query_results(p, version=1)
    assert first["features"] == "table-v1"
    with pytest.raises(UnknownPseudonym):
        svc.store_results("f" * 32, "x", "[]", "")


def test_metadata_round_trip_and_validation(sim_month):
    sim, _ = sim_month
    svc = _service()
    p = svc.register_subject(Identity("One", "home-001"))
    meta = HomeMeta.from_home(sim.home)
    svc.store_metadata(p, meta.to_json())
    assert HomeMeta.from_json(svc.get_metadata(p)) == meta
    with pytest.raises(Exception):
        svc.store_metadata(p, {"bogus": 1})


def test_persistence_across_reopen(tmp_path, sim_month):
    sim, result = sim_month
    svc = PlatformService(root=tmp_path, rng=np.random.default_rng(5))
    p = svc.register_subject(Identity("One", "home-001"))
    batch = _batch_for(sim, result, p)
    svc.ingest_batch(batch.serialize())
    svc.store_metadata(p, HomeMeta.from_home(sim.home).to_json())
    svc.store_results(p, "tbl", "[]", "sum")
    again = PlatformService(root=tmp_path)
    assert again.stored_event_count(p) == len(batch.event_lines)
    assert again.ingest_batch(batch.serialize()) == "duplicate"
    assert again.query_results(p)["features"] == "tbl"
    assert again.resolve_identity(p, credential="clinician").name == "One"


def test_rescore_does_not_mutate_stored_results(sim_month):
    sim, result = sim_month
    svc = _service()
    p = svc.register_subject(Identity("One", "home-001"))
    meta = HomeMeta.from_home(sim.home)
    vectors = vectors_from_traces(sim, result.traces["home-001"], home_ref=p)
    buf = io.StringIO()
    write_feature_table(vectors, meta, buf)
    svc.store_results(p, buf.getvalue(), reports_to_json([]), "none")
    out = svc.rescore(
        p,
        {"persistence": 1, "alpha": 0.5, "effect_min": 0.0,
         "reference_days": 14, "window_days": 7, "min_support": 10},
    )
    assert "flags" in out and out["flags"]
    stored = svc.query_results(p)
    assert stored["version"] == 1 and stored["latest"] == 1
    with pytest.raises(Exception):
        svc.rescore(p, {"alpha": 1.5})


# -- HTTP layer ------------------------------------------------------------------

TOKENS = {
    "tok-clin": "clinician",
    "tok-analyst": "analyst",
    "tok-loc": "location-analysis",
    "tok-gw": "gateway",
}


def _auth(token):
    return {"Authorization": f"Bearer {token}"}


@pytest.fixture()
def api(sim_month):
    sim, result = sim_month
    svc = _service()
    app = create_app(svc, TOKENS)
    client = TestClient(app)
    p = client.post("/api/subjects", json={"name": "One", "home_id": "home-001"},
                    headers=_auth("tok-clin")).json()["pseudonym"]
    batch = _batch_for(sim, result, p)
    return sim, result, client, p, batch


def test_http_ingest_events_and_roles(api):
    sim, result, client, p, batch = api
    r = client.post("/api/batches", content=batch.serialize(), headers=_auth("tok-gw"))
    assert r.status_code == 200 and r.json()["status"] == "accepted"
    r = client.post("/api/batches", content=batch.serialize(), headers=_auth("tok-gw"))
    assert r.json()["status"] == "duplicate"
    r = client.post("/api/batches", content=batch.serialize(), headers=_auth("tok-analyst"))
    assert r.status_code == 403 and r.json()["error"]["code"] == "denied"
    r = client.get(
        "/api/events",
        params={"pseudonym": p, "from": START.isoformat(), "to": "2026-01-02"},
        headers=_auth("tok-analyst"),
    )
    assert r.status_code == 200
    assert len(r.json()["events"]) == len(batch.event_lines)
    assert client.get("/api/events", params={"pseudonym": p, "from": "2026-01-01", "to": "2026-01-02"}).status_code == 401


def test_http_resolve_denied_for_analyst(api):
    _, _, client, p, _ = api
    ok = client.post("/api/resolve", json={"pseudonym": p}, headers=_auth("tok-clin"))
    assert ok.status_code == 200 and ok.json()["home_id"] == "home-001"
    denied = client.post("/api/resolve", json={"pseudonym": p}, headers=_auth("tok-analyst"))
    assert denied.status_code == 403
    missing = client.post("/api/resolve", json={"pseudonym": "f" * 32}, headers=_auth("tok-clin"))
    assert missing.status_code == 404


def test_http_rescore_validates_thresholds(api):
    sim, result, client, p, batch = api
    meta = HomeMeta.from_home(sim.home)
    vectors = vectors_from_traces(sim, result.traces["home-001"], home_ref=p)
    buf = io.StringIO()
    write_feature_table(vectors, meta, buf)
    client.post(
        "/api/results/" + p,
        json={"features": buf.getvalue(), "reports": "[]", "summary": ""},
        headers=_auth("tok-analyst"),
    )
    bad = client.post("/api/rescore", json={"pseudonym": p, "thresholds": {"alpha": 1.5}},
                      headers=_auth("tok-analyst"))
    assert bad.status_code == 422
    ok = client.post("/api/rescore", json={"pseudonym": p, "thresholds": {"persistence": 2}},
                     headers=_auth("tok-analyst"))
    assert ok.status_code == 200 and "flags" in ok.json()


def test_http_series_endpoint(api):
    sim, result, client, p, batch = api
    meta = HomeMeta.from_home(sim.home)
    vectors = vectors_from_traces(sim, result.traces["home-001"], home_ref=p)
    buf = io.StringIO()
    write_feature_table(vectors, meta, buf)
    client.post("/api/results/" + p,
                json={"features": buf.getvalue(), "reports": "[]", "summary": ""},
                headers=_auth("tok-analyst"))
    r = client.get(f"/api/results/{p}/series", params={"feature": "sleep_deep_min"},
                   headers=_auth("tok-analyst"))
    doc = r.json()
    assert len(doc["dates"]) == len(result.traces["home-001"])
    assert any(v is not None for v in doc["values"])
    assert len(doc["rolling_median"]) == len(doc["dates"])
