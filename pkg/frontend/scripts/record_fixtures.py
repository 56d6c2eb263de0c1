"""Record real platform API responses as dashboard test fixtures.

Runs the bundled year-long change scenario through the full pipeline, then
captures the exact HTTP responses the dashboard consumes. Re-run after any
API change:

    python frontend/scripts/record_fixtures.py
"""

import json
from importlib import resources
from pathlib import Path

import numpy as np
from fastapi.testclient import TestClient

from homedrift.config import load_scenario
from homedrift.pipeline import run_pipeline
from homedrift.platform import PlatformService
from homedrift.platform.httpapi import create_app

FIXTURES = Path(__file__).resolve().parents[1] / "tests" / "fixtures"
TOKENS = {"tok-clin": "clinician", "tok-analyst": "analyst"}
FEATURES = ["lunch_cooking_peaks", "lunchtime_outings", "sleep_deep_min", "sleep_rem_min"]


def auth(token):
    return {"Authorization": f"Bearer {token}"}


def main():
    FIXTURES.mkdir(parents=True, exist_ok=True)
    cfg = load_scenario(str(resources.files("homedrift") / "scenarios" / "lunch_sleep_shift.yaml"))
    service = PlatformService(rng=np.random.default_rng(20260101))
    summary = run_pipeline(cfg, service=service)
    pseudonym = summary.pseudonyms["home-001"]
    client = TestClient(create_app(service, TOKENS))

    def save(name, resp):
        doc = {"status": resp.status_code, "body": resp.json()}
        (FIXTURES / f"{name}.json").write_text(json.dumps(doc, indent=1, sort_keys=True))
        print(f"{name}: {resp.status_code}")

    save("subjects", client.get("/api/subjects", headers=auth("tok-analyst")))
    save("results", client.get(f"/api/results/{pseudonym}", headers=auth("tok-analyst")))
    for feature in FEATURES:
        save(
            f"series_{feature}",
            client.get(
                f"/api/results/{pseudonym}/series",
                params={"feature": feature},
                headers=auth("tok-analyst"),
            ),
        )
    save(
        "rescore_default",
        client.post(
            "/api/rescore",
            json={"pseudonym": pseudonym, "thresholds": {}},
            headers=auth("tok-analyst"),
        ),
    )
    save(
        "rescore_strict",
        client.post(
            "/api/rescore",
            json={"pseudonym": pseudonym, "thresholds": {"persistence": 40}},
            headers=auth("tok-analyst"),
        ),
    )
    save(
        "results_after_rescore",
        client.get(f"/api/results/{pseudonym}", headers=auth("tok-analyst")),
    )
    save(
        "resolve_clinician",
        client.post("/api/resolve", json={"pseudonym": pseudonym}, headers=auth("tok-clin")),
    )
    save(
        "resolve_analyst",
        client.post("/api/resolve", json={"pseudonym": pseudonym}, headers=auth("tok-analyst")),
    )
    save(
        "resolve_unknown",
        client.post("/api/resolve", json={"pseudonym": "f" * 32}, headers=auth("tok-clin")),
    )
    (FIXTURES / "meta.json").write_text(json.dumps({"pseudonym": pseudonym}, indent=1))
    print("fixtures written to", FIXTURES)


if __name__ == "__main__":
    main()
