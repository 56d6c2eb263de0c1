"""HTTP surface over :class:`PlatformService`.

Static bearer tokens map to roles; errors come back as a structured status
with a machine-readable code: ``{"error": {"code": ..., "detail": ...}}``.
"""

from __future__ import annotations

import datetime as dt
import io
import json
from pathlib import Path
from typing import Optional

from fastapi import Depends, FastAPI, Header, HTTPException, Query, Request
from fastapi.responses import JSONResponse, PlainTextResponse

from ..drift import reports_from_json
from ..features import read_feature_table
from ..model import Identity
from ..report import feature_series
from .service import (
    AlreadyRegistered,
    Denied,
    DigestMismatch,
    MalformedBatch,
    NoResults,
    PlatformError,
    PlatformService,
    UnknownPseudonym,
)

_STATUS = {
    Denied: 403,
    AlreadyRegistered: 409,
    UnknownPseudonym: 404,
    DigestMismatch: 409,
    MalformedBatch: 400,
    NoResults: 404,
}


def create_app(service: PlatformService, tokens: dict[str, str]) -> FastAPI:
    """``tokens`` maps bearer token -> role."""
    app = FastAPI(title="homedrift platform", version="1")

    def role_of(authorization: Optional[str] = Header(default=None)) -> str:
        if not authorization or not authorization.startswith("Bearer "):
            raise HTTPException(401, detail={"code": "missing-token"})
        role = tokens.get(authorization.removeprefix("Bearer "))
        if role is None:
            raise HTTPException(401, detail={"code": "unknown-token"})
        return role

    @app.exception_handler(PlatformError)
    async def platform_error(request: Request, exc: PlatformError):
        return JSONResponse(
            status_code=_STATUS.get(type(exc), 500),
            content={"error": {"code": exc.code, "detail": str(exc)}},
        )

    @app.post("/api/batches")
    async def ingest_batch(request: Request, role: str = Depends(role_of)):
        body = (await request.body()).decode()
        status = service.ingest_batch(body, credential=role)
        return {"status": status}

    @app.post("/api/subjects")
    async def register(doc: dict, role: str = Depends(role_of)):
        pseudonym = service.register_subject(
            Identity(doc["name"], doc["home_id"]), credential=role
        )
        return {"pseudonym": pseudonym}

    @app.get("/api/subjects")
    async def subjects(role: str = Depends(role_of)):
        return {"pseudonyms": service.pseudonyms(credential=role)}

    @app.post("/api/resolve")
    async def resolve(doc: dict, role: str = Depends(role_of)):
        identity = service.resolve_identity(doc["pseudonym"], credential=role)
        return {"name": identity.name, "home_id": identity.home_id, "audited": True}

    @app.get("/api/events")
    async def events(
        pseudonym: str,
        start: dt.date = Query(alias="from"),
        end: dt.date = Query(alias="to"),
        kinds: Optional[str] = None,
        limit: Optional[int] = None,
        offset: int = 0,
        role: str = Depends(role_of),
    ):
        kind_list = kinds.split(",") if kinds else None
        return service.query_events(
            pseudonym, start, end, kind_list, credential=role, limit=limit, offset=offset
        )

    @app.get("/api/metadata/{pseudonym}")
    async def get_metadata(pseudonym: str, role: str = Depends(role_of)):
        return service.get_metadata(pseudonym, credential=role)

    @app.post("/api/metadata/{pseudonym}")
    async def put_metadata(pseudonym: str, doc: dict, role: str = Depends(role_of)):
        service.store_metadata(pseudonym, doc, credential=role)
        return {"status": "stored"}

    @app.post("/api/results/{pseudonym}")
    async def store_results(pseudonym: str, doc: dict, role: str = Depends(role_of)):
        version = service.store_results(
            pseudonym,
            doc["features"],
            doc["reports"],
            doc.get("summary", ""),
            credential=role,
        )
        return {"version": version}

    @app.get("/api/results/{pseudonym}")
    async def get_results(
        pseudonym: str, version: Optional[int] = None, role: str = Depends(role_of)
    ):
        return service.query_results(pseudonym, version, credential=role)

    @app.get("/api/results/{pseudonym}/summary", response_class=PlainTextResponse)
    async def get_summary(pseudonym: str, role: str = Depends(role_of)):
        return service.query_results(pseudonym, credential=role)["summary"]

    @app.get("/api/results/{pseudonym}/series")
    async def get_series(
        pseudonym: str,
        feature: str,
        start: Optional[dt.date] = Query(default=None, alias="from"),
        end: Optional[dt.date] = Query(default=None, alias="to"),
        role: str = Depends(role_of),
    ):
        stored = service.query_results(pseudonym, credential=role)
        if stored["version"] == 0:
            return {"feature": feature, "dates": [], "values": [], "rolling_median": [], "windows": []}
        vectors = read_feature_table(io.StringIO(stored["features"]), home_ref=pseudonym)
        reports = reports_from_json(stored["reports"])
        return feature_series(vectors, reports, feature, start, end)

    @app.post("/api/rescore")
    async def rescore(doc: dict, role: str = Depends(role_of)):
        try:
            return service.rescore(doc["pseudonym"], doc.get("thresholds", {}), credential=role)
        except ValueError as exc:
            raise HTTPException(422, detail={"code": "invalid-thresholds", "detail": str(exc)})

    return app


def load_tokens(path: str | Path) -> dict[str, str]:
    return json.loads(Path(path).read_text())["tokens"]
