"""HTTP ingestion service in front of the event store.

Accepts events over POST with the record(s) in the body, and also over GET
with the record URL-encoded in a query parameter for clients that cannot
post bodies.  Events are durably appended (or deduplicated) before the
acknowledgment is sent.
"""

from __future__ import annotations

import json
from contextlib import asynccontextmanager

from fastapi import FastAPI, HTTPException, Query, Request
from fastapi.responses import PlainTextResponse

from .events import ParseError, RawEvent, SchemaError, event_from_dict, parse_event, serialize_event
from .store import EventStore


def _parse_body(body: str) -> list[RawEvent]:
    """Accept one object, an array of objects, or JSONL text."""
    stripped = body.strip()
    if not stripped:
        raise SchemaError("empty request body")
    try:
        doc = json.loads(stripped)
    except json.JSONDecodeError:
        doc = None
    if isinstance(doc, dict):
        return [event_from_dict(doc)]
    if isinstance(doc, list):
        return [event_from_dict(item) for item in doc]
    # Fall back to line-by-line parsing so errors carry byte offsets.
    return [parse_event(line) for line in stripped.splitlines() if line.strip()]


def make_app(store: EventStore) -> FastAPI:
    @asynccontextmanager
    async def lifespan(app: FastAPI):
        yield
        store.close()

    app = FastAPI(title="noteflow ingest", lifespan=lifespan)

    def _accept_all(events: list[RawEvent], source: str | None) -> dict:
        accepted = 0
        deduplicated = 0
        for event in events:
            ack = store.accept(event, source=source)
            if ack.deduplicated:
                deduplicated += 1
            else:
                accepted += 1
        return {"accepted": accepted, "deduplicated": deduplicated}

    @app.post("/events")
    async def post_events(request: Request):
        body = (await request.body()).decode("utf-8")
        try:
            events = _parse_body(body)
        except (ParseError, SchemaError) as exc:
            raise HTTPException(status_code=400, detail=str(exc))
        client = request.client.host if request.client else None
        return _accept_all(events, client)

    @app.get("/events")
    async def get_event(request: Request, e: str = Query(...)):
        try:
            event = parse_event(e)
        except (ParseError, SchemaError) as exc:
            raise HTTPException(status_code=400, detail=str(exc))
        client = request.client.host if request.client else None
        return _accept_all([event], client)

    @app.get("/export")
    async def export(
        session: str | None = None,
        user: str | None = None,
        notebook: str | None = None,
        ts_from: int | None = Query(default=None, alias="from"),
        ts_to: int | None = Query(default=None, alias="to"),
    ):
        lines = [
            serialize_event(event)
            for event in store.export(
                session=session, user=user, notebook=notebook, ts_from=ts_from, ts_to=ts_to
            )
        ]
        text = "\n".join(lines)
        if text:
            text += "\n"
        return PlainTextResponse(text, media_type="application/x-ndjson")

    @app.get("/health")
    async def health():
        return {"status": "ok", "events": len(store)}

    return app
