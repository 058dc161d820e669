"""Shared test builders.

Events are built through the public wire parser so every fixture is a
real, schema-checked event — a typo in a test fixture fails loudly
instead of producing an impossible object.
"""

from __future__ import annotations

import json

from noteflow.events import RawEvent, parse_event
from noteflow.normalize import LogRecord, NormalizeResult, normalize


def wire(kind: str, *, session="s1", kernel="k1", notebook="nb",
         ts=1000, seq=1, user="u1", **fields) -> dict:
    """A wire-shaped event dict with boilerplate defaults filled in."""
    event = {
        "kind": kind,
        "session_id": session,
        "kernel_id": kernel,
        "notebook_name": notebook,
        "timestamp": ts,
        "seq": seq,
        "user_id": user,
    }
    event.update(fields)
    return event


def make_event(kind: str, **kw) -> RawEvent:
    return parse_event(json.dumps(wire(kind, **kw)).encode("utf-8"))


def parse_all(dicts: list[dict]) -> list[RawEvent]:
    return [parse_event(json.dumps(d).encode("utf-8")) for d in dicts]


def normalize_wire(dicts: list[dict]) -> NormalizeResult:
    return normalize(parse_all(dicts))


def records_for(dicts: list[dict]) -> list[LogRecord]:
    """Normalize wire dicts that are expected to pass through clean."""
    result = normalize_wire(dicts)
    assert not result.rejects, f"fixture unexpectedly rejected: {result.rejects}"
    return result.records


def session_events(*specs, notebook="nb", user="u1", session="s1",
                   start_ts=1000, step=1000) -> list[dict]:
    """Compact builder: specs are (kind, fields-dict) pairs; seq/ts assigned."""
    events = []
    ts = start_ts
    for i, (kind, fields) in enumerate(specs, start=1):
        events.append(wire(kind, session=session, notebook=notebook, user=user,
                           ts=ts, seq=i, **fields))
        ts += step
    return events


def cell_lifecycle(cell_id: str, sources: list[str], *, notebook="nb", user="u1",
                   session="s1", start_ts=1000, start_seq=1,
                   outputs_per_run=None) -> list[dict]:
    """create + (execute, finish)* for one cell, one run per source."""
    events = [wire("create_cell", session=session, notebook=notebook, user=user,
                   ts=start_ts, seq=start_seq, cell_id=cell_id, cell_ordinal=0,
                   source="")]
    ts, seq = start_ts, start_seq
    for i, source in enumerate(sources):
        ts += 1000
        seq += 1
        events.append(wire("execute_cell", session=session, notebook=notebook,
                           user=user, ts=ts, seq=seq, cell_id=cell_id,
                           cell_ordinal=0, source=source))
        ts += 100
        seq += 1
        outs = outputs_per_run[i] if outputs_per_run else []
        events.append(wire("finish_execute", session=session, notebook=notebook,
                           user=user, ts=ts, seq=seq, cell_id=cell_id,
                           cell_ordinal=0, outputs=outs))
    return events
