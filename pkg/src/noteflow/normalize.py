"""Event-stream repair and the canonical chronological log table.

Raw captures arrive in arbitrary order and carry real-world anomalies
(the classic one: a markdown cell's rendered status arriving before the
cell's creation).  ``normalize`` turns a multiset of raw events into a
deterministic, chronologically ordered list of log records, applying a
small, inspectable set of repair heuristics and quarantining anything
irreparable into a reject list.  Nothing is ever silently dropped.

Determinism contract: the output depends only on the input multiset, not
on arrival order, as long as (session_id, seq) pairs are intact.
Normalizing the output again reproduces it exactly.
"""

from __future__ import annotations

import csv
import json
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable, Sequence

from .events import (
    CELL_LEVEL_KINDS,
    CHANGE_CELL_TYPE,
    CREATE_CELL,
    DELETE_CELL,
    ERROR_EVENT,
    EXECUTE_CELL,
    FINISH_EXECUTE,
    NOTEBOOK_INTERRUPT,
    NOTEBOOK_LAUNCH,
    NOTEBOOK_RESTART,
    RENDER_MARKDOWN,
    RawEvent,
    event_from_dict,
    serialize_event,
)

# Fixed priority for breaking ties among equal (timestamp, seq) records.
# create precedes everything that can reference the cell it creates.
KIND_PRIORITY = {
    NOTEBOOK_LAUNCH: -3,
    NOTEBOOK_RESTART: -2,
    NOTEBOOK_INTERRUPT: -1,
    CREATE_CELL: 0,
    CHANGE_CELL_TYPE: 1,
    EXECUTE_CELL: 2,
    FINISH_EXECUTE: 3,
    ERROR_EVENT: 4,
    RENDER_MARKDOWN: 5,
    DELETE_CELL: 6,
}

RULE_DUPLICATE_DROP = "duplicate_drop"
RULE_RENDER_BEFORE_CREATE = "render_before_create"
RULE_SYNTHESIZE_MISSING_CREATE = "synthesize_missing_create"

REJECT_DUPLICATE = "duplicate"
REJECT_REFERENCE_BEFORE_CREATE = "reference_before_create"
REJECT_REFERENCE_AFTER_DELETE = "reference_after_delete"
REJECT_DUPLICATE_CREATE = "duplicate_create"

SYNTHESIZED_MARKER = "synthesized"


@dataclass
class RuleDescriptor:
    name: str
    description: str


def repair_rules() -> list[RuleDescriptor]:
    """The ordered, documented repair heuristics applied by normalize."""
    return [
        RuleDescriptor(
            RULE_DUPLICATE_DROP,
            "Drop re-deliveries: a second record with an already seen "
            "(session_id, seq) pair goes to the reject list.",
        ),
        RuleDescriptor(
            RULE_RENDER_BEFORE_CREATE,
            "When a cell is referenced (typically by a markdown render) "
            "before its create_cell at the same timestamp, move the create "
            "in front of the first such reference.",
        ),
        RuleDescriptor(
            RULE_SYNTHESIZE_MISSING_CREATE,
            "When a cell is referenced but never created in the stream "
            "(a log that starts mid-session), insert a create_cell right "
            "before the first reference, copying its source if any.",
        ),
    ]


@dataclass
class LogRecord:
    """One row of the normalized log table."""

    event: RawEvent
    seq_no: int
    repaired: list[str] = field(default_factory=list)

    def to_dict(self) -> dict:
        doc = self.event.to_dict()
        doc["seq_no"] = self.seq_no
        doc["repaired"] = list(self.repaired)
        return doc


def log_record_from_dict(doc: dict) -> LogRecord:
    doc = dict(doc)
    seq_no = doc.pop("seq_no")
    repaired = doc.pop("repaired", [])
    return LogRecord(event=event_from_dict(doc), seq_no=seq_no, repaired=list(repaired))


@dataclass
class RejectedEvent:
    event: RawEvent
    reason: str

    def to_dict(self) -> dict:
        return {"reason": self.reason, "event": self.event.to_dict()}


@dataclass
class NormalizeResult:
    records: list[LogRecord]
    rejects: list[RejectedEvent]

    @property
    def n_synthesized(self) -> int:
        return sum(1 for r in self.records if r.event.extras.get(SYNTHESIZED_MARKER))

    @property
    def n_duplicates(self) -> int:
        return sum(1 for r in self.rejects if r.reason == REJECT_DUPLICATE)

    def counts(self) -> dict:
        """Count balance: input = output - synthesized + rejects."""
        return {
            "output": len(self.records),
            "rejects": len(self.rejects),
            "duplicates": self.n_duplicates,
            "synthesized": self.n_synthesized,
            "input": len(self.records) - self.n_synthesized + len(self.rejects),
        }


@dataclass
class _Item:
    """Work unit: an event plus the repair tags applied to it so far."""

    event: RawEvent
    repaired: list[str]

    def tag(self, rule: str) -> None:
        if rule not in self.repaired:
            self.repaired.append(rule)


def _sort_key(item: _Item):
    e = item.event
    return (e.timestamp, e.seq, KIND_PRIORITY[e.kind], serialize_event(e))


def _dedup_key(event: RawEvent):
    return (event.session_id, event.seq, bool(event.extras.get(SYNTHESIZED_MARKER)))


def _stream_key(event: RawEvent) -> tuple[str, str]:
    return (event.user_id, event.notebook_name)


def _repair_cell_order(items: list[_Item], rejects: list[RejectedEvent]) -> list[_Item]:
    """Apply cell-existence repairs to one (user, notebook) stream.

    Runs in three passes over the chronologically ordered stream: move
    equal-timestamp creates in front of premature references, synthesize
    creates for cells that have none at all, then quarantine whatever
    still references a cell outside its lifetime.
    """
    # Pass 1: render_before_create.  A create may only move earlier within
    # its own equal-timestamp block, so chronology is preserved.
    moved = True
    while moved:
        moved = False
        first_create: dict[str, int] = {}
        first_early_ref: dict[str, int] = {}
        for idx, item in enumerate(items):
            e = item.event
            if e.kind not in CELL_LEVEL_KINDS:
                continue
            if e.kind == CREATE_CELL and e.cell_id not in first_create:
                first_create[e.cell_id] = idx
            elif e.kind != CREATE_CELL and e.cell_id not in first_create:
                first_early_ref.setdefault(e.cell_id, idx)
        for cell_id, create_idx in sorted(first_create.items(), key=lambda kv: kv[1]):
            ref_idx = first_early_ref.get(cell_id)
            if ref_idx is None or ref_idx > create_idx:
                continue
            create = items[create_idx]
            if items[ref_idx].event.timestamp != create.event.timestamp:
                continue  # strictly earlier references are quarantined later
            for jumped in items[ref_idx:create_idx]:
                if jumped.event.cell_id == cell_id:
                    jumped.tag(RULE_RENDER_BEFORE_CREATE)
            create.tag(RULE_RENDER_BEFORE_CREATE)
            del items[create_idx]
            items.insert(ref_idx, create)
            moved = True
            break

    # Pass 2: synthesize_missing_create.
    created_cells = {i.event.cell_id for i in items if i.event.kind == CREATE_CELL}
    out: list[_Item] = []
    known: set[str] = set(created_cells)
    for item in items:
        e = item.event
        if e.kind in CELL_LEVEL_KINDS and e.cell_id not in known:
            known.add(e.cell_id)
            synthetic = RawEvent(
                kind=CREATE_CELL,
                session_id=e.session_id,
                kernel_id=e.kernel_id,
                notebook_name=e.notebook_name,
                timestamp=e.timestamp,
                seq=e.seq,
                user_id=e.user_id,
                cell_id=e.cell_id,
                cell_ordinal=e.cell_ordinal,
                source=e.source if e.source is not None else "",
                extras={SYNTHESIZED_MARKER: True},
            )
            out.append(_Item(synthetic, [RULE_SYNTHESIZE_MISSING_CREATE]))
        out.append(item)

    # Pass 3: quarantine references outside the cell's lifetime.
    result: list[_Item] = []
    live: set[str] = set()
    dead: set[str] = set()
    for item in out:
        e = item.event
        if e.kind not in CELL_LEVEL_KINDS:
            result.append(item)
            continue
        if e.kind == CREATE_CELL:
            if e.cell_id in live:
                rejects.append(RejectedEvent(e, REJECT_DUPLICATE_CREATE))
                continue
            live.add(e.cell_id)
            dead.discard(e.cell_id)
            result.append(item)
            continue
        if e.cell_id not in live:
            reason = REJECT_REFERENCE_AFTER_DELETE if e.cell_id in dead else REJECT_REFERENCE_BEFORE_CREATE
            rejects.append(RejectedEvent(e, reason))
            continue
        if e.kind == DELETE_CELL:
            live.remove(e.cell_id)
            dead.add(e.cell_id)
        result.append(item)
    return result


def normalize(events: Sequence[RawEvent | LogRecord]) -> NormalizeResult:
    """Build the canonical log table from raw events.

    Accepts raw events or previously normalized records (whose repair tags
    are preserved), so the operation is idempotent.  Within each session,
    records are ordered by (timestamp, seq) with a fixed kind priority as
    the final tie-break; sessions are then interleaved chronologically.
    Synthesized creates are additions: output = input - rejects + synthesized.
    """
    items: list[_Item] = []
    for entry in events:
        if isinstance(entry, LogRecord):
            items.append(_Item(entry.event, list(entry.repaired)))
        else:
            items.append(_Item(entry, []))

    rejects: list[RejectedEvent] = []

    # Per-session total order, then duplicate_drop.  Sorting first makes the
    # dedup survivor independent of arrival order.
    by_session: dict[str, list[_Item]] = {}
    for item in items:
        by_session.setdefault(item.event.session_id, []).append(item)

    merged: list[_Item] = []
    for session_id in sorted(by_session):
        session_items = sorted(by_session[session_id], key=_sort_key)
        seen: set = set()
        for item in session_items:
            key = _dedup_key(item.event)
            if key in seen:
                rejects.append(RejectedEvent(item.event, REJECT_DUPLICATE))
                continue
            seen.add(key)
            merged.append(item)

    # Global chronological interleave; stable, so repaired per-session order
    # survives inside equal timestamps.
    merged.sort(key=lambda item: (item.event.timestamp, item.event.session_id))

    # Cell-existence rules act on replay scope: one (user, notebook) stream.
    by_stream: dict[tuple[str, str], list[_Item]] = {}
    order: list[tuple[str, str]] = []
    for item in merged:
        key = _stream_key(item.event)
        if key not in by_stream:
            by_stream[key] = []
            order.append(key)
        by_stream[key].append(item)

    repaired_streams = {key: _repair_cell_order(by_stream[key], rejects) for key in order}

    # Re-interleave streams chronologically.  Within a stream, timestamps
    # are non-decreasing and position is authoritative (repairs may have
    # moved a create in front of a same-timestamp reference with a higher
    # seq, so re-sorting by seq would undo them).
    position: dict[int, tuple] = {}
    for key, stream in repaired_streams.items():
        for pos, item in enumerate(stream):
            position[id(item)] = (item.event.timestamp, key, pos)
    final = sorted((item for stream in repaired_streams.values() for item in stream),
                   key=lambda item: position[id(item)])

    records = [LogRecord(event=item.event, seq_no=i, repaired=item.repaired)
               for i, item in enumerate(final)]
    return NormalizeResult(records=records, rejects=rejects)


# ---------------------------------------------------------------------------
# Log table serialization

LOG_CSV_COLUMNS = [
    "seq_no", "kind", "session_id", "kernel_id", "notebook_name", "timestamp",
    "seq", "user_id", "cell_id", "cell_ordinal", "new_cell_type", "source",
    "outputs", "repaired", "extras",
]


def write_log_jsonl(path: str | Path, records: Iterable[LogRecord], meta: dict | None = None) -> None:
    from .jsonl import write_jsonl

    write_jsonl(path, (r.to_dict() for r in records), meta=meta)


def read_log_jsonl(path: str | Path) -> list[LogRecord]:
    from .jsonl import read_jsonl

    return [log_record_from_dict(doc) for doc in read_jsonl(path)]


def write_log_csv(path: str | Path, records: Iterable[LogRecord], meta_comment: str | None = None) -> None:
    with open(path, "w", encoding="utf-8", newline="") as fh:
        if meta_comment:
            fh.write(f"# {meta_comment}\n")
        writer = csv.writer(fh)
        writer.writerow(LOG_CSV_COLUMNS)
        for record in records:
            e = record.event
            writer.writerow([
                record.seq_no, e.kind, e.session_id, e.kernel_id, e.notebook_name,
                e.timestamp, e.seq, e.user_id,
                e.cell_id if e.cell_id is not None else "",
                e.cell_ordinal if e.cell_ordinal is not None else "",
                e.new_cell_type if e.new_cell_type is not None else "",
                e.source if e.source is not None else "",
                json.dumps([o.to_dict() for o in e.outputs], ensure_ascii=False) if e.outputs is not None else "",
                json.dumps(record.repaired, ensure_ascii=False),
                json.dumps(e.extras, ensure_ascii=False, sort_keys=True) if e.extras else "",
            ])


def write_rejects(path: str | Path, rejects: Iterable[RejectedEvent], meta: dict | None = None) -> None:
    from .jsonl import write_jsonl

    write_jsonl(path, (r.to_dict() for r in rejects), meta=meta)
