"""Event vocabulary and its canonical wire form.

Every user/kernel action captured in a notebook becomes one ``RawEvent``.
The wire format is JSONL: one JSON object per line, keys in a fixed order,
so that structurally equal events serialize to byte-identical lines.

Ten event kinds exist.  Three are notebook-level (launch, interrupt,
restart); the rest are cell-level and must carry a cell identity.  Which
fields a record may carry is fully determined by its kind and is enforced
in both directions: a missing mandated field and a present forbidden field
are both schema errors.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field

NOTEBOOK_LAUNCH = "notebook_launch"
NOTEBOOK_INTERRUPT = "notebook_interrupt"
NOTEBOOK_RESTART = "notebook_restart"
CREATE_CELL = "create_cell"
DELETE_CELL = "delete_cell"
EXECUTE_CELL = "execute_cell"
RENDER_MARKDOWN = "render_markdown"
FINISH_EXECUTE = "finish_execute"
CHANGE_CELL_TYPE = "change_cell_type"
ERROR_EVENT = "error_event"

EVENT_KINDS = frozenset({
    NOTEBOOK_LAUNCH,
    NOTEBOOK_INTERRUPT,
    NOTEBOOK_RESTART,
    CREATE_CELL,
    DELETE_CELL,
    EXECUTE_CELL,
    RENDER_MARKDOWN,
    FINISH_EXECUTE,
    CHANGE_CELL_TYPE,
    ERROR_EVENT,
})

NOTEBOOK_LEVEL_KINDS = frozenset({NOTEBOOK_LAUNCH, NOTEBOOK_INTERRUPT, NOTEBOOK_RESTART})
CELL_LEVEL_KINDS = EVENT_KINDS - NOTEBOOK_LEVEL_KINDS

OUTPUT_EXECUTE_RESULT = "execute_result"
OUTPUT_STREAM = "stream"
OUTPUT_ERROR = "error"
OUTPUT_DISPLAY_DATA = "display_data"

OUTPUT_TYPES = frozenset({
    OUTPUT_EXECUTE_RESULT, OUTPUT_STREAM, OUTPUT_ERROR, OUTPUT_DISPLAY_DATA,
})

# The "empty" analysis category is not a concrete output type: it means the
# output list itself is empty.
OUTPUT_KIND_EMPTY = "empty"

CELL_TYPES = frozenset({"code", "markdown"})

# kind -> set of optional fields that MUST be present.  Any optional field
# not listed here is forbidden for that kind.  Base fields (kind, session_id,
# kernel_id, notebook_name, timestamp, seq, user_id) are always mandatory.
KIND_FIELDS: dict[str, frozenset[str]] = {
    NOTEBOOK_LAUNCH: frozenset(),
    NOTEBOOK_INTERRUPT: frozenset(),
    NOTEBOOK_RESTART: frozenset(),
    CREATE_CELL: frozenset({"cell_id", "cell_ordinal", "source"}),
    DELETE_CELL: frozenset({"cell_id", "cell_ordinal"}),
    EXECUTE_CELL: frozenset({"cell_id", "cell_ordinal", "source"}),
    RENDER_MARKDOWN: frozenset({"cell_id", "cell_ordinal", "source"}),
    FINISH_EXECUTE: frozenset({"cell_id", "cell_ordinal", "outputs"}),
    CHANGE_CELL_TYPE: frozenset({"cell_id", "cell_ordinal", "source", "new_cell_type"}),
    ERROR_EVENT: frozenset({"cell_id", "cell_ordinal", "outputs"}),
}

BASE_FIELDS = ("kind", "session_id", "kernel_id", "notebook_name", "timestamp", "seq", "user_id")
OPTIONAL_FIELDS = ("cell_id", "cell_ordinal", "source", "outputs", "new_cell_type")

# Canonical key order on the wire.
WIRE_FIELDS = BASE_FIELDS + OPTIONAL_FIELDS + ("extras",)


class ParseError(ValueError):
    """Syntactically malformed record (not one JSON object per line)."""

    def __init__(self, message: str, byte_offset: int | None = None):
        self.byte_offset = byte_offset
        if byte_offset is not None:
            message = f"{message} (byte offset {byte_offset})"
        super().__init__(message)


class SchemaError(ValueError):
    """Well-formed JSON that violates the event schema."""

    def __init__(self, message: str, field_name: str | None = None):
        self.field_name = field_name
        super().__init__(message)


@dataclass
class Output:
    """One recorded cell output: a concrete type plus opaque payload text."""

    output_type: str
    payload: str

    def to_dict(self) -> dict:
        return {"output_type": self.output_type, "payload": self.payload}


@dataclass
class RawEvent:
    """One captured action with all metadata the capture layer records.

    ``cell_id`` is a stable opaque identifier assigned at cell creation;
    ``cell_ordinal`` is the positional index at event time and may change
    as cells are inserted or deleted.  ``seq`` is the client-assigned
    per-session counter used for deduplication and tie-breaking.
    """

    kind: str
    session_id: str
    kernel_id: str
    notebook_name: str
    timestamp: int
    seq: int
    user_id: str
    cell_id: str | None = None
    cell_ordinal: int | None = None
    source: str | None = None
    outputs: list[Output] | None = None
    new_cell_type: str | None = None
    extras: dict = field(default_factory=dict)

    def to_dict(self) -> dict:
        """Plain-dict form with keys in canonical wire order.

        Absent optional fields are omitted; present-but-empty values (for
        example an empty source string) are kept explicit.  An empty extras
        map counts as absent.
        """
        doc: dict = {}
        for name in BASE_FIELDS:
            doc[name] = getattr(self, name)
        for name in OPTIONAL_FIELDS:
            value = getattr(self, name)
            if value is None:
                continue
            if name == "outputs":
                doc[name] = [o.to_dict() for o in value]
            else:
                doc[name] = value
        if self.extras:
            doc["extras"] = self.extras
        return doc


def _require_str(doc: dict, name: str) -> str:
    value = doc[name]
    if not isinstance(value, str):
        raise SchemaError(f"field {name!r} must be a string", field_name=name)
    return value


def _require_int(doc: dict, name: str, minimum: int = 0) -> int:
    value = doc[name]
    if isinstance(value, bool) or not isinstance(value, int):
        raise SchemaError(f"field {name!r} must be an integer", field_name=name)
    if value < minimum:
        raise SchemaError(f"field {name!r} must be >= {minimum}, got {value}", field_name=name)
    return value


def _parse_outputs(raw, field_name: str = "outputs") -> list[Output]:
    if not isinstance(raw, list):
        raise SchemaError(f"field {field_name!r} must be a list", field_name=field_name)
    outputs = []
    for item in raw:
        if not isinstance(item, dict):
            raise SchemaError("each output must be an object", field_name=field_name)
        if "output_type" not in item:
            raise SchemaError("output missing 'output_type'", field_name=field_name)
        output_type = item["output_type"]
        if output_type not in OUTPUT_TYPES:
            raise SchemaError(
                f"unknown output_type {output_type!r}; expected one of {sorted(OUTPUT_TYPES)}",
                field_name=field_name,
            )
        payload = item.get("payload", "")
        if not isinstance(payload, str):
            raise SchemaError("output payload must be a string", field_name=field_name)
        unknown = set(item) - {"output_type", "payload"}
        if unknown:
            raise SchemaError(f"unknown output keys: {sorted(unknown)}", field_name=field_name)
        outputs.append(Output(output_type=output_type, payload=payload))
    return outputs


def event_from_dict(doc: dict) -> RawEvent:
    """Validate a decoded record object and build the RawEvent."""
    if not isinstance(doc, dict):
        raise SchemaError("event record must be a JSON object")

    if "kind" not in doc:
        raise SchemaError("missing field 'kind'", field_name="kind")
    kind = doc["kind"]
    if kind not in EVENT_KINDS:
        raise SchemaError(f"unknown event kind {kind!r}")

    for name in BASE_FIELDS:
        if name not in doc:
            raise SchemaError(f"missing field {name!r} for kind {kind!r}", field_name=name)

    mandated = KIND_FIELDS[kind]
    for name in OPTIONAL_FIELDS:
        if name in mandated and name not in doc:
            raise SchemaError(f"missing field {name!r} for kind {kind!r}", field_name=name)
        if name not in mandated and name in doc:
            raise SchemaError(f"field {name!r} not allowed for kind {kind!r}", field_name=name)

    event = RawEvent(
        kind=kind,
        session_id=_require_str(doc, "session_id"),
        kernel_id=_require_str(doc, "kernel_id"),
        notebook_name=_require_str(doc, "notebook_name"),
        timestamp=_require_int(doc, "timestamp"),
        seq=_require_int(doc, "seq"),
        user_id=_require_str(doc, "user_id"),
    )

    if "cell_id" in mandated:
        event.cell_id = _require_str(doc, "cell_id")
        event.cell_ordinal = _require_int(doc, "cell_ordinal")
    if "source" in mandated:
        event.source = _require_str(doc, "source")
    if "outputs" in mandated:
        event.outputs = _parse_outputs(doc["outputs"])
    if "new_cell_type" in mandated:
        new_type = _require_str(doc, "new_cell_type")
        if new_type not in CELL_TYPES:
            raise SchemaError(
                f"new_cell_type must be one of {sorted(CELL_TYPES)}, got {new_type!r}",
                field_name="new_cell_type",
            )
        event.new_cell_type = new_type

    # Anything we do not model is preserved, never dropped.  An explicit
    # extras map is the base; unknown top-level keys are folded into it.
    extras = doc.get("extras", {})
    if not isinstance(extras, dict):
        raise SchemaError("field 'extras' must be an object", field_name="extras")
    extras = dict(extras)
    for key, value in doc.items():
        if key not in WIRE_FIELDS:
            extras[key] = value
    event.extras = extras
    return event


def parse_event(line: str) -> RawEvent:
    """Parse one serialized event record.

    Raises ParseError (with a byte offset) for malformed syntax and
    SchemaError for structurally invalid records.
    """
    try:
        doc = json.loads(line)
    except json.JSONDecodeError as exc:
        offset = len(line[: exc.pos].encode("utf-8"))
        raise ParseError(exc.msg, byte_offset=offset) from exc
    return event_from_dict(doc)


def serialize_event(event: RawEvent) -> str:
    """Render the canonical single-line form (no trailing newline).

    parse_event(serialize_event(e)) == e for every valid event, and two
    structurally equal events produce byte-identical lines.
    """
    return json.dumps(event.to_dict(), ensure_ascii=False, separators=(",", ":"))
