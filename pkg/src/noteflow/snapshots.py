"""Notebook state reconstruction by replaying the normalized log.

A snapshot is the full state of one notebook (per user) after a log
record: the ordered list of cells, each with its type, current source,
last outputs, and execution bookkeeping.  Replay is a pure left fold of
``apply`` over the notebook's records, so the snapshot after record k is
a deterministic function of records 0..k, and the whole per-action
snapshot series can be materialized, stepped through, or exported as a
standard notebook file.

``apply`` trusts the normalizer: a reference to a cell that does not
exist in the snapshot is a hard error here, because the normalizer
repairs or quarantines exactly those cases.
"""

from __future__ import annotations

import copy
import json
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable, Iterator, Sequence

from .events import (
    CHANGE_CELL_TYPE,
    CREATE_CELL,
    DELETE_CELL,
    ERROR_EVENT,
    EXECUTE_CELL,
    FINISH_EXECUTE,
    OUTPUT_DISPLAY_DATA,
    OUTPUT_ERROR,
    OUTPUT_EXECUTE_RESULT,
    OUTPUT_STREAM,
    RENDER_MARKDOWN,
    Output,
)
from .normalize import LogRecord

CELL_TYPE_CODE = "code"
CELL_TYPE_MARKDOWN = "markdown"

NBFORMAT_MAJOR = 4
NBFORMAT_MINOR = 5


class SnapshotError(ValueError):
    """Replay hit a state the normalizer should have made impossible."""


@dataclass
class CellState:
    """One cell inside a snapshot."""

    cell_id: str
    cell_type: str = CELL_TYPE_CODE
    source: str = ""
    outputs: list[Output] = field(default_factory=list)
    execution_count: int = 0
    last_executed_at: int | None = None

    def to_dict(self) -> dict:
        return {
            "cell_id": self.cell_id,
            "cell_type": self.cell_type,
            "source": self.source,
            "outputs": [o.to_dict() for o in self.outputs],
            "execution_count": self.execution_count,
            "last_executed_at": self.last_executed_at,
        }


@dataclass
class NotebookSnapshot:
    """State of one (user, notebook) pair after a log prefix.

    ``after_seq_no`` names the log record this snapshot follows (None
    for the initial empty state).  Cell order in the list is the cell
    ordinal; ids are unique.
    """

    user_id: str
    notebook_name: str
    cells: list[CellState] = field(default_factory=list)
    after_seq_no: int | None = None
    events_applied: int = 0

    def cell(self, cell_id: str) -> CellState | None:
        for cell in self.cells:
            if cell.cell_id == cell_id:
                return cell
        return None

    def index_of(self, cell_id: str) -> int | None:
        for i, cell in enumerate(self.cells):
            if cell.cell_id == cell_id:
                return i
        return None

    def to_dict(self) -> dict:
        return {
            "user_id": self.user_id,
            "notebook_name": self.notebook_name,
            "after_seq_no": self.after_seq_no,
            "events_applied": self.events_applied,
            "cells": [c.to_dict() for c in self.cells],
        }

    def clone(self) -> "NotebookSnapshot":
        return copy.deepcopy(self)


def apply(snapshot: NotebookSnapshot, record: LogRecord) -> NotebookSnapshot:
    """Fold one log record into the snapshot (mutating it).

    Semantics per kind: create inserts a fresh code cell at its ordinal
    (clamped into range); delete removes by id; execute stores the
    executed source and bumps the execution bookkeeping while keeping
    the previous outputs on screen; finish/error replace the outputs;
    render turns the cell into rendered markdown; change_cell_type flips
    the type and clears outputs.  Notebook-level records only advance
    the bookkeeping.
    """
    event = record.event
    snapshot.events_applied += 1
    snapshot.after_seq_no = record.seq_no

    kind = event.kind
    if kind == CREATE_CELL:
        if snapshot.cell(event.cell_id) is not None:
            raise SnapshotError(f"create of existing cell {event.cell_id!r}")
        ordinal = event.cell_ordinal if event.cell_ordinal is not None else len(snapshot.cells)
        ordinal = max(0, min(ordinal, len(snapshot.cells)))
        snapshot.cells.insert(ordinal, CellState(
            cell_id=event.cell_id,
            cell_type=CELL_TYPE_CODE,
            source=event.source or "",
        ))
        return snapshot

    if kind in (DELETE_CELL, EXECUTE_CELL, FINISH_EXECUTE, ERROR_EVENT,
                RENDER_MARKDOWN, CHANGE_CELL_TYPE):
        cell = snapshot.cell(event.cell_id)
        if cell is None:
            raise SnapshotError(f"{kind} references unknown cell {event.cell_id!r}")

        if kind == DELETE_CELL:
            del snapshot.cells[snapshot.index_of(event.cell_id)]
        elif kind == EXECUTE_CELL:
            if event.source is not None:
                cell.source = event.source
            cell.execution_count += 1
            cell.last_executed_at = event.timestamp
            # Previous outputs stay visible until the execution reports
            # back — that is what the user was looking at while re-running.
        elif kind in (FINISH_EXECUTE, ERROR_EVENT):
            cell.outputs = list(event.outputs or [])
        elif kind == RENDER_MARKDOWN:
            cell.cell_type = CELL_TYPE_MARKDOWN
            if event.source is not None:
                cell.source = event.source
            cell.outputs = []
        elif kind == CHANGE_CELL_TYPE:
            cell.cell_type = event.new_cell_type
            if event.source is not None:
                cell.source = event.source
            cell.outputs = []
        return snapshot

    # notebook_launch / notebook_interrupt / notebook_restart
    return snapshot


def _matches(event, notebook_name: str, user_id: str | None) -> bool:
    if event.notebook_name != notebook_name:
        return False
    return user_id is None or event.user_id == user_id


def build_snapshots(records: Iterable[LogRecord], notebook_name: str,
                    user_id: str | None = None) -> list[NotebookSnapshot]:
    """Replay one notebook's records into the per-action snapshot series.

    Returns one snapshot per applied record (a fold of ``apply``), each
    an independent value.  ``user_id`` narrows the stream when several
    users touch notebooks of the same name.
    """
    current = NotebookSnapshot(user_id=user_id or "", notebook_name=notebook_name)
    series: list[NotebookSnapshot] = []
    for record in records:
        if not _matches(record.event, notebook_name, user_id):
            continue
        if not user_id and not current.user_id:
            current.user_id = record.event.user_id
        apply(current, record)
        series.append(current.clone())
    return series


def final_snapshot(records: Iterable[LogRecord], notebook_name: str,
                   user_id: str | None = None) -> NotebookSnapshot:
    """Replay one notebook's records to its final state only."""
    snapshot = NotebookSnapshot(user_id=user_id or "", notebook_name=notebook_name)
    for record in records:
        if not _matches(record.event, notebook_name, user_id):
            continue
        if not user_id and not snapshot.user_id:
            snapshot.user_id = record.event.user_id
        apply(snapshot, record)
    return snapshot


def build_all_snapshots(records: Iterable[LogRecord]) -> dict[tuple[str, str], NotebookSnapshot]:
    """Final state of every (user, notebook) stream in the log."""
    snapshots: dict[tuple[str, str], NotebookSnapshot] = {}
    for record in records:
        key = (record.event.user_id, record.event.notebook_name)
        if key not in snapshots:
            snapshots[key] = NotebookSnapshot(user_id=key[0], notebook_name=key[1])
        apply(snapshots[key], record)
    return snapshots


# ---------------------------------------------------------------------------
# Navigation over a prebuilt snapshot series

def summarize(snapshot: NotebookSnapshot) -> str:
    """One-paragraph rendering of a snapshot for interactive stepping."""
    lines = [
        f"{snapshot.notebook_name} ({snapshot.user_id or 'any user'}): "
        f"{len(snapshot.cells)} cells after {snapshot.events_applied} events "
        f"(seq_no {snapshot.after_seq_no})"
    ]
    for i, cell in enumerate(snapshot.cells):
        first_line = cell.source.split("\n")[0] if cell.source else ""
        if len(first_line) > 60:
            first_line = first_line[:57] + "..."
        outputs = f", {len(cell.outputs)} outputs" if cell.outputs else ""
        executed = f", ran {cell.execution_count}x" if cell.execution_count else ""
        lines.append(f"  [{i}] {cell.cell_type} {cell.cell_id} "
                     f"({len(cell.source)} chars{executed}{outputs}): {first_line}")
    return "\n".join(lines)


def step(series: Sequence[NotebookSnapshot], cursor: int, command: str,
         initial: NotebookSnapshot | None = None):
    """Navigate a snapshot series: next | prev | goto <k> | export.

    Cursor positions run 0..len(series): position k is the state after k
    applied records, position 0 the empty initial state.  Returns
    (new_cursor, payload) where payload is a summary string, or the
    notebook-file document for ``export``.  ``goto`` outside the range
    raises and leaves the cursor unchanged.
    """
    def _at(position: int) -> NotebookSnapshot:
        if position == 0:
            if initial is not None:
                return initial
            template = series[0] if series else None
            return NotebookSnapshot(
                user_id=template.user_id if template else "",
                notebook_name=template.notebook_name if template else "")
        return series[position - 1]

    last = len(series)
    if command == "next":
        if cursor >= last:
            return cursor, "at end"
        cursor += 1
        return cursor, summarize(_at(cursor))
    if command == "prev":
        if cursor <= 0:
            return cursor, "at start"
        cursor -= 1
        return cursor, summarize(_at(cursor))
    if command.startswith("goto"):
        try:
            target = int(command.split()[1])
        except (IndexError, ValueError):
            raise ValueError(f"goto needs a position 0..{last}")
        if not (0 <= target <= last):
            raise ValueError(f"position {target} outside 0..{last}")
        return target, summarize(_at(target))
    if command == "export":
        return cursor, export_ipynb(_at(cursor))
    raise ValueError(f"unknown command {command!r}")


# ---------------------------------------------------------------------------
# Interactive replay cursor (used by the CLI)

class ReplaySession:
    """Step-by-step replay of one notebook stream, for inspection."""

    def __init__(self, records: Sequence[LogRecord], notebook_name: str,
                 user_id: str | None = None):
        self.records = [r for r in records
                        if _matches(r.event, notebook_name, user_id)]
        self.user_id = user_id
        self.notebook_name = notebook_name
        self.position = 0
        self.snapshot = NotebookSnapshot(user_id=user_id or "",
                                         notebook_name=notebook_name)

    def step(self) -> tuple[LogRecord, NotebookSnapshot] | None:
        if self.position >= len(self.records):
            return None
        record = self.records[self.position]
        apply(self.snapshot, record)
        self.position += 1
        return record, self.snapshot

    def seek(self, position: int) -> NotebookSnapshot:
        position = max(0, min(position, len(self.records)))
        self.snapshot = NotebookSnapshot(user_id=self.user_id or "",
                                         notebook_name=self.notebook_name)
        self.position = 0
        while self.position < position:
            self.step()
        return self.snapshot

    def __iter__(self) -> Iterator[tuple[LogRecord, NotebookSnapshot]]:
        while True:
            out = self.step()
            if out is None:
                return
            yield out


# ---------------------------------------------------------------------------
# Notebook-file export / import

def _output_to_nb(output: Output) -> dict:
    if output.output_type == OUTPUT_STREAM:
        return {"output_type": "stream", "name": "stdout", "text": output.payload}
    if output.output_type == OUTPUT_ERROR:
        return {
            "output_type": "error",
            "ename": "Error",
            "evalue": output.payload,
            "traceback": output.payload.splitlines(),
        }
    if output.output_type == OUTPUT_EXECUTE_RESULT:
        return {
            "output_type": "execute_result",
            "data": {"text/plain": output.payload},
            "metadata": {},
            "execution_count": None,
        }
    return {
        "output_type": "display_data",
        "data": {"text/plain": output.payload},
        "metadata": {},
    }


def _output_from_nb(doc: dict) -> Output:
    output_type = doc.get("output_type", "")
    if output_type == "stream":
        text = doc.get("text", "")
        payload = "".join(text) if isinstance(text, list) else text
        return Output(OUTPUT_STREAM, payload)
    if output_type == "error":
        return Output(OUTPUT_ERROR, doc.get("evalue", ""))
    data = doc.get("data", {})
    text = data.get("text/plain", "")
    payload = "".join(text) if isinstance(text, list) else text
    if output_type == "execute_result":
        return Output(OUTPUT_EXECUTE_RESULT, payload)
    return Output(OUTPUT_DISPLAY_DATA, payload)


def export_ipynb(snapshot: NotebookSnapshot) -> dict:
    """Render a snapshot as a modern notebook-file document (v4.5).

    Cell identifiers are preserved in the file's ``id`` slots so the
    round trip keeps them; a zero execution count exports as null.  The
    only state with no place in the file format is ``last_executed_at``.
    """
    cells = []
    for cell in snapshot.cells:
        if cell.cell_type == CELL_TYPE_MARKDOWN:
            cells.append({
                "id": cell.cell_id,
                "cell_type": "markdown",
                "metadata": {},
                "source": cell.source,
            })
        else:
            cells.append({
                "id": cell.cell_id,
                "cell_type": "code",
                "metadata": {},
                "source": cell.source,
                "execution_count": cell.execution_count or None,
                "outputs": [_output_to_nb(o) for o in cell.outputs],
            })
    return {
        "nbformat": NBFORMAT_MAJOR,
        "nbformat_minor": NBFORMAT_MINOR,
        "metadata": {
            "kernelspec": {"name": "python3", "display_name": "Python 3", "language": "python"},
            "language_info": {"name": "python"},
        },
        "cells": cells,
    }


def snapshot_from_ipynb(doc: dict, user_id: str = "", notebook_name: str = "") -> NotebookSnapshot:
    """Rebuild a snapshot from a notebook-file document."""
    cells = []
    for i, cell_doc in enumerate(doc.get("cells", [])):
        source = cell_doc.get("source", "")
        if isinstance(source, list):
            source = "".join(source)
        cell = CellState(
            cell_id=cell_doc.get("id") or f"cell-{i}",
            cell_type=cell_doc.get("cell_type", CELL_TYPE_CODE),
            source=source,
        )
        if cell.cell_type == CELL_TYPE_CODE:
            cell.execution_count = cell_doc.get("execution_count") or 0
            cell.outputs = [_output_from_nb(o) for o in cell_doc.get("outputs", [])]
        cells.append(cell)
    return NotebookSnapshot(user_id=user_id, notebook_name=notebook_name, cells=cells)


def write_ipynb(path: str | Path, snapshot: NotebookSnapshot) -> None:
    Path(path).write_text(
        json.dumps(export_ipynb(snapshot), ensure_ascii=False, indent=1) + "\n",
        encoding="utf-8",
    )


def read_ipynb(path: str | Path, user_id: str = "", notebook_name: str = "") -> NotebookSnapshot:
    doc = json.loads(Path(path).read_text(encoding="utf-8"))
    return snapshot_from_ipynb(doc, user_id=user_id, notebook_name=notebook_name)


# ---------------------------------------------------------------------------
# Snapshot tables

def write_snapshots_jsonl(path: str | Path, snapshots: dict[tuple[str, str], NotebookSnapshot],
                          meta: dict | None = None) -> None:
    from .jsonl import write_jsonl

    ordered = [snapshots[key] for key in sorted(snapshots)]
    write_jsonl(path, (s.to_dict() for s in ordered), meta=meta)


def write_snapshot_series_jsonl(path: str | Path, series: Iterable[NotebookSnapshot],
                                meta: dict | None = None) -> None:
    from .jsonl import write_jsonl

    write_jsonl(path, (s.to_dict() for s in series), meta=meta)


def write_snapshot_series_csv(path: str | Path, series: Iterable[NotebookSnapshot],
                              meta_comment: str | None = None) -> None:
    import csv

    with open(path, "w", encoding="utf-8", newline="") as fh:
        if meta_comment:
            fh.write(f"# {meta_comment}\n")
        writer = csv.writer(fh)
        writer.writerow(["user_id", "notebook_name", "after_seq_no",
                         "events_applied", "n_cells", "cell_ids"])
        for snapshot in series:
            writer.writerow([
                snapshot.user_id, snapshot.notebook_name,
                snapshot.after_seq_no, snapshot.events_applied,
                len(snapshot.cells),
                " ".join(c.cell_id for c in snapshot.cells),
            ])
