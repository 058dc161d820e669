"""Stepping through a notebook's history and exporting any moment.

The snapshot engine keeps one snapshot per applied action, so you can walk
the timeline in either direction and write any intermediate state out as a
regular ``.ipynb`` file.

Run:  python3 demos/replay_history.py
"""

import json
import tempfile
from pathlib import Path

from noteflow import build_snapshots, event_from_dict, normalize
from noteflow.snapshots import export_ipynb, step, write_ipynb

NOTEBOOK = "scratch.ipynb"


def ev(seq: int, kind: str, **fields) -> dict:
    return {
        "session_id": "replay-demo",
        "kernel_id": "k-1",
        "user_id": "ada",
        "notebook_name": NOTEBOOK,
        "seq": seq,
        "timestamp": 1_000 * seq,
        "kind": kind,
        **fields,
    }


RAW = [
    ev(1, "create_cell", cell_id="a", cell_ordinal=0, source="x = 1"),
    ev(2, "execute_cell", cell_id="a", cell_ordinal=0, source="x = 1"),
    ev(3, "create_cell", cell_id="b", cell_ordinal=1, source="x + 1"),
    ev(4, "execute_cell", cell_id="b", cell_ordinal=1, source="x + 1"),
    ev(5, "finish_execute", cell_id="b", cell_ordinal=1,
       outputs=[{"output_type": "execute_result", "payload": "2"}]),
    ev(6, "delete_cell", cell_id="a", cell_ordinal=0),
]


def main() -> None:
    records = normalize([event_from_dict(e) for e in RAW]).records
    series = build_snapshots(records, NOTEBOOK)
    print(f"{len(series)} snapshots, one per applied event")

    # Walk: forward to the end, then one step back (before the deletion).
    cursor = 0
    for command in ["next"] * (len(series) + 1) + ["prev"]:
        cursor, notice = step(series, cursor, command)
        state = series[cursor - 1] if cursor else None
        cells = [c.cell_id for c in state.cells] if state else []
        headline = notice.splitlines()[0] if notice else ""
        print(f"  {command:4s} -> position {cursor}  cells={cells}  {headline}")

    # Export the state the cursor is looking at as a notebook file.
    doc = export_ipynb(series[cursor - 1])
    out = Path(tempfile.mkdtemp()) / "before_deletion.ipynb"
    write_ipynb(out, series[cursor - 1])
    print(f"\nexported {out}")
    print(json.dumps(doc["cells"][0], indent=1))


if __name__ == "__main__":
    main()
