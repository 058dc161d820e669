"""Seeded generator of valid event sequences as plain wire dicts.

"Valid" means the normalizer passes every event through untouched: one
session with strictly increasing seq, non-decreasing timestamps, every
cell reference live (created earlier, not yet deleted), and no duplicate
creates.  Sources mix ASCII, unicode, and newlines so downstream diffing
gets exercised on more than plain identifiers.
"""

from __future__ import annotations

import random

_WORDS = [
    "x", "y", "df", "data", "result", "model", "plt.plot(x)", "print(x)",
    "x = 1", "y = x + 1", "df = pd.read_csv('d.csv')", "df.head()",
    "for i in range(3):\n    print(i)", "# note", "naïve = 'é'", "总 = 42",
]
_OUTPUT_TYPES = ["execute_result", "stream", "error", "display_data"]


def _source(rng: random.Random) -> str:
    n = rng.randrange(1, 4)
    return "\n".join(rng.choice(_WORDS) for _ in range(n))


def _outputs(rng: random.Random) -> list[dict]:
    return [
        {"output_type": rng.choice(_OUTPUT_TYPES), "payload": rng.choice(_WORDS)}
        for _ in range(rng.randrange(0, 3))
    ]


def random_sequence(rng: random.Random, max_events: int = 50,
                    notebook_name: str = "nb", user_id: str = "u1") -> list[dict]:
    """One notebook session's worth of valid events (≤ max_events)."""
    events: list[dict] = []
    live: list[str] = []
    ts = rng.randrange(1_600_000_000_000, 1_700_000_000_000)
    seq = 0
    next_cell = 0

    def emit(kind: str, **fields) -> None:
        nonlocal seq, ts
        seq += 1
        if rng.random() < 0.8:
            ts += rng.randrange(1, 4000)
        event = {
            "kind": kind,
            "session_id": "s1",
            "kernel_id": "k1",
            "notebook_name": notebook_name,
            "timestamp": ts,
            "seq": seq,
            "user_id": user_id,
        }
        event.update(fields)
        events.append(event)

    emit("notebook_launch")
    budget = rng.randrange(0, max_events)
    while len(events) < min(budget + 1, max_events):
        moves = ["create"]
        if live:
            moves += ["execute"] * 4 + ["finish", "finish", "error", "delete",
                                        "render", "change", "interrupt", "restart"]
        move = rng.choice(moves)
        if move == "create":
            cell_id = f"cell-{next_cell}"
            next_cell += 1
            # mostly a valid ordinal, occasionally past the end to
            # exercise the documented clamp (negatives fail the schema)
            if rng.random() < 0.9:
                ordinal = rng.randrange(0, len(live) + 1)
            else:
                ordinal = rng.choice([len(live) + 5, 999])
            emit("create_cell", cell_id=cell_id, cell_ordinal=ordinal,
                 source=_source(rng) if rng.random() < 0.5 else "")
            live.append(cell_id)
        elif move == "execute":
            cell_id = rng.choice(live)
            emit("execute_cell", cell_id=cell_id,
                 cell_ordinal=rng.randrange(0, len(live)), source=_source(rng))
        elif move in ("finish", "error"):
            cell_id = rng.choice(live)
            kind = "finish_execute" if move == "finish" else "error_event"
            emit(kind, cell_id=cell_id,
                 cell_ordinal=rng.randrange(0, len(live)), outputs=_outputs(rng))
        elif move == "delete":
            cell_id = rng.choice(live)
            live.remove(cell_id)
            emit("delete_cell", cell_id=cell_id,
                 cell_ordinal=rng.randrange(0, len(live) + 1))
        elif move == "render":
            cell_id = rng.choice(live)
            emit("render_markdown", cell_id=cell_id,
                 cell_ordinal=rng.randrange(0, len(live)), source=_source(rng))
        elif move == "change":
            cell_id = rng.choice(live)
            emit("change_cell_type", cell_id=cell_id,
                 cell_ordinal=rng.randrange(0, len(live)),
                 source=_source(rng),
                 new_cell_type=rng.choice(["code", "markdown"]))
        elif move == "interrupt":
            emit("notebook_interrupt")
        else:
            emit("notebook_restart")
    return events
