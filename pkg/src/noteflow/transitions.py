"""Execution-to-execution transitions and re-execution chain metrics.

Every pair of consecutive ``execute_cell`` records inside one
(user, notebook) stream forms a transition: a *self*-transition when both
executions hit the same cell (iterative development of one cell), an
*inter*-transition when the developer moved to a different cell.  On top
of the transition sequence this module computes the re-execution chain
statistics: chain lengths, normalized change sizes, how change size
correlates with position in the chain, and what kind of output the
developer was looking at when they re-executed.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable, Sequence

from scipy import stats as _scipy_stats

from .events import (
    EXECUTE_CELL,
    OUTPUT_DISPLAY_DATA,
    OUTPUT_ERROR,
    OUTPUT_EXECUTE_RESULT,
    OUTPUT_KIND_EMPTY,
    OUTPUT_STREAM,
    Output,
)
from .normalize import LogRecord
from .snapshots import NotebookSnapshot, apply

KIND_SELF = "self"
KIND_INTER = "inter"

# When a cell holds several outputs, the one the developer reacted to is
# summarized by this precedence: an error dominates everything, a proper
# result beats auxiliary display data, and bare console text ranks last.
OUTPUT_KIND_PRIORITY = (
    OUTPUT_ERROR,
    OUTPUT_EXECUTE_RESULT,
    OUTPUT_DISPLAY_DATA,
    OUTPUT_STREAM,
)

OUTPUT_KINDS = OUTPUT_KIND_PRIORITY + (OUTPUT_KIND_EMPTY,)


def classify_outputs(outputs: Sequence[Output] | None) -> str:
    """Summarize an output list as one of the five output kinds."""
    if not outputs:
        return OUTPUT_KIND_EMPTY
    present = {o.output_type for o in outputs}
    for kind in OUTPUT_KIND_PRIORITY:
        if kind in present:
            return kind
    return OUTPUT_KIND_EMPTY


@dataclass
class Transition:
    """One consecutive pair of executions within a notebook stream."""

    index: int
    user_id: str
    notebook_name: str
    session_id: str
    kind: str
    from_cell_id: str
    to_cell_id: str
    from_seq_no: int
    to_seq_no: int
    from_timestamp: int
    to_timestamp: int
    gap_seconds: float
    from_source: str
    to_source: str
    from_output_kind: str
    distance: float

    def to_dict(self) -> dict:
        return {
            "index": self.index,
            "user_id": self.user_id,
            "notebook_name": self.notebook_name,
            "session_id": self.session_id,
            "kind": self.kind,
            "from_cell_id": self.from_cell_id,
            "to_cell_id": self.to_cell_id,
            "from_seq_no": self.from_seq_no,
            "to_seq_no": self.to_seq_no,
            "from_timestamp": self.from_timestamp,
            "to_timestamp": self.to_timestamp,
            "gap_seconds": self.gap_seconds,
            "from_source": self.from_source,
            "to_source": self.to_source,
            "from_output_kind": self.from_output_kind,
            "distance": self.distance,
        }


def transition_from_dict(doc: dict) -> Transition:
    return Transition(**{k: doc[k] for k in (
        "index", "user_id", "notebook_name", "session_id", "kind",
        "from_cell_id", "to_cell_id", "from_seq_no", "to_seq_no",
        "from_timestamp", "to_timestamp", "gap_seconds",
        "from_source", "to_source", "from_output_kind", "distance",
    )})


def levenshtein(a: str, b: str) -> int:
    """Edit distance over Unicode scalar values (two-row dynamic program)."""
    if a == b:
        return 0
    if not a:
        return len(b)
    if not b:
        return len(a)
    if len(a) < len(b):
        a, b = b, a
    previous = list(range(len(b) + 1))
    for i, ca in enumerate(a, start=1):
        current = [i]
        for j, cb in enumerate(b, start=1):
            cost = 0 if ca == cb else 1
            current.append(min(
                previous[j] + 1,        # delete from a
                current[j - 1] + 1,     # insert into a
                previous[j - 1] + cost, # substitute
            ))
        previous = current
    return previous[-1]


def normalized_edit_distance(a: str, b: str) -> float:
    """Changed-symbol fraction: Levenshtein(a, b) / max(|a|, |b|).

    Two empty strings are identical, hence 0.0; the result always lies
    in [0, 1] because the edit distance never exceeds the longer length.
    """
    longest = max(len(a), len(b))
    if longest == 0:
        return 0.0
    return levenshtein(a, b) / longest


def extract_transitions(records: Iterable[LogRecord]) -> list[Transition]:
    """Build the transition sequence from a normalized log.

    Streams are scoped per (user, notebook); notebook-level events such
    as kernel restarts never break a stream.  ``from_output_kind`` is the
    from-cell's visible output at the moment of the new execution — i.e.
    whatever the previous run produced — even if the cell was deleted in
    between (its last known state is used).
    """
    # Per-stream fold state: snapshot, last execute info, live cell refs.
    snapshots: dict[tuple[str, str], NotebookSnapshot] = {}
    last_execute: dict[tuple[str, str], dict] = {}
    last_cell_state: dict[tuple[str, str, str], object] = {}

    transitions: list[Transition] = []
    for record in records:
        event = record.event
        key = (event.user_id, event.notebook_name)
        if key not in snapshots:
            snapshots[key] = NotebookSnapshot(user_id=key[0], notebook_name=key[1])
        snapshot = snapshots[key]

        if event.kind == EXECUTE_CELL:
            previous = last_execute.get(key)
            if previous is not None:
                from_cell = last_cell_state.get((key[0], key[1], previous["cell_id"]))
                from_outputs = list(from_cell.outputs) if from_cell is not None else []
                to_source = event.source if event.source is not None else ""
                kind = KIND_SELF if previous["cell_id"] == event.cell_id else KIND_INTER
                transitions.append(Transition(
                    index=len(transitions),
                    user_id=event.user_id,
                    notebook_name=event.notebook_name,
                    session_id=event.session_id,
                    kind=kind,
                    from_cell_id=previous["cell_id"],
                    to_cell_id=event.cell_id,
                    from_seq_no=previous["seq_no"],
                    to_seq_no=record.seq_no,
                    from_timestamp=previous["timestamp"],
                    to_timestamp=event.timestamp,
                    gap_seconds=(event.timestamp - previous["timestamp"]) / 1000.0,
                    from_source=previous["source"],
                    to_source=to_source,
                    from_output_kind=classify_outputs(from_outputs),
                    distance=normalized_edit_distance(previous["source"], to_source),
                ))
            last_execute[key] = {
                "cell_id": event.cell_id,
                "seq_no": record.seq_no,
                "timestamp": event.timestamp,
                "source": event.source if event.source is not None else "",
            }

        apply(snapshot, record)
        if event.cell_id is not None:
            cell = snapshot.cell(event.cell_id)
            if cell is not None:
                # Live reference: keeps tracking until the cell is deleted,
                # then freezes at its last state.
                last_cell_state[(key[0], key[1], event.cell_id)] = cell
    return transitions


@dataclass
class Chain:
    """A maximal run of consecutive self-transitions on one cell."""

    user_id: str
    notebook_name: str
    cell_id: str
    length: int                      # executions in the run (>= 2)
    distances: list[float] = field(default_factory=list)

    def to_dict(self) -> dict:
        return {
            "user_id": self.user_id,
            "notebook_name": self.notebook_name,
            "cell_id": self.cell_id,
            "length": self.length,
            "distances": self.distances,
        }


@dataclass
class ChainStats:
    chains: list[Chain]
    n_transitions: int
    n_self: int
    n_inter: int
    pairs: list[tuple[int, float]]            # (position in chain, distance)
    position_means: list[tuple[int, float, int]]  # (position, mean distance, n)
    correlation: tuple[float, float] | None   # Pearson (r, p), None if undefined
    mean_reexecutions: float | None           # per re-executed cell
    top5_share: float | None                  # share of re-executions by top-5% cells
    mean_change_size: float | None            # mean distance incl. zero distances
    mean_change_size_nonzero: float | None    # same, zero distances excluded

    @property
    def self_fraction(self) -> float:
        return self.n_self / self.n_transitions if self.n_transitions else 0.0

    @property
    def chain_lengths(self) -> list[int]:
        return [c.length for c in self.chains]

    def to_dict(self) -> dict:
        return {
            "n_transitions": self.n_transitions,
            "n_self": self.n_self,
            "n_inter": self.n_inter,
            "self_fraction": self.self_fraction,
            "chains": [c.to_dict() for c in self.chains],
            "position_means": [
                {"position": p, "mean_distance": m, "n": n} for p, m, n in self.position_means
            ],
            "correlation": (
                {"r": self.correlation[0], "p": self.correlation[1]}
                if self.correlation is not None else None
            ),
            "mean_reexecutions": self.mean_reexecutions,
            "top5_share": self.top5_share,
            "mean_change_size": self.mean_change_size,
            "mean_change_size_nonzero": self.mean_change_size_nonzero,
        }


def _detect_chains(transitions: Sequence[Transition]) -> list[Chain]:
    by_stream: dict[tuple[str, str], list[Transition]] = {}
    for t in transitions:
        by_stream.setdefault((t.user_id, t.notebook_name), []).append(t)

    chains: list[Chain] = []
    for key in sorted(by_stream):
        stream = sorted(by_stream[key], key=lambda t: t.to_seq_no)
        current: Chain | None = None
        for t in stream:
            if t.kind == KIND_SELF:
                if current is None:
                    current = Chain(user_id=t.user_id, notebook_name=t.notebook_name,
                                    cell_id=t.to_cell_id, length=2, distances=[t.distance])
                else:
                    current.length += 1
                    current.distances.append(t.distance)
            else:
                if current is not None:
                    chains.append(current)
                    current = None
        if current is not None:
            chains.append(current)
    return chains


def chain_stats(transitions: Sequence[Transition]) -> ChainStats:
    """Chain lengths, change sizes, and the position/size correlation.

    Chain length counts executions, so a run of k self-transitions has
    length k+1.  ``mean_reexecutions`` averages, over every cell with at
    least one self-transition, the total number of its re-executions;
    ``top5_share`` is the fraction of all re-executions owed to the
    ceil(5%) most re-executed cells.
    """
    chains = _detect_chains(transitions)
    n_self = sum(1 for t in transitions if t.kind == KIND_SELF)
    n_inter = len(transitions) - n_self

    pairs: list[tuple[int, float]] = []
    for chain in chains:
        for position, distance in enumerate(chain.distances, start=1):
            pairs.append((position, distance))

    by_position: dict[int, list[float]] = {}
    for position, distance in pairs:
        by_position.setdefault(position, []).append(distance)
    position_means = [
        (p, sum(ds) / len(ds), len(ds)) for p, ds in sorted(by_position.items())
    ]

    correlation = None
    if len(pairs) >= 2:
        xs = [float(p) for p, _ in pairs]
        ys = [d for _, d in pairs]
        if len(set(xs)) > 1 and len(set(ys)) > 1:
            result = _scipy_stats.pearsonr(xs, ys)
            r, p = float(result.statistic), float(result.pvalue)
            if not (math.isnan(r) or math.isnan(p)):
                correlation = (r, p)

    reexec_per_cell: dict[tuple[str, str, str], int] = {}
    for t in transitions:
        if t.kind == KIND_SELF:
            cell_key = (t.user_id, t.notebook_name, t.to_cell_id)
            reexec_per_cell[cell_key] = reexec_per_cell.get(cell_key, 0) + 1

    mean_reexecutions = None
    top5_share = None
    if reexec_per_cell:
        counts = sorted(reexec_per_cell.values(), reverse=True)
        mean_reexecutions = sum(counts) / len(counts)
        top_n = math.ceil(0.05 * len(counts))
        top5_share = sum(counts[:top_n]) / sum(counts)

    self_distances = [t.distance for t in transitions if t.kind == KIND_SELF]
    nonzero = [d for d in self_distances if d > 0.0]
    mean_change_size = sum(self_distances) / len(self_distances) if self_distances else None
    mean_change_size_nonzero = sum(nonzero) / len(nonzero) if nonzero else None

    return ChainStats(
        chains=chains,
        n_transitions=len(transitions),
        n_self=n_self,
        n_inter=n_inter,
        pairs=pairs,
        position_means=position_means,
        correlation=correlation,
        mean_reexecutions=mean_reexecutions,
        top5_share=top5_share,
        mean_change_size=mean_change_size,
        mean_change_size_nonzero=mean_change_size_nonzero,
    )


def output_kind_distribution(transitions: Sequence[Transition], kind: str = KIND_SELF) -> dict[str, float]:
    """Proportions of from-output kinds over transitions of one kind."""
    selected = [t for t in transitions if kind is None or t.kind == kind]
    if not selected:
        return {}
    counts: dict[str, int] = {}
    for t in selected:
        counts[t.from_output_kind] = counts.get(t.from_output_kind, 0) + 1
    total = len(selected)
    return {k: counts[k] / total for k in sorted(counts)}


def output_kind_counts(transitions: Sequence[Transition], kind: str = KIND_SELF) -> dict[str, int]:
    selected = [t for t in transitions if kind is None or t.kind == kind]
    counts: dict[str, int] = {}
    for t in selected:
        counts[t.from_output_kind] = counts.get(t.from_output_kind, 0) + 1
    return dict(sorted(counts.items()))


# ---------------------------------------------------------------------------
# Serialization

def write_transitions(path: str | Path, transitions: Iterable[Transition], meta: dict | None = None) -> None:
    from .jsonl import write_jsonl

    write_jsonl(path, (t.to_dict() for t in transitions), meta=meta)


def read_transitions(path: str | Path) -> list[Transition]:
    from .jsonl import read_jsonl

    return [transition_from_dict(doc) for doc in read_jsonl(path)]
