"""Workflow aggregates: step matrices, time-bin profiles, temporal stats,
and the evolution of the per-cell name-binding count.

Everything here is pure batch computation over the normalized log and
the annotated transitions; outputs are plot-ready tables plus one
machine-readable report dictionary.  All aggregates are deterministic
and independent of per-notebook processing order.
"""

from __future__ import annotations

import csv
import re
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable, Mapping, Sequence

import numpy as np

from . import lex
from .annotate import (
    CLEAN_CODE,
    COMMENT,
    DEBUG,
    DS_STEPS,
    EDIT_CODE,
    EXPLORE_VARIABLE,
    EXTEND_CODE,
    FIX,
    IMPROVE_READABILITY,
    NO_CHANGE,
    UNCOMMENT,
    VISUALIZE_DATA,
    AnnotatedTransition,
    ds_step,
)
from .events import ERROR_EVENT, EXECUTE_CELL, FINISH_EXECUTE, CREATE_CELL, DELETE_CELL
from .normalize import SYNTHESIZED_MARKER, LogRecord
from .snapshots import CELL_TYPE_CODE, NotebookSnapshot, apply
from .transitions import (
    KIND_INTER,
    KIND_SELF,
    ChainStats,
    Transition,
    output_kind_counts,
    output_kind_distribution,
)

ROW_NORMALIZATION = "row"
GRAND_TOTAL_NORMALIZATION = "grand_total"

# Fig. 2-style grouping of purpose labels into intent categories.
PURPOSE_CATEGORIES = {
    "code_iteration": (FIX, DEBUG, EDIT_CODE, CLEAN_CODE, IMPROVE_READABILITY,
                       COMMENT, UNCOMMENT),
    "exploration": (EXPLORE_VARIABLE, VISUALIZE_DATA),
    "further_development": (EXTEND_CODE,),
    "no_change": (NO_CHANGE,),
}


# ---------------------------------------------------------------------------
# Transition matrices

@dataclass
class TransitionMatrix:
    labels: tuple[str, ...]
    values: np.ndarray            # normalized, |labels| x |labels|
    counts: np.ndarray            # raw transition counts
    normalization: str
    n_transitions: int

    @property
    def diagonal_dominance(self) -> float | None:
        """Share of raw transition mass sitting on the diagonal."""
        total = float(self.counts.sum())
        if total == 0:
            return None
        return float(np.trace(self.counts)) / total

    def to_rows(self) -> list[list]:
        header = ["from\\to", *self.labels]
        rows = [header]
        for i, label in enumerate(self.labels):
            rows.append([label, *(float(v) for v in self.values[i])])
        return rows

    def to_dict(self) -> dict:
        return {
            "labels": list(self.labels),
            "normalization": self.normalization,
            "n_transitions": self.n_transitions,
            "values": [[float(v) for v in row] for row in self.values],
            "counts": [[int(v) for v in row] for row in self.counts],
            "diagonal_dominance": self.diagonal_dominance,
        }


def _count_matrix(annotated: Sequence[AnnotatedTransition], kind: str,
                  labels: Sequence[str]) -> np.ndarray:
    index = {label: i for i, label in enumerate(labels)}
    counts = np.zeros((len(labels), len(labels)), dtype=np.int64)
    for a in annotated:
        if a.transition.kind != kind:
            continue
        counts[index[a.from_step], index[a.to_step]] += 1
    return counts


def self_matrix(annotated: Sequence[AnnotatedTransition],
                labels: Sequence[str] = DS_STEPS) -> TransitionMatrix:
    """Row-stochastic step matrix over self-transitions.

    Every row with any mass sums to 1; rows for steps that never served
    as a from-step stay all-zero.
    """
    counts = _count_matrix(annotated, KIND_SELF, labels)
    values = np.zeros_like(counts, dtype=np.float64)
    row_sums = counts.sum(axis=1)
    for i, total in enumerate(row_sums):
        if total > 0:
            values[i] = counts[i] / total
    return TransitionMatrix(labels=tuple(labels), values=values, counts=counts,
                            normalization=ROW_NORMALIZATION,
                            n_transitions=int(counts.sum()))


def inter_matrix(annotated: Sequence[AnnotatedTransition],
                 labels: Sequence[str] = DS_STEPS) -> TransitionMatrix:
    """Grand-total-normalized step matrix over inter-transitions."""
    counts = _count_matrix(annotated, KIND_INTER, labels)
    total = counts.sum()
    values = counts / total if total > 0 else np.zeros_like(counts, dtype=np.float64)
    return TransitionMatrix(labels=tuple(labels), values=values.astype(np.float64),
                            counts=counts, normalization=GRAND_TOTAL_NORMALIZATION,
                            n_transitions=int(total))


# ---------------------------------------------------------------------------
# Quantile profile

N_TIME_BINS = 10


@dataclass
class QuantileProfile:
    labels: tuple[str, ...]
    counts: np.ndarray            # N_TIME_BINS x |labels|
    n_events: int
    n_notebooks: int

    def per_bin_share(self) -> np.ndarray:
        """Each bin's counts divided by that bin's total (occupied bins)."""
        out = np.zeros_like(self.counts, dtype=np.float64)
        for i, total in enumerate(self.counts.sum(axis=1)):
            if total > 0:
                out[i] = self.counts[i] / total
        return out

    def per_step_share(self) -> np.ndarray:
        """Each step's counts divided by that step's total (occupied steps)."""
        out = np.zeros_like(self.counts, dtype=np.float64)
        totals = self.counts.sum(axis=0)
        for j, total in enumerate(totals):
            if total > 0:
                out[:, j] = self.counts[:, j] / total
        return out

    def spread_ratio(self, label: str) -> float | None:
        """Max/min share over occupied bins for one step — evenness probe."""
        j = self.labels.index(label)
        column = self.counts[:, j].astype(np.float64)
        occupied = column[column > 0]
        if occupied.size == 0:
            return None
        return float(occupied.max() / occupied.min())

    def to_dict(self) -> dict:
        return {
            "labels": list(self.labels),
            "n_events": self.n_events,
            "n_notebooks": self.n_notebooks,
            "counts": [[int(v) for v in row] for row in self.counts],
            "per_bin_share": [[float(v) for v in row] for row in self.per_bin_share()],
            "per_step_share": [[float(v) for v in row] for row in self.per_step_share()],
        }


def _bin_sizes(n: int, bins: int = N_TIME_BINS) -> list[int]:
    base, extra = divmod(n, bins)
    return [base + (1 if i < extra else 0) for i in range(bins)]


def quantile_profile(records: Sequence[LogRecord], steps: Mapping[int, str],
                     labels: Sequence[str] = DS_STEPS) -> QuantileProfile:
    """Equal-count time bins of labeled events, per notebook, summed.

    ``steps`` maps a record's seq_no to its step label.  Each notebook's
    labeled events are sorted by (timestamp, seq_no) and split into ten
    equal-count bins (earlier bins take the remainder), so bin totals
    always conserve the input count — including inputs smaller than ten,
    which leave later bins empty.
    """
    index = {label: i for i, label in enumerate(labels)}
    counts = np.zeros((N_TIME_BINS, len(labels)), dtype=np.int64)

    by_notebook: dict[tuple[str, str], list[LogRecord]] = {}
    for record in records:
        if record.seq_no in steps:
            key = (record.event.user_id, record.event.notebook_name)
            by_notebook.setdefault(key, []).append(record)

    n_events = 0
    for key in sorted(by_notebook):
        labeled = sorted(by_notebook[key], key=lambda r: (r.event.timestamp, r.seq_no))
        n_events += len(labeled)
        sizes = _bin_sizes(len(labeled))
        cursor = 0
        for bin_index, size in enumerate(sizes):
            for record in labeled[cursor:cursor + size]:
                counts[bin_index, index[steps[record.seq_no]]] += 1
            cursor += size
    return QuantileProfile(labels=tuple(labels), counts=counts,
                           n_events=n_events, n_notebooks=len(by_notebook))


def execution_steps(records: Sequence[LogRecord]) -> dict[int, str]:
    """Step label for every execution record, keyed by seq_no."""
    return {
        record.seq_no: ds_step(record.event.source or "")
        for record in records
        if record.event.kind == EXECUTE_CELL
    }


# ---------------------------------------------------------------------------
# Temporal statistics

GROUP_ALL = "All"
GROUP_UNKNOWN = "unknown"


@dataclass
class TimeStatsRow:
    task: str
    expertise: str
    n_executions: int
    exec_mean: float | None
    exec_std: float | None
    n_notebooks: int
    pct_mean: float | None
    pct_std: float | None

    def to_dict(self) -> dict:
        return {
            "task": self.task,
            "expertise": self.expertise,
            "n_executions": self.n_executions,
            "exec_mean": self.exec_mean,
            "exec_std": self.exec_std,
            "n_notebooks": self.n_notebooks,
            "pct_mean": self.pct_mean,
            "pct_std": self.pct_std,
        }


@dataclass
class TimeStats:
    rows: list[TimeStatsRow]
    diagnostics: dict = field(default_factory=dict)

    def row(self, task: str, expertise: str) -> TimeStatsRow | None:
        for r in self.rows:
            if r.task == task and r.expertise == expertise:
                return r
        return None

    def to_dict(self) -> dict:
        return {"rows": [r.to_dict() for r in self.rows], "diagnostics": self.diagnostics}


def _mean_std(values: Sequence[float]) -> tuple[float | None, float | None]:
    if not values:
        return None, None
    arr = np.asarray(values, dtype=np.float64)
    mean = float(arr.mean())
    std = float(arr.std(ddof=1)) if arr.size > 1 else 0.0
    return mean, std


def _match_durations(records: Sequence[LogRecord]) -> tuple[
        dict[tuple[str, str], list[float]], int]:
    """Per-notebook execution durations (s): execute → first finish/error.

    A new execution of the same cell before its report, or a report that
    never comes, leaves the execution unmatched (counted, not guessed).
    """
    durations: dict[tuple[str, str], list[float]] = {}
    pending: dict[tuple[str, str, str], int] = {}
    unmatched = 0
    for record in records:
        event = record.event
        if event.kind == EXECUTE_CELL:
            key = (event.user_id, event.notebook_name, event.cell_id)
            if key in pending:
                unmatched += 1
            pending[key] = event.timestamp
        elif event.kind in (FINISH_EXECUTE, ERROR_EVENT):
            key = (event.user_id, event.notebook_name, event.cell_id)
            started = pending.pop(key, None)
            if started is not None:
                notebook = (event.user_id, event.notebook_name)
                durations.setdefault(notebook, []).append(
                    (event.timestamp - started) / 1000.0)
    unmatched += len(pending)
    return durations, unmatched


def notebook_groups(records: Sequence[LogRecord],
                    keys: Sequence[str] = ("task", "expertise")) -> dict[tuple[str, str], tuple[str, ...]]:
    """Group membership per notebook, read from event extras.

    The first event that carries a grouping key wins; notebooks that
    never declare one fall into the "unknown" group.
    """
    groups: dict[tuple[str, str], dict[str, str]] = {}
    for record in records:
        event = record.event
        notebook = (event.user_id, event.notebook_name)
        slot = groups.setdefault(notebook, {})
        for key in keys:
            if key not in slot and key in event.extras:
                slot[key] = str(event.extras[key])
    return {
        notebook: tuple(slot.get(key, GROUP_UNKNOWN) for key in keys)
        for notebook, slot in groups.items()
    }


def time_stats(records: Sequence[LogRecord],
               grouping: Sequence[str] = ("task", "expertise")) -> TimeStats:
    """Execution-time and share-of-total-time statistics per group.

    Per-execution rows aggregate every matched duration in the group;
    the percent columns are per-notebook (total execution time over the
    notebook's first-to-last-event span), aggregated over notebooks.
    Group axes get "All" margins in every combination.
    """
    durations, unmatched = _match_durations(records)
    groups = notebook_groups(records, grouping)

    spans: dict[tuple[str, str], float] = {}
    bounds: dict[tuple[str, str], tuple[int, int]] = {}
    for record in records:
        event = record.event
        notebook = (event.user_id, event.notebook_name)
        lo, hi = bounds.get(notebook, (event.timestamp, event.timestamp))
        bounds[notebook] = (min(lo, event.timestamp), max(hi, event.timestamp))
    for notebook, (lo, hi) in bounds.items():
        spans[notebook] = (hi - lo) / 1000.0

    zero_span = 0
    percents: dict[tuple[str, str], float] = {}
    for notebook, span in spans.items():
        execution_total = sum(durations.get(notebook, []))
        if span <= 0:
            zero_span += 1
            continue
        percents[notebook] = 100.0 * execution_total / span

    tasks = sorted({g[0] for g in groups.values()}) if groups else []
    expertises = sorted({g[1] for g in groups.values()}) if groups else []

    rows: list[TimeStatsRow] = []
    for task in [*tasks, GROUP_ALL]:
        for expertise in [*expertises, GROUP_ALL]:
            notebooks = [
                nb for nb, g in groups.items()
                if (task == GROUP_ALL or g[0] == task)
                and (expertise == GROUP_ALL or g[1] == expertise)
            ]
            group_durations = [d for nb in notebooks for d in durations.get(nb, [])]
            group_percents = [percents[nb] for nb in notebooks if nb in percents]
            exec_mean, exec_std = _mean_std(group_durations)
            pct_mean, pct_std = _mean_std(group_percents)
            rows.append(TimeStatsRow(
                task=task, expertise=expertise,
                n_executions=len(group_durations),
                exec_mean=exec_mean, exec_std=exec_std,
                n_notebooks=len(notebooks),
                pct_mean=pct_mean, pct_std=pct_std,
            ))
    return TimeStats(rows=rows, diagnostics={
        "unmatched_executions": unmatched,
        "zero_span_notebooks": zero_span,
    })


# ---------------------------------------------------------------------------
# Name-binding counts over time

_IMPORT_RE = re.compile(r"^\s*import\s+(.+)$")
_FROM_IMPORT_RE = re.compile(r"^\s*from\s+\S+\s+import\s+(.+)$")
_DEF_RE = re.compile(r"^\s*(?:async\s+)?def\s+([A-Za-z_][A-Za-z0-9_]*)")
_CLASS_RE = re.compile(r"^\s*class\s+([A-Za-z_][A-Za-z0-9_]*)")
_FOR_RE = re.compile(r"(?:^|[\s(\[])for\s+(.+?)\s+in\s")
_AS_RE = re.compile(r"\bas\s+([A-Za-z_][A-Za-z0-9_]*)")
_WALRUS_RE = re.compile(r"([A-Za-z_][A-Za-z0-9_]*)\s*:=")


def _names_in_target(target: str) -> int:
    """Bare names bound by an assignment/loop target expression.

    Tuple/list targets contribute each component name; attribute and
    subscript targets bind no new name; starred names count once.
    """
    total = 0
    for component in _split_top_level(target, ","):
        component = component.strip().lstrip("*").strip()
        while component.startswith("(") and component.endswith(")"):
            component = component[1:-1].strip()
        while component.startswith("[") and component.endswith("]"):
            component = component[1:-1].strip()
        if "," in component:
            total += _names_in_target(component)
            continue
        if re.fullmatch(r"[A-Za-z_][A-Za-z0-9_]*", component) and component not in lex.KEYWORDS:
            total += 1
    return total


def _split_top_level(text: str, separator: str) -> list[str]:
    """Split on a separator only at bracket depth zero."""
    parts: list[str] = []
    depth = 0
    current: list[str] = []
    i = 0
    while i < len(text):
        ch = text[i]
        if ch in "([{":
            depth += 1
        elif ch in ")]}":
            depth = max(0, depth - 1)
        if depth == 0 and text.startswith(separator, i):
            # Reject comparison/augmented neighbours for "=".
            if separator == "=":
                prev = text[i - 1] if i > 0 else ""
                nxt = text[i + 1] if i + 1 < len(text) else ""
                if prev in "=!<>+-*/%&|^@:" or nxt == "=":
                    current.append(ch)
                    i += 1
                    continue
            parts.append("".join(current))
            current = []
            i += len(separator)
            continue
        current.append(ch)
        i += 1
    parts.append("".join(current))
    return parts


_AUGMENTED_RE = re.compile(
    r"^\s*([A-Za-z_][A-Za-z0-9_]*)\s*(?:\+|-|\*\*?|//?|%|&|\||\^|>>|<<|@)=(?!=)")


def count_bindings(source: str) -> int:
    """Lexical count of name-binding occurrences in one cell source.

    Counts assignment targets (plain, chained, annotated, augmented),
    walrus bindings, for-loop targets, with/except ``as`` names, import
    bindings, and def/class names.  Attribute and subscript targets bind
    no bare name.  Unlexable text simply yields what the scan finds.
    """
    masked = lex.mask_strings(source)
    lines = []
    for line in masked.split("\n"):
        cut = line.find("#")
        lines.append(line[:cut] if cut != -1 else line)

    total = 0
    for line in lines:
        stripped = line.strip()
        if not stripped:
            continue

        m = _DEF_RE.match(line)
        if m:
            total += 1
            continue
        m = _CLASS_RE.match(line)
        if m:
            total += 1
            continue

        m = _FROM_IMPORT_RE.match(line)
        if m:
            clause = m.group(1)
            if "*" in clause:
                continue
            for item in clause.split(","):
                item = item.strip().strip("()")
                if not item:
                    continue
                alias = re.search(r"\bas\s+([A-Za-z_][A-Za-z0-9_]*)", item)
                if alias:
                    total += 1
                elif re.match(r"[A-Za-z_]", item):
                    total += 1
            continue
        m = _IMPORT_RE.match(line)
        if m:
            for item in m.group(1).split(","):
                item = item.strip()
                if not item:
                    continue
                alias = re.search(r"\bas\s+([A-Za-z_][A-Za-z0-9_]*)", item)
                if alias:
                    total += 1
                else:
                    root = item.split(".")[0].strip()
                    if re.match(r"^[A-Za-z_][A-Za-z0-9_]*$", root):
                        total += 1
            continue

        total += len(_WALRUS_RE.findall(line))

        for m in _FOR_RE.finditer(line):
            total += _names_in_target(m.group(1))
        if re.match(r"^\s*(?:with|except)\b", line):
            for m in _AS_RE.finditer(line):
                total += 1
            continue

        m = _AUGMENTED_RE.match(line)
        if m:
            total += 1
            continue

        if "=" in line:
            segments = _split_top_level(line, "=")
            for target in segments[:-1]:
                if ":" in target:
                    target = _split_top_level(target, ":")[0]  # annotated target
                total += _names_in_target(target)
    return total


@dataclass
class ObjectCountSeries:
    per_notebook: dict[tuple[str, str], list[tuple[float, float]]]
    average_curve: list[tuple[float, float]]

    def to_dict(self) -> dict:
        return {
            "per_notebook": [
                {
                    "user_id": key[0],
                    "notebook_name": key[1],
                    "points": [{"t": t, "mean_bindings": v} for t, v in series],
                }
                for key, series in sorted(self.per_notebook.items())
            ],
            "average_curve": [{"t": t, "mean_bindings": v} for t, v in self.average_curve],
        }


def object_series(records: Sequence[LogRecord], grid_points: int = 101) -> ObjectCountSeries:
    """Mean bindings per code cell, tracked over each notebook's lifetime.

    After every applied record the snapshot's code cells are averaged;
    the time axis is normalized to [0, 1] per notebook.  The average
    curve interpolates every notebook's series onto a common grid and
    averages across notebooks.
    """
    streams: dict[tuple[str, str], list[LogRecord]] = {}
    for record in records:
        key = (record.event.user_id, record.event.notebook_name)
        streams.setdefault(key, []).append(record)

    per_notebook: dict[tuple[str, str], list[tuple[float, float]]] = {}
    for key in sorted(streams):
        stream = streams[key]
        first = stream[0].event.timestamp
        last = stream[-1].event.timestamp
        span = max(1, last - first)
        snapshot = NotebookSnapshot(user_id=key[0], notebook_name=key[1])
        series: list[tuple[float, float]] = []
        for record in stream:
            apply(snapshot, record)
            code_cells = [c for c in snapshot.cells if c.cell_type == CELL_TYPE_CODE]
            if code_cells:
                mean = sum(count_bindings(c.source) for c in code_cells) / len(code_cells)
            else:
                mean = 0.0
            t = (record.event.timestamp - first) / span
            series.append((t, mean))
        per_notebook[key] = series

    grid = np.linspace(0.0, 1.0, grid_points)
    curves = []
    for series in per_notebook.values():
        ts = np.asarray([t for t, _ in series], dtype=np.float64)
        vs = np.asarray([v for _, v in series], dtype=np.float64)
        if ts.size == 0:
            continue
        curves.append(np.interp(grid, ts, vs))
    if curves:
        average = np.mean(np.stack(curves), axis=0)
        average_curve = [(float(t), float(v)) for t, v in zip(grid, average)]
    else:
        average_curve = [(float(t), 0.0) for t in grid]
    return ObjectCountSeries(per_notebook=per_notebook, average_curve=average_curve)


# ---------------------------------------------------------------------------
# Report assembly

def purpose_proportions(annotated: Sequence[AnnotatedTransition],
                        kind: str = KIND_SELF) -> dict:
    """Label counts/shares over label occurrences, plus category shares."""
    counts: dict[str, int] = {}
    n_transitions = 0
    for a in annotated:
        if kind is not None and a.transition.kind != kind:
            continue
        n_transitions += 1
        for label in a.purposes:
            counts[label] = counts.get(label, 0) + 1
    total = sum(counts.values())
    label_to_category = {
        label: category
        for category, labels in PURPOSE_CATEGORIES.items()
        for label in labels
    }
    category_counts: dict[str, int] = {c: 0 for c in PURPOSE_CATEGORIES}
    category_counts["other"] = 0
    for label, count in counts.items():
        category_counts[label_to_category.get(label, "other")] += count
    return {
        "n_transitions": n_transitions,
        "n_labels": total,
        "counts": dict(sorted(counts.items())),
        "proportions": {k: v / total for k, v in sorted(counts.items())} if total else {},
        "category_counts": category_counts,
        "category_proportions": ({k: v / total for k, v in category_counts.items()}
                                 if total else {}),
    }


def _inter_mass_on(matrix: TransitionMatrix, steps: Sequence[str]) -> float | None:
    if matrix.n_transitions == 0:
        return None
    idx = [matrix.labels.index(s) for s in steps]
    return float(sum(matrix.values[i, j] for i in idx for j in idx))


def event_counts(records: Sequence[LogRecord]) -> dict:
    by_kind: dict[str, int] = {}
    notebooks = set()
    sessions = set()
    users = set()
    synthesized = 0
    for record in records:
        event = record.event
        by_kind[event.kind] = by_kind.get(event.kind, 0) + 1
        notebooks.add((event.user_id, event.notebook_name))
        sessions.add(event.session_id)
        users.add(event.user_id)
        if event.extras.get(SYNTHESIZED_MARKER):
            synthesized += 1
    creations = by_kind.get(CREATE_CELL, 0)
    return {
        "total": len(records),
        "by_kind": dict(sorted(by_kind.items())),
        "executions": by_kind.get(EXECUTE_CELL, 0),
        "creations": creations - synthesized,
        "synthesized_creates": synthesized,
        "distinct_cells": creations,
        "deletions": by_kind.get(DELETE_CELL, 0),
        "notebooks": len(notebooks),
        "sessions": len(sessions),
        "users": len(users),
    }


def build_report(records: Sequence[LogRecord],
                 annotated: Sequence[AnnotatedTransition],
                 chains: ChainStats,
                 rejects_count: int = 0,
                 config_hash: str | None = None) -> dict:
    """The full machine-readable analysis report."""
    transitions = [a.transition for a in annotated]
    self_m = self_matrix(annotated)
    inter_m = inter_matrix(annotated)
    steps = execution_steps(records)
    quantiles = quantile_profile(records, steps)
    times = time_stats(records)
    objects = object_series(records)

    groups = notebook_groups(records)
    inter_by_task: dict[str, dict] = {}
    for task in sorted({g[0] for g in groups.values()}):
        subset = [a for a in annotated
                  if groups.get((a.transition.user_id, a.transition.notebook_name),
                                (GROUP_UNKNOWN, GROUP_UNKNOWN))[0] == task]
        matrix = inter_matrix(subset)
        inter_by_task[task] = {
            "matrix": matrix.to_dict(),
            "core_data_mass": _inter_mass_on(
                matrix, ("data_exploration", "data_preprocessing")),
        }

    report = {
        "config_hash": config_hash,
        "events": {**event_counts(records), "rejects": rejects_count},
        "transitions": {
            "n": chains.n_transitions,
            "self": chains.n_self,
            "inter": chains.n_inter,
            "self_fraction": chains.self_fraction,
            "inter_fraction": (1.0 - chains.self_fraction) if chains.n_transitions else 0.0,
        },
        "chains": {
            "n_chains": len(chains.chains),
            "chain_lengths": chains.chain_lengths,
            "mean_reexecutions": chains.mean_reexecutions,
            "top5_share": chains.top5_share,
            "mean_change_size": chains.mean_change_size,
            "mean_change_size_nonzero": chains.mean_change_size_nonzero,
            "correlation": ({"r": chains.correlation[0], "p": chains.correlation[1]}
                            if chains.correlation else None),
            "position_means": [
                {"position": p, "mean_distance": m, "n": n}
                for p, m, n in chains.position_means
            ],
        },
        "output_kinds": {
            "counts": output_kind_counts(transitions, KIND_SELF),
            "proportions": output_kind_distribution(transitions, KIND_SELF),
        },
        "purposes": purpose_proportions(annotated),
        "self_matrix": self_m.to_dict(),
        "inter_matrix": {
            **inter_m.to_dict(),
            "core_data_mass": _inter_mass_on(
                inter_m, ("data_exploration", "data_preprocessing")),
        },
        "inter_matrix_by_task": inter_by_task,
        "quantiles": {
            **quantiles.to_dict(),
            "helper_functions_spread_ratio": quantiles.spread_ratio("helper_functions"),
        },
        "time": times.to_dict(),
        "objects": objects.to_dict(),
    }
    return report


# ---------------------------------------------------------------------------
# CSV writers

def _write_csv(path: str | Path, rows: Iterable[Iterable], meta_comment: str | None = None) -> None:
    with open(path, "w", encoding="utf-8", newline="") as fh:
        if meta_comment:
            fh.write(f"# {meta_comment}\n")
        writer = csv.writer(fh)
        for row in rows:
            writer.writerow(list(row))


def write_matrix_csv(path: str | Path, matrix: TransitionMatrix,
                     meta_comment: str | None = None) -> None:
    _write_csv(path, matrix.to_rows(), meta_comment)


def write_quantiles_csv(path: str | Path, profile: QuantileProfile,
                        meta_comment: str | None = None) -> None:
    rows: list[list] = [["bin", "normalization", *profile.labels]]
    for i in range(N_TIME_BINS):
        rows.append([i + 1, "count", *(int(v) for v in profile.counts[i])])
    per_bin = profile.per_bin_share()
    per_step = profile.per_step_share()
    for i in range(N_TIME_BINS):
        rows.append([i + 1, "per_bin_share", *(float(v) for v in per_bin[i])])
    for i in range(N_TIME_BINS):
        rows.append([i + 1, "per_step_share", *(float(v) for v in per_step[i])])
    _write_csv(path, rows, meta_comment)


def write_time_stats_csv(path: str | Path, stats: TimeStats,
                         meta_comment: str | None = None) -> None:
    rows: list[list] = [[
        "task", "expertise", "n_executions", "exec_mean_s", "exec_std_s",
        "n_notebooks", "pct_mean", "pct_std",
    ]]
    for r in stats.rows:
        rows.append([r.task, r.expertise, r.n_executions,
                     r.exec_mean if r.exec_mean is not None else "",
                     r.exec_std if r.exec_std is not None else "",
                     r.n_notebooks,
                     r.pct_mean if r.pct_mean is not None else "",
                     r.pct_std if r.pct_std is not None else ""])
    _write_csv(path, rows, meta_comment)


def write_object_series_csv(path: str | Path, series: ObjectCountSeries,
                            meta_comment: str | None = None) -> None:
    rows: list[list] = [["user_id", "notebook_name", "t", "mean_bindings"]]
    for key in sorted(series.per_notebook):
        for t, v in series.per_notebook[key]:
            rows.append([key[0], key[1], float(t), float(v)])
    for t, v in series.average_curve:
        rows.append(["", "<average>", float(t), float(v)])
    _write_csv(path, rows, meta_comment)
