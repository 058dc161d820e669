"""Acceptance gate: every release criterion, one pass/fail line each.

Run visibly with::

    python3 -m pytest tests/test_acceptance.py -v -s

Each test prints ``ACCEPTANCE PASS: <criterion>`` on success and
``ACCEPTANCE FAIL: <criterion>`` before the assertion detail on failure.
The dataset-reproduction criterion needs the published event corpus; it
skips with an explanation when the corpus is not present.
"""

import contextlib
import json
import os
import random
import time
from pathlib import Path

import numpy as np
import pytest

from noteflow.analytics import event_counts, inter_matrix, quantile_profile, self_matrix
from noteflow.analytics import execution_steps as analytics_execution_steps
from noteflow.annotate import DS_STEPS, AnnotatedTransition, ds_step, rule_purposes
from noteflow.normalize import normalize
from noteflow.pipeline import PipelineConfig, run_pipeline
from noteflow.snapshots import build_snapshots, final_snapshot
from noteflow.transitions import (
    Transition,
    chain_stats,
    extract_transitions,
    levenshtein,
    normalized_edit_distance,
    output_kind_distribution,
)

from conftest import FIXTURES
from helpers import records_for, wire
from oracles.naive_simulator import simulate
from oracles.sequence_gen import random_sequence
from oracles.wagner_fischer import edit_distance as reference_distance

TOLERANCE = 1e-9


@contextlib.contextmanager
def criterion(name):
    try:
        yield
    except BaseException:
        print(f"\nACCEPTANCE FAIL: {name}")
        raise
    print(f"\nACCEPTANCE PASS: {name}")


def test_snapshot_oracle_equivalence():
    with criterion("snapshot oracle equivalence "
                   "(10,000 random sequences, < 1 min)"):
        started = time.monotonic()
        rng = random.Random(20_260_816)
        for i in range(10_000):
            events = random_sequence(rng, max_events=50)
            records = records_for(events)
            expected = simulate(events)
            snapshot = final_snapshot(records, "nb", user_id="u1")
            assert [c.to_dict() for c in snapshot.cells] == expected, \
                f"sequence {i} diverged"
            if i % 50 == 0:
                # the per-action series agrees with the simulator too:
                # its last element is the final state, and a mid-sequence
                # element equals the simulator run on that prefix
                series = build_snapshots(records, "nb", user_id="u1")
                assert len(series) == len(records)
                assert [c.to_dict() for c in series[-1].cells] == expected
                middle = len(records) // 2
                if middle:
                    prefix = simulate(events[:middle])
                    assert [c.to_dict() for c in series[middle - 1].cells] == prefix
        elapsed = time.monotonic() - started
        assert elapsed < 60.0, f"took {elapsed:.1f}s"


def test_edit_distance_oracle():
    with criterion("edit distance matches Wagner-Fischer oracle "
                   "(10,000 pairs + fixed cases)"):
        assert normalized_edit_distance("kitten", "sitting") == 3 / 7
        assert normalized_edit_distance("same", "same") == 0.0
        assert normalized_edit_distance("", "") == 0.0
        assert normalized_edit_distance("", "xyz") == 1.0
        assert normalized_edit_distance("xyz", "") == 1.0

        rng = random.Random(97)
        alphabet = "abcdefgh_= ()\n.éß\U0001F600"
        for _ in range(10_000):
            a = "".join(rng.choices(alphabet, k=rng.randrange(0, 22)))
            b = "".join(rng.choices(alphabet, k=rng.randrange(0, 22)))
            assert levenshtein(a, b) == reference_distance(a, b), (a, b)
            if max(len(a), len(b)):
                d = normalized_edit_distance(a, b)
                assert d == reference_distance(a, b) / max(len(a), len(b))


def _synthetic_annotation(from_step, to_step, kind, index):
    transition = Transition(
        index=index, user_id="u1", notebook_name="nb", session_id="s1",
        kind=kind, from_cell_id="a", to_cell_id="a" if kind == "self" else "b",
        from_seq_no=index, to_seq_no=index + 1,
        from_timestamp=0, to_timestamp=1000, gap_seconds=1.0,
        from_source="", to_source="", from_output_kind="empty", distance=0.0)
    return AnnotatedTransition(transition=transition, purposes={"edit_code"},
                               purpose_source="rule",
                               from_step=from_step, to_step=to_step)


def test_matrix_invariants():
    with criterion("matrix normalization invariants at 1e-9 "
                   "+ forced single/uniform matrices"):
        # analytically forced: one self-transition -> a one-hot row
        single = self_matrix([_synthetic_annotation(
            "modelling", "evaluation", "self", 0)])
        i = single.labels.index("modelling")
        j = single.labels.index("evaluation")
        forced = np.zeros((len(DS_STEPS), len(DS_STEPS)))
        forced[i, j] = 1.0
        assert np.array_equal(single.values, forced)

        # analytically forced: uniform synthetic input -> uniform matrices
        rows = []
        index = 0
        for a in DS_STEPS:
            for b in DS_STEPS:
                rows.append(_synthetic_annotation(a, b, "self", index))
                rows.append(_synthetic_annotation(a, b, "inter", index + 1))
                index += 2
        k = len(DS_STEPS)
        assert np.allclose(self_matrix(rows).values, np.full((k, k), 1 / k),
                           atol=TOLERANCE)
        assert np.allclose(inter_matrix(rows).values,
                           np.full((k, k), 1 / (k * k)), atol=TOLERANCE)

        # random inputs: row-stochastic / grand-total within 1e-9
        rng = random.Random(5)
        for _ in range(200):
            rows = [
                _synthetic_annotation(rng.choice(DS_STEPS), rng.choice(DS_STEPS),
                                      rng.choice(["self", "inter"]), i)
                for i in range(rng.randrange(0, 60))
            ]
            self_m = self_matrix(rows)
            for row in self_m.values:
                total = float(row.sum())
                assert abs(total - 1.0) < TOLERANCE or abs(total) < TOLERANCE
            inter_m = inter_matrix(rows)
            total = float(inter_m.values.sum())
            if inter_m.n_transitions:
                assert abs(total - 1.0) < TOLERANCE
            else:
                assert total == 0.0


def _corrupted_sequence(rng):
    """A valid random sequence with duplicates and orphan references mixed in."""
    events = random_sequence(rng, max_events=30)
    if events and rng.random() < 0.8:
        events.append(dict(rng.choice(events)))          # duplicate submission
    if rng.random() < 0.8:
        events.append(wire("delete_cell", seq=9000, ts=10 ** 9,
                           cell_id="never-created", cell_ordinal=0))
    rng.shuffle(events)
    return events


def test_conservation_suite():
    with criterion("conservation: normalize count balance, quantile totals "
                   "0..100, chain executions + singletons"):
        # normalize: input = output - synthesized + rejects (rejects
        # include duplicate drops)
        rng = random.Random(11)
        for _ in range(100):
            events = _corrupted_sequence(rng)
            result = normalize([_parse(doc) for doc in events])
            counts = result.counts()
            assert counts["input"] == len(events)
            assert counts["output"] - counts["synthesized"] + counts["rejects"] \
                == len(events)

        # quantile bins conserve totals for every input size 0..100
        for n in range(101):
            events = [wire("create_cell", seq=1, ts=1000, cell_id="c1",
                           cell_ordinal=0, source="")]
            events += [
                wire("execute_cell", seq=2 + i, ts=2000 + 1000 * i,
                     cell_id="c1", cell_ordinal=0, source="x = 1")
                for i in range(n)
            ]
            records = records_for(events)
            profile = quantile_profile(records,
                                       analytics_execution_steps(records))
            assert int(profile.counts.sum()) == n, f"size {n}"

        # chain executions + singleton executions = total executions
        rng = random.Random(23)
        for _ in range(50):
            events = random_sequence(rng, max_events=40)
            records = records_for(events)
            stats = chain_stats(extract_transitions(records))
            run_lengths = []
            current_cell, run = None, 0
            for record in records:
                if record.event.kind != "execute_cell":
                    continue
                if record.event.cell_id == current_cell:
                    run += 1
                else:
                    if run:
                        run_lengths.append(run)
                    current_cell, run = record.event.cell_id, 1
            if run:
                run_lengths.append(run)
            singletons = sum(1 for r in run_lengths if r == 1)
            total_executions = sum(run_lengths)
            assert sum(stats.chain_lengths) + singletons == total_executions


def _parse(doc):
    from noteflow.events import parse_event
    return parse_event(json.dumps(doc))


def test_purpose_rule_determinism_and_authority():
    with criterion("purpose rules: no_change iff byte-equal (adversarial) "
                   "+ 60-case mechanical fixture at 100%"):
        cases = json.loads((FIXTURES / "purpose_cases.json").read_text())

        for case in cases["equality"]:
            labels = rule_purposes(case["before"], case["after"])
            byte_equal = case["before"] == case["after"]
            assert case["no_change"] == byte_equal, case
            assert (labels == {"no_change"}) == byte_equal, case

        mechanical = cases["mechanical"]
        assert len(mechanical) == 60
        hits = sum(
            rule_purposes(case["before"], case["after"]) == {case["expect"]}
            for case in mechanical)
        assert hits == 60, f"{hits}/60 mechanical cases"


def test_ds_step_baseline_quality():
    with criterion("data-science step rule >= 0.8 on the 50-cell fixture"):
        cells = json.loads((FIXTURES / "ds_step_cells.json").read_text())["cells"]
        assert len(cells) == 50
        hits = sum(ds_step(cell["source"]) == cell["label"] for cell in cells)
        accuracy = hits / len(cells)
        print(f"\n  ds_step agreement: {hits}/50 = {accuracy:.2f}")
        assert accuracy >= 0.8


def _write_events_corpus(path):
    rng = random.Random(314)
    lines = []
    for n in range(12):
        events = random_sequence(rng, max_events=40,
                                 notebook_name=f"nb{n % 4}",
                                 user_id=f"u{n % 3}")
        for doc in events:
            doc = dict(doc)
            doc["session_id"] = f"s{n}"
            lines.append(json.dumps(doc))
    path.write_text("\n".join(lines) + "\n", encoding="utf-8")


def test_pipeline_determinism(tmp_path):
    with criterion("determinism: two pipeline runs byte-identical"):
        events_path = tmp_path / "events.jsonl"
        _write_events_corpus(events_path)
        dirs = []
        for name in ("first", "second"):
            out = tmp_path / name
            run_pipeline(PipelineConfig(events_path=str(events_path),
                                        out_dir=str(out)))
            dirs.append(out)
        first, second = dirs
        names = sorted(p.name for p in first.iterdir() if p.is_file())
        assert names == sorted(p.name for p in second.iterdir() if p.is_file())
        assert names, "pipeline produced no artifacts"
        for name in names:
            assert (first / name).read_bytes() == (second / name).read_bytes(), \
                f"artifact {name} differs between runs"


def _dataset_path():
    env = os.environ.get("NOTEFLOW_JUNE_PATH")
    if env:
        return Path(env)
    default = Path(__file__).resolve().parent.parent / "data" / "june.jsonl"
    return default if default.exists() else None


def test_dataset_reproduction(tmp_path):
    dataset = _dataset_path()
    if dataset is None or not dataset.exists():
        print("\nACCEPTANCE SKIP: dataset reproduction (published event corpus "
              "not present; set NOTEFLOW_JUNE_PATH or place data/june.jsonl)")
        pytest.skip("published event corpus not available")

    with criterion("dataset reproduction: exact counts + published statistics"):
        started = time.monotonic()
        out = tmp_path / "dataset-run"
        run_pipeline(PipelineConfig(events_path=str(dataset), out_dir=str(out)))

        from noteflow.normalize import read_log_jsonl
        records = read_log_jsonl(out / "log.jsonl")
        counts = event_counts(records)
        assert counts["total"] == 14_641
        assert counts["executions"] == 9_207
        assert counts["creations"] == 1_930
        assert counts["deletions"] == 730
        assert counts["notebooks"] == 29

        transitions = extract_transitions(records)
        stats = chain_stats(transitions)
        assert abs(stats.self_fraction - 0.39) <= 0.01
        assert abs(stats.mean_reexecutions - 5.0) <= 0.5
        assert abs(stats.top5_share - 0.256) <= 0.01
        assert abs(stats.mean_change_size - 0.13) <= 0.02

        shares = output_kind_distribution(transitions, "self")
        assert shares.get("error", 0.0) > 0.20

        report = json.loads((out / "report.json").read_text())
        rows = {(r["task"], r["expertise"]): r
                for r in report["time"]["rows"]}
        ml_row = rows[("ML", "All")]
        assert abs(ml_row["exec_mean"] - 6.33) <= 0.1
        all_row = rows[("All", "All")]
        assert abs(all_row["pct_mean"] - 8.96) <= 0.2

        elapsed = time.monotonic() - started
        assert elapsed < 300.0, f"took {elapsed:.1f}s"
