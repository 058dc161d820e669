"""Command-line interface: full flows and exit-code contract."""

import json

import pytest

import noteflow.pipeline as pipeline_module
from noteflow.cli import main
from noteflow.events import parse_event
from noteflow.store import EventStore

from helpers import wire


@pytest.fixture()
def events_file(tmp_path):
    events = [
        wire("notebook_launch", seq=1, ts=0),
        wire("create_cell", seq=2, ts=1000, cell_id="c1", cell_ordinal=0,
             source="import pandas as pd"),
        wire("execute_cell", seq=3, ts=2000, cell_id="c1", cell_ordinal=0,
             source="df = pd.read_csv('x.csv')"),
        wire("finish_execute", seq=4, ts=3000, cell_id="c1", cell_ordinal=0,
             outputs=[{"output_type": "stream", "payload": "ok"}]),
        wire("execute_cell", seq=5, ts=4000, cell_id="c1", cell_ordinal=0,
             source="df.head()"),
        wire("create_cell", seq=6, ts=5000, cell_id="c2", cell_ordinal=1,
             source="# notes"),
    ]
    path = tmp_path / "events.jsonl"
    path.write_text("".join(json.dumps(e) + "\n" for e in events),
                    encoding="utf-8")
    return path


@pytest.fixture()
def log_file(events_file, tmp_path):
    out = tmp_path / "normalized"
    assert main(["normalize", str(events_file), "--out-dir", str(out)]) == 0
    return out / "log.jsonl"


class TestNormalize:
    def test_writes_log_tables(self, events_file, tmp_path, capsys):
        out = tmp_path / "out"
        assert main(["normalize", str(events_file), "--out-dir", str(out)]) == 0
        assert (out / "log.jsonl").exists()
        assert (out / "log.csv").exists()
        assert (out / "rejects.jsonl").exists()
        assert "log records: 6" in capsys.readouterr().out

    def test_missing_input_is_validation_error(self, tmp_path):
        assert main(["normalize", str(tmp_path / "nope.jsonl"),
                     "--out-dir", str(tmp_path / "out")]) == 2

    def test_malformed_json_is_validation_error(self, tmp_path):
        bad = tmp_path / "bad.jsonl"
        bad.write_text("{not json\n", encoding="utf-8")
        assert main(["normalize", str(bad),
                     "--out-dir", str(tmp_path / "out")]) == 2

    def test_schema_violation_is_validation_error(self, tmp_path):
        doc = wire("create_cell", seq=1, ts=1000, cell_id="c1",
                   cell_ordinal=0, source="x")
        del doc["source"]
        bad = tmp_path / "bad.jsonl"
        bad.write_text(json.dumps(doc) + "\n", encoding="utf-8")
        assert main(["normalize", str(bad),
                     "--out-dir", str(tmp_path / "out")]) == 2


class TestSnapshots:
    def test_writes_series_tables(self, log_file, tmp_path, capsys):
        out = tmp_path / "snapshots"
        assert main(["snapshots", str(log_file), "--out", str(out)]) == 0
        assert (out / "snapshots.jsonl").exists()
        assert (out / "snapshots.csv").exists()
        assert "snapshot rows: 6" in capsys.readouterr().out
        header = (out / "snapshots.csv").read_text().splitlines()[0]
        assert header == ("user_id,notebook_name,after_seq_no,"
                          "events_applied,n_cells,cell_ids")

    def test_per_step_notebook_files(self, log_file, tmp_path):
        out = tmp_path / "snapshots"
        assert main(["snapshots", str(log_file), "--out", str(out),
                     "--ipynb"]) == 0
        notebooks = sorted(p.name for p in out.glob("*.ipynb"))
        assert notebooks == [f"u1__nb__{i:06d}.ipynb" for i in range(6)]
        doc = json.loads((out / "u1__nb__000005.ipynb").read_text())
        assert [c["id"] for c in doc["cells"]] == ["c1", "c2"]


class TestTransitions:
    def test_writes_transitions(self, log_file, tmp_path, capsys):
        out = tmp_path / "transitions.jsonl"
        assert main(["transitions", str(log_file), "--out", str(out)]) == 0
        assert "transitions: 1  self: 1" in capsys.readouterr().out
        rows = [json.loads(line) for line in out.read_text().splitlines()
                if "_meta" not in line]
        assert rows[0]["kind"] == "self"
        assert rows[0]["from_output_kind"] == "stream"

    def test_missing_log_is_validation_error(self, tmp_path):
        assert main(["transitions", str(tmp_path / "nope.jsonl"),
                     "--out", str(tmp_path / "t.jsonl")]) == 2


class TestAnnotate:
    def test_annotates_with_rules(self, log_file, tmp_path, capsys):
        transitions = tmp_path / "transitions.jsonl"
        main(["transitions", str(log_file), "--out", str(transitions)])
        out = tmp_path / "annotations.jsonl"
        audit = tmp_path / "audit.jsonl"
        assert main(["annotate", str(transitions), "--out", str(out),
                     "--audit", str(audit)]) == 0
        assert "annotated: 1" in capsys.readouterr().out
        rows = [json.loads(line) for line in out.read_text().splitlines()
                if "_meta" not in line]
        assert rows[0]["purposes"] == ["explore_variable"]
        assert audit.exists()

    def test_backend_flag_without_env_is_validation_error(self, log_file,
                                                          tmp_path,
                                                          monkeypatch):
        monkeypatch.delenv("NOTEFLOW_BACKEND_URL", raising=False)
        monkeypatch.delenv("NOTEFLOW_BACKEND_TOKEN", raising=False)
        transitions = tmp_path / "transitions.jsonl"
        main(["transitions", str(log_file), "--out", str(transitions)])
        assert main(["annotate", str(transitions),
                     "--out", str(tmp_path / "a.jsonl"), "--backend"]) == 2


class TestReport:
    def test_full_chain_to_report(self, log_file, tmp_path):
        transitions = tmp_path / "transitions.jsonl"
        annotations = tmp_path / "annotations.jsonl"
        main(["transitions", str(log_file), "--out", str(transitions)])
        main(["annotate", str(transitions), "--out", str(annotations)])
        out = tmp_path / "report"
        assert main(["report", str(annotations), "--log", str(log_file),
                     "--transitions", str(transitions),
                     "--out", str(out)]) == 0
        report = json.loads((out / "report.json").read_text())
        assert report["transitions"]["n"] == 1
        for name in ("self_matrix.csv", "inter_matrix.csv", "quantiles.csv",
                     "time_stats.csv", "object_series.csv"):
            assert (out / name).exists()


class TestReplay:
    def test_replay_prints_every_step_and_final_state(self, log_file, capsys):
        assert main(["replay", str(log_file), "--notebook", "nb"]) == 0
        out = capsys.readouterr().out
        assert "[0] notebook_launch" in out
        assert "[1] create_cell cell=c1" in out
        final = json.loads(out[out.index("{"):])
        assert final["events_applied"] == 6
        assert [c["cell_id"] for c in final["cells"]] == ["c1", "c2"]

    def test_replay_at_position(self, log_file, capsys):
        assert main(["replay", str(log_file), "--notebook", "nb",
                     "--at", "2"]) == 0
        snapshot = json.loads(capsys.readouterr().out)
        assert snapshot["events_applied"] == 2
        assert len(snapshot["cells"]) == 1

    def test_unknown_notebook_is_validation_error(self, log_file, capsys):
        assert main(["replay", str(log_file), "--notebook", "nope"]) == 2
        assert "no records" in capsys.readouterr().err

    def test_interactive_session(self, log_file, tmp_path, monkeypatch,
                                 capsys):
        export_path = tmp_path / "state.ipynb"
        commands = iter(["next", "next", "goto 0", "goto 99",
                         f"export {export_path}", "quit"])
        monkeypatch.setattr("builtins.input", lambda prompt="": next(commands))
        assert main(["replay", str(log_file), "--notebook", "nb",
                     "--interactive"]) == 0
        out = capsys.readouterr().out
        assert "6 steps" in out
        assert "error:" in out          # goto 99 is out of range
        assert export_path.exists()
        json.loads(export_path.read_text())


class TestExport:
    def test_round_trip_through_store(self, events_file, tmp_path, capsys):
        store_path = tmp_path / "store.jsonl"
        with EventStore(store_path) as store:
            for line in events_file.read_text().splitlines():
                store.accept(parse_event(line))
        assert main(["export", "--store", str(store_path)]) == 0
        lines = capsys.readouterr().out.strip().splitlines()
        assert len(lines) == 6
        assert parse_event(lines[0]).kind == "notebook_launch"

    def test_filtered_export_to_file(self, events_file, tmp_path):
        store_path = tmp_path / "store.jsonl"
        with EventStore(store_path) as store:
            for line in events_file.read_text().splitlines():
                store.accept(parse_event(line))
        out = tmp_path / "filtered.jsonl"
        assert main(["export", "--store", str(store_path),
                     "--from", "2000", "--to", "3000",
                     "--out", str(out)]) == 0
        kinds = [parse_event(line).kind
                 for line in out.read_text().splitlines()]
        assert kinds == ["execute_cell", "finish_execute"]


class TestRun:
    def test_pipeline_run(self, events_file, tmp_path, capsys):
        out = tmp_path / "artifacts"
        assert main(["run", str(events_file), "--out-dir", str(out)]) == 0
        assert "artifacts written" in capsys.readouterr().out
        assert (out / "report.json").exists()

    def test_stage_failure_is_exit_three(self, events_file, tmp_path,
                                         monkeypatch):
        def explode(records):
            raise RuntimeError("synthetic failure")
        monkeypatch.setattr(pipeline_module, "extract_transitions", explode)
        assert main(["run", str(events_file),
                     "--out-dir", str(tmp_path / "out")]) == 3
