"""Command-line entry point.

One subcommand per pipeline stage plus the all-in-one ``run``:

    serve        start the ingest HTTP service on an event store
    export       filter the store to an events JSONL file
    normalize    events file → log table (+ rejects)
    snapshots    log table → per-action snapshot tables (+ .ipynb export)
    transitions  log table → transition sequence
    annotate     transitions → purposes and step labels
    report       annotated transitions + log → analysis tables
    replay       step through one notebook's reconstruction
    run          events file → complete artifact directory

Exit codes: 0 on success, 2 for validation problems (bad input data or
configuration), 3 when a pipeline stage fails mid-flight.
"""

from __future__ import annotations

import argparse
import json
import os
import sys
from pathlib import Path

from .events import ParseError, SchemaError
from .pipeline import (
    BACKEND_TOKEN_ENV,
    BACKEND_URL_ENV,
    ConfigError,
    PipelineConfig,
    StageError,
    read_events_file,
    run_pipeline,
)

EXIT_OK = 0
EXIT_VALIDATION = 2
EXIT_STAGE = 3


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="noteflow",
        description="Capture, reconstruct, and analyze notebook evolution logs.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("serve", help="start the ingest HTTP service")
    p.add_argument("--store", required=True, help="event store path (JSONL, appended)")
    p.add_argument("--host", default="127.0.0.1")
    p.add_argument("--port", type=int, default=8000)

    p = sub.add_parser("export", help="export stored events as JSONL")
    p.add_argument("--store", required=True)
    p.add_argument("--session", default=None)
    p.add_argument("--user", default=None)
    p.add_argument("--notebook", default=None)
    p.add_argument("--from", dest="ts_from", type=int, default=None,
                   help="inclusive lower timestamp bound (ms)")
    p.add_argument("--to", dest="ts_to", type=int, default=None,
                   help="inclusive upper timestamp bound (ms)")
    p.add_argument("--out", default="-", help="output file ('-' for stdout)")

    p = sub.add_parser("normalize", help="build the chronological log table")
    p.add_argument("events", help="raw events JSONL file")
    p.add_argument("--out-dir", required=True)

    p = sub.add_parser("snapshots", help="replay the log into per-action snapshot tables")
    p.add_argument("log", help="log table JSONL file")
    p.add_argument("--out", required=True, help="output directory")
    p.add_argument("--ipynb", action="store_true",
                   help="also write one .ipynb file per replay step")

    p = sub.add_parser("transitions", help="derive the transition sequence")
    p.add_argument("log", help="log table JSONL file")
    p.add_argument("--out", required=True, help="transitions JSONL output")

    p = sub.add_parser("annotate", help="label transitions and cells")
    p.add_argument("transitions", help="transitions JSONL file")
    p.add_argument("--out", required=True, help="annotations JSONL output")
    p.add_argument("--audit", default=None, help="backend audit JSONL output")
    p.add_argument("--backend", action="store_true",
                   help=f"use the external backend ({BACKEND_URL_ENV} / {BACKEND_TOKEN_ENV})")
    p.add_argument("--model", default="gpt-4o")

    p = sub.add_parser("report", help="compute the analysis tables")
    p.add_argument("annotations", help="annotations JSONL file")
    p.add_argument("--log", required=True, help="log table JSONL file")
    p.add_argument("--transitions", required=True, help="transitions JSONL file")
    p.add_argument("--out", required=True, help="output directory")

    p = sub.add_parser("replay", help="step through one notebook's history")
    p.add_argument("log", help="log table JSONL file")
    p.add_argument("--notebook", required=True)
    p.add_argument("--user", default=None,
                   help="narrow to one user when several share the notebook name")
    p.add_argument("--at", type=int, default=None,
                   help="print the snapshot after this many records (default: all steps)")
    p.add_argument("--interactive", action="store_true",
                   help="navigate with next/prev/goto/export commands on stdin")

    p = sub.add_parser("run", help="run the whole pipeline")
    p.add_argument("events", help="raw events JSONL file")
    p.add_argument("--out-dir", required=True)
    p.add_argument("--backend", action="store_true")
    p.add_argument("--model", default="gpt-4o")
    p.add_argument("--ipynb", action="store_true")
    p.add_argument("--exclude-zero-distance", action="store_true",
                   help="report mean change size over nonzero distances only")
    return parser


def _cmd_serve(args) -> int:
    import uvicorn

    from .server import make_app
    from .store import EventStore

    app = make_app(EventStore(args.store))
    uvicorn.run(app, host=args.host, port=args.port, log_level="info")
    return EXIT_OK


def _cmd_export(args) -> int:
    from .events import serialize_event
    from .store import EventStore

    with EventStore(args.store) as store:
        lines = [
            serialize_event(event)
            for event in store.export(session=args.session, user=args.user,
                                      notebook=args.notebook,
                                      ts_from=args.ts_from, ts_to=args.ts_to)
        ]
    text = "\n".join(lines) + ("\n" if lines else "")
    if args.out == "-":
        sys.stdout.write(text)
    else:
        Path(args.out).write_text(text, encoding="utf-8")
    return EXIT_OK


def _cmd_normalize(args) -> int:
    from .normalize import normalize, write_log_csv, write_log_jsonl, write_rejects

    events = read_events_file(args.events)
    result = normalize(events)
    out = Path(args.out_dir)
    out.mkdir(parents=True, exist_ok=True)
    write_log_jsonl(out / "log.jsonl", result.records)
    write_log_csv(out / "log.csv", result.records)
    write_rejects(out / "rejects.jsonl", result.rejects)
    counts = result.counts()
    print(f"log records: {counts['output']}  rejects: {counts['rejects']}  "
          f"synthesized: {counts['synthesized']}")
    return EXIT_OK


def _safe_name(user_id: str, notebook_name: str) -> str:
    return f"{user_id}__{notebook_name}".replace("/", "_").replace(" ", "_")


def _cmd_snapshots(args) -> int:
    from .normalize import read_log_jsonl
    from .snapshots import (
        build_snapshots,
        write_ipynb,
        write_snapshot_series_csv,
        write_snapshot_series_jsonl,
    )

    records = read_log_jsonl(args.log)
    streams = sorted({(r.event.user_id, r.event.notebook_name) for r in records})
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    all_rows = []
    for user_id, notebook_name in streams:
        series = build_snapshots(records, notebook_name, user_id=user_id)
        all_rows.extend(series)
        if args.ipynb:
            safe = _safe_name(user_id, notebook_name)
            for snapshot in series:
                write_ipynb(out / f"{safe}__{snapshot.after_seq_no:06d}.ipynb", snapshot)
    write_snapshot_series_jsonl(out / "snapshots.jsonl", all_rows)
    write_snapshot_series_csv(out / "snapshots.csv", all_rows)
    print(f"snapshot rows: {len(all_rows)}  streams: {len(streams)}")
    return EXIT_OK


def _cmd_transitions(args) -> int:
    from .normalize import read_log_jsonl
    from .transitions import extract_transitions, write_transitions

    records = read_log_jsonl(args.log)
    transitions = extract_transitions(records)
    write_transitions(args.out, transitions)
    n_self = sum(1 for t in transitions if t.kind == "self")
    print(f"transitions: {len(transitions)}  self: {n_self}  "
          f"inter: {len(transitions) - n_self}")
    return EXIT_OK


def _cmd_annotate(args) -> int:
    from .annotate import HttpAnnotationClient, annotate_transitions, write_annotations, write_audit
    from .transitions import read_transitions

    client = None
    if args.backend:
        url = os.environ.get(BACKEND_URL_ENV)
        token = os.environ.get(BACKEND_TOKEN_ENV)
        if not url:
            raise ConfigError(f"--backend requires {BACKEND_URL_ENV}")
        if not token:
            raise ConfigError(f"--backend requires {BACKEND_TOKEN_ENV}")
        client = HttpAnnotationClient(url, token, model=args.model)

    transitions = read_transitions(args.transitions)
    result = annotate_transitions(transitions, client=client)
    write_annotations(args.out, result.annotations)
    if args.audit:
        write_audit(args.audit, result.audit)
    print(f"annotated: {len(result.annotations)}  "
          f"backend: {result.audit['n_backend']}  fallback: {result.audit['n_fallback']}")
    return EXIT_OK


def _cmd_report(args) -> int:
    from .analytics import (
        build_report,
        execution_steps,
        inter_matrix,
        object_series,
        quantile_profile,
        self_matrix,
        time_stats,
        write_matrix_csv,
        write_object_series_csv,
        write_quantiles_csv,
        write_time_stats_csv,
    )
    from .annotate import read_annotations
    from .normalize import read_log_jsonl
    from .transitions import chain_stats, read_transitions

    records = read_log_jsonl(args.log)
    transitions = read_transitions(args.transitions)
    annotations = read_annotations(args.annotations, transitions)
    chains = chain_stats(transitions)
    report = build_report(records, annotations, chains)

    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    (out / "report.json").write_text(
        json.dumps(report, indent=2, sort_keys=True, ensure_ascii=False) + "\n",
        encoding="utf-8")
    write_matrix_csv(out / "self_matrix.csv", self_matrix(annotations))
    write_matrix_csv(out / "inter_matrix.csv", inter_matrix(annotations))
    steps = execution_steps(records)
    write_quantiles_csv(out / "quantiles.csv", quantile_profile(records, steps))
    write_time_stats_csv(out / "time_stats.csv", time_stats(records))
    write_object_series_csv(out / "object_series.csv", object_series(records))
    print(f"report written to {out}")
    return EXIT_OK


def _interactive_replay(records, notebook_name: str, user_id: str | None) -> int:
    from .snapshots import build_snapshots, step

    series = build_snapshots(records, notebook_name, user_id=user_id)
    cursor = 0
    print(f"{len(series)} steps; commands: next, prev, goto <k>, export <file>, quit")
    while True:
        try:
            line = input("replay> ").strip()
        except EOFError:
            return EXIT_OK
        if not line:
            continue
        if line in ("quit", "q", "exit"):
            return EXIT_OK
        try:
            if line.startswith("export"):
                parts = line.split(None, 1)
                _, doc = step(series, cursor, "export")
                target = parts[1] if len(parts) > 1 else f"snapshot_{cursor}.ipynb"
                Path(target).write_text(
                    json.dumps(doc, indent=1, ensure_ascii=False) + "\n",
                    encoding="utf-8")
                print(f"wrote {target}")
            else:
                cursor, payload = step(series, cursor, line)
                print(payload)
        except ValueError as exc:
            print(f"error: {exc}")


def _cmd_replay(args) -> int:
    from .normalize import read_log_jsonl
    from .snapshots import ReplaySession

    records = read_log_jsonl(args.log)
    session = ReplaySession(records, notebook_name=args.notebook, user_id=args.user)
    if not session.records:
        print("no records for that notebook", file=sys.stderr)
        return EXIT_VALIDATION
    if args.interactive:
        return _interactive_replay(records, args.notebook, args.user)
    if args.at is not None:
        snapshot = session.seek(args.at)
        print(json.dumps(snapshot.to_dict(), indent=2, ensure_ascii=False))
        return EXIT_OK
    for record, snapshot in session:
        event = record.event
        cell = f" cell={event.cell_id}" if event.cell_id is not None else ""
        print(f"[{record.seq_no}] {event.kind}{cell} -> "
              f"{len(snapshot.cells)} cells")
    print(json.dumps(session.snapshot.to_dict(), indent=2, ensure_ascii=False))
    return EXIT_OK


def _cmd_run(args) -> int:
    config = PipelineConfig.from_env(
        events_path=args.events,
        out_dir=args.out_dir,
        backend_enabled=args.backend,
        backend_model=args.model,
        include_zero_distance=not args.exclude_zero_distance,
        export_ipynb=args.ipynb,
    )
    out = run_pipeline(config)
    print(f"artifacts written to {out}")
    return EXIT_OK


_COMMANDS = {
    "serve": _cmd_serve,
    "export": _cmd_export,
    "normalize": _cmd_normalize,
    "snapshots": _cmd_snapshots,
    "transitions": _cmd_transitions,
    "annotate": _cmd_annotate,
    "report": _cmd_report,
    "replay": _cmd_replay,
    "run": _cmd_run,
}


def main(argv: list[str] | None = None) -> int:
    parser = _build_parser()
    args = parser.parse_args(argv)
    try:
        return _COMMANDS[args.command](args)
    except (ParseError, SchemaError, ConfigError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_VALIDATION
    except StageError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_STAGE
    except FileNotFoundError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_VALIDATION
    except json.JSONDecodeError as exc:
        print(f"error: malformed JSON input: {exc}", file=sys.stderr)
        return EXIT_VALIDATION
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_STAGE


if __name__ == "__main__":
    sys.exit(main())
