"""End-to-end batch pipeline: raw events file → full artifact directory.

The pipeline is a fixed sequence of pure stages (normalize → snapshots →
transitions → annotate → report) that communicate only through declared
file artifacts.  Given the same input file and the same semantic
configuration, two runs produce byte-identical artifacts; every artifact
embeds the configuration hash so mixed-config directories are detectable.
"""

from __future__ import annotations

import hashlib
import json
import os
from dataclasses import dataclass, field
from pathlib import Path

from . import __version__
from .analytics import (
    build_report,
    inter_matrix,
    self_matrix,
    time_stats,
    quantile_profile,
    execution_steps,
    object_series,
    write_matrix_csv,
    write_object_series_csv,
    write_quantiles_csv,
    write_time_stats_csv,
    _write_csv,
)
from .annotate import HttpAnnotationClient, annotate_transitions, write_annotations, write_audit
from .events import parse_event
from .normalize import normalize, write_log_csv, write_log_jsonl, write_rejects
from .snapshots import build_all_snapshots, write_snapshots_jsonl
from .transitions import chain_stats, extract_transitions, write_transitions

BACKEND_URL_ENV = "NOTEFLOW_BACKEND_URL"
BACKEND_TOKEN_ENV = "NOTEFLOW_BACKEND_TOKEN"


class ConfigError(ValueError):
    """Invalid pipeline configuration; nothing has been run."""


class StageError(RuntimeError):
    """A pipeline stage failed; partial outputs are quarantined."""

    def __init__(self, stage: str, cause: BaseException):
        self.stage = stage
        self.cause = cause
        super().__init__(f"stage {stage!r} failed: {cause}")


@dataclass
class PipelineConfig:
    """Everything a pipeline run depends on.

    Only the semantic knobs feed the config hash — paths deliberately do
    not, so the same analysis written to two directories is recognized
    as the same analysis.
    """

    events_path: str = ""
    out_dir: str = ""
    backend_enabled: bool = False
    backend_url: str | None = None
    backend_token: str | None = None
    backend_model: str = "gpt-4o"
    include_zero_distance: bool = True
    grouping: tuple[str, ...] = ("task", "expertise")
    seed: int = 0
    export_ipynb: bool = False

    @classmethod
    def from_env(cls, **overrides) -> "PipelineConfig":
        config = cls(**overrides)
        if config.backend_url is None:
            config.backend_url = os.environ.get(BACKEND_URL_ENV)
        if config.backend_token is None:
            config.backend_token = os.environ.get(BACKEND_TOKEN_ENV)
        return config

    def semantic_dict(self) -> dict:
        return {
            "version": __version__,
            "backend_enabled": self.backend_enabled,
            "backend_model": self.backend_model if self.backend_enabled else None,
            "include_zero_distance": self.include_zero_distance,
            "grouping": list(self.grouping),
            "seed": self.seed,
        }

    def config_hash(self) -> str:
        canonical = json.dumps(self.semantic_dict(), sort_keys=True,
                               separators=(",", ":"), ensure_ascii=False)
        return hashlib.sha256(canonical.encode("utf-8")).hexdigest()[:16]

    def validate(self) -> None:
        if not self.events_path:
            raise ConfigError("events_path is required")
        if not self.out_dir:
            raise ConfigError("out_dir is required")
        if self.backend_enabled:
            if not self.backend_url:
                raise ConfigError(
                    f"backend annotation enabled but no URL (set {BACKEND_URL_ENV})")
            if not self.backend_token:
                raise ConfigError(
                    f"backend annotation enabled but no token (set {BACKEND_TOKEN_ENV})")


def read_events_file(path: str | Path) -> list:
    events = []
    with open(path, "r", encoding="utf-8") as fh:
        for line in fh:
            if not line.strip():
                continue
            doc = json.loads(line)
            if isinstance(doc, dict) and set(doc) == {"_meta"}:
                continue
            events.append(parse_event(line))
    return events


def _quarantine_partials(out_dir: Path) -> None:
    for tmp in out_dir.glob("*.tmp"):
        tmp.replace(tmp.with_suffix(tmp.suffix + ".quarantine"))


def run_pipeline(config: PipelineConfig) -> Path:
    """Run every stage; returns the artifact directory.

    Any stage failure raises StageError naming the stage; whatever that
    stage had partially written is left as ``*.quarantine`` files, never
    under a final artifact name.
    """
    config.validate()
    out_dir = Path(config.out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    h = config.config_hash()
    meta = {"config_hash": h}
    comment = f"config_hash={h}"

    def _artifact(name: str, writer) -> Path:
        final = out_dir / name
        tmp = out_dir / (name + ".tmp")
        writer(tmp)
        tmp.replace(final)
        return final

    stage = "read-events"
    try:
        events = read_events_file(config.events_path)

        stage = "normalize"
        result = normalize(events)
        records = result.records
        _artifact("log.jsonl", lambda p: write_log_jsonl(p, records, meta=meta))
        _artifact("log.csv", lambda p: write_log_csv(p, records, meta_comment=comment))
        _artifact("rejects.jsonl", lambda p: write_rejects(p, result.rejects, meta=meta))

        stage = "snapshots"
        snapshots = build_all_snapshots(records)
        _artifact("snapshots.jsonl", lambda p: write_snapshots_jsonl(p, snapshots, meta=meta))
        if config.export_ipynb:
            from .snapshots import write_ipynb
            nb_dir = out_dir / "notebooks"
            nb_dir.mkdir(exist_ok=True)
            for (user_id, notebook_name), snapshot in sorted(snapshots.items()):
                safe = f"{user_id}__{notebook_name}".replace("/", "_").replace(" ", "_")
                write_ipynb(nb_dir / f"{safe}.ipynb", snapshot)

        stage = "transitions"
        transitions = extract_transitions(records)
        _artifact("transitions.jsonl", lambda p: write_transitions(p, transitions, meta=meta))

        stage = "annotate"
        client = None
        if config.backend_enabled:
            client = HttpAnnotationClient(config.backend_url, config.backend_token,
                                          model=config.backend_model)
        annotation = annotate_transitions(transitions, client=client)
        _artifact("annotations.jsonl",
                  lambda p: write_annotations(p, annotation.annotations, meta=meta))
        _artifact("backend_audit.jsonl",
                  lambda p: write_audit(p, annotation.audit, meta=meta))

        stage = "report"
        chains = chain_stats(transitions)
        report = build_report(records, annotation.annotations, chains,
                              rejects_count=len(result.rejects), config_hash=h)
        report["config"] = config.semantic_dict()
        report["chains"]["mean_change_size_reported"] = (
            report["chains"]["mean_change_size"] if config.include_zero_distance
            else report["chains"]["mean_change_size_nonzero"])
        report["annotation_audit"] = {
            k: v for k, v in annotation.audit.items() if k != "responses"
        }
        _artifact("report.json", lambda p: p.write_text(
            json.dumps(report, indent=2, sort_keys=True, ensure_ascii=False) + "\n",
            encoding="utf-8"))

        _artifact("self_matrix.csv",
                  lambda p: write_matrix_csv(p, self_matrix(annotation.annotations), comment))
        _artifact("inter_matrix.csv",
                  lambda p: write_matrix_csv(p, inter_matrix(annotation.annotations), comment))
        steps = execution_steps(records)
        _artifact("quantiles.csv",
                  lambda p: write_quantiles_csv(p, quantile_profile(records, steps), comment))
        _artifact("time_stats.csv",
                  lambda p: write_time_stats_csv(p, time_stats(records, config.grouping), comment))
        _artifact("object_series.csv",
                  lambda p: write_object_series_csv(p, object_series(records), comment))

        def _chains_rows(path):
            rows = [["user_id", "notebook_name", "cell_id", "length", "distances"]]
            for chain in chains.chains:
                rows.append([chain.user_id, chain.notebook_name, chain.cell_id,
                             chain.length, json.dumps(chain.distances)])
            _write_csv(path, rows, comment)
        _artifact("chains.csv", _chains_rows)

        def _distance_rows(path):
            rows = [["record", "position", "distance", "n"]]
            for position, distance in chains.pairs:
                rows.append(["pair", position, distance, 1])
            for position, mean, n in chains.position_means:
                rows.append(["position_mean", position, mean, n])
            _write_csv(path, rows, comment)
        _artifact("edit_distance.csv", _distance_rows)

        def _output_kind_rows(path):
            from .transitions import output_kind_counts, output_kind_distribution
            counts = output_kind_counts(transitions)
            shares = output_kind_distribution(transitions)
            rows = [["output_kind", "count", "proportion"]]
            for kind in sorted(counts):
                rows.append([kind, counts[kind], shares[kind]])
            _write_csv(path, rows, comment)
        _artifact("output_kinds.csv", _output_kind_rows)
    except ConfigError:
        raise
    except Exception as exc:
        _quarantine_partials(out_dir)
        raise StageError(stage, exc) from exc

    return out_dir
