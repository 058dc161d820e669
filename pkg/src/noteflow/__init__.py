"""Telemetry pipeline for how computational notebooks evolve.

Capture events from a notebook frontend, ingest them over HTTP into an
append-only store, normalize them into a chronological log table,
replay the log into notebook snapshots, derive execution transitions
and re-execution chains, label changes and cells, and aggregate the
workflow analytics — all deterministic and file-driven.
"""

__version__ = "0.1.0"

from .events import (  # noqa: F401
    EVENT_KINDS,
    Output,
    ParseError,
    RawEvent,
    SchemaError,
    event_from_dict,
    parse_event,
    serialize_event,
)
from .normalize import LogRecord, NormalizeResult, normalize, repair_rules  # noqa: F401
from .snapshots import (  # noqa: F401
    CellState,
    NotebookSnapshot,
    ReplaySession,
    SnapshotError,
    apply,
    build_all_snapshots,
    build_snapshots,
    export_ipynb,
    final_snapshot,
    snapshot_from_ipynb,
    step,
)
from .transitions import (  # noqa: F401
    ChainStats,
    Transition,
    chain_stats,
    extract_transitions,
    normalized_edit_distance,
    output_kind_distribution,
)
from .annotate import (  # noqa: F401
    DS_STEPS,
    PURPOSE_LABELS,
    AnnotatedTransition,
    CellFeatures,
    annotate_transitions,
    backend_purposes,
    ds_step,
    extract_features,
    rule_purposes,
)
from .analytics import (  # noqa: F401
    ObjectCountSeries,
    QuantileProfile,
    TimeStats,
    TransitionMatrix,
    build_report,
    count_bindings,
    inter_matrix,
    object_series,
    quantile_profile,
    self_matrix,
    time_stats,
)
from .pipeline import PipelineConfig, run_pipeline  # noqa: F401
from .store import EventStore  # noqa: F401
