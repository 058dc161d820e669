"""One synthetic editing session, end to end.

A user opens a notebook, loads a dataframe, peeks at it, hits an error,
fixes it, and makes a plot.  This script feeds that story through every
stage of the library — normalize, snapshot, transitions, annotation,
report — and prints what each stage sees.

Run:  python3 demos/editing_session.py
"""

from noteflow import (
    annotate_transitions,
    build_report,
    chain_stats,
    event_from_dict,
    extract_transitions,
    final_snapshot,
    normalize,
)
from noteflow.snapshots import summarize

SESSION = "demo-session"
USER = "ada"
NOTEBOOK = "churn.ipynb"


def ev(seq: int, ts: int, kind: str, **fields) -> dict:
    return {
        "session_id": SESSION,
        "kernel_id": "k-1",
        "user_id": USER,
        "notebook_name": NOTEBOOK,
        "seq": seq,
        "timestamp": ts,
        "kind": kind,
        **fields,
    }


RAW = [
    ev(1, 1_000, "notebook_launch"),
    ev(2, 2_000, "create_cell", cell_id="c-load", cell_ordinal=0, source=""),
    ev(3, 3_000, "execute_cell", cell_id="c-load", cell_ordinal=0,
       source="import pandas as pd\ndf = pd.read_csv('churn.csv')"),
    ev(4, 3_400, "finish_execute", cell_id="c-load", cell_ordinal=0, outputs=[]),
    ev(5, 4_000, "create_cell", cell_id="c-peek", cell_ordinal=1, source=""),
    ev(6, 5_000, "execute_cell", cell_id="c-peek", cell_ordinal=1,
       source="df.head()"),
    ev(7, 5_200, "finish_execute", cell_id="c-peek", cell_ordinal=1,
       outputs=[{"output_type": "execute_result", "payload": "   id  churned\n0   1        0"}]),
    # Re-execute the same cell with a typo -> error -> fix.  This is the
    # loop the transition analyzer exists for.
    ev(8, 6_000, "execute_cell", cell_id="c-peek", cell_ordinal=1,
       source="df.grupby('churned').size()"),
    ev(9, 6_100, "error_event", cell_id="c-peek", cell_ordinal=1,
       outputs=[{"output_type": "error", "payload": "AttributeError: grupby"}]),
    ev(10, 7_000, "execute_cell", cell_id="c-peek", cell_ordinal=1,
       source="df.groupby('churned').size()"),
    ev(11, 7_300, "finish_execute", cell_id="c-peek", cell_ordinal=1,
       outputs=[{"output_type": "execute_result", "payload": "count  5000.0"}]),
    ev(12, 8_000, "create_cell", cell_id="c-plot", cell_ordinal=2, source=""),
    ev(13, 9_000, "execute_cell", cell_id="c-plot", cell_ordinal=2,
       source="df['churned'].plot.hist()"),
    ev(14, 9_800, "finish_execute", cell_id="c-plot", cell_ordinal=2,
       outputs=[{"output_type": "display_data", "payload": "<Figure>"}]),
]


def main() -> None:
    events = [event_from_dict(e) for e in RAW]

    result = normalize(events)
    print(f"normalize: {result.counts()}")

    snapshot = final_snapshot(result.records, NOTEBOOK, user_id=USER)
    print(f"final state:\n{summarize(snapshot)}")

    transitions = extract_transitions(result.records)
    print(f"\ntransitions: {len(transitions)}")
    for t in transitions:
        print(f"  {t.kind:5s} {t.from_cell_id} -> {t.to_cell_id}  "
              f"distance={t.distance:.3f}  after={t.from_output_kind}")

    annotated = annotate_transitions(transitions)
    print("\npurposes (rule-based):")
    for a in annotated.annotations:
        print(f"  {a.transition.from_cell_id} -> {a.transition.to_cell_id}: "
              f"{sorted(a.purposes)}  step={a.to_step}")

    stats = chain_stats(transitions)
    report = build_report(result.records, annotated.annotations, stats)
    print(f"\nreport: {report['events']['executions']} executions, "
          f"{report['chains']['n_chains']} re-execution chain(s), "
          f"self share {report['transitions']['self_fraction']:.2f}")


if __name__ == "__main__":
    main()
