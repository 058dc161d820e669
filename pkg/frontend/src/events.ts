/**
 * Wire-format event model for the capture extension.
 *
 * This mirrors the ingest service's JSON contract: every event carries the
 * session/identity base fields, and each kind mandates a specific set of
 * cell-level fields — nothing more, nothing less.  Validation here is the
 * client-side half of that contract, so malformed events never reach the
 * local buffer, let alone the network.
 */

export const EVENT_KINDS = [
  "notebook_launch",
  "notebook_interrupt",
  "notebook_restart",
  "create_cell",
  "delete_cell",
  "execute_cell",
  "finish_execute",
  "error_event",
  "render_markdown",
  "change_cell_type",
] as const;

export type EventKind = (typeof EVENT_KINDS)[number];

/** One recorded cell output: a concrete type plus opaque payload text. */
export interface Output {
  output_type: string;
  payload: string;
}

export interface CapturedEvent {
  kind: EventKind;
  session_id: string;
  kernel_id: string;
  notebook_name: string;
  user_id: string;
  /** Milliseconds since epoch, assigned at capture time. Never negative. */
  timestamp: number;
  /** Client-assigned per-session counter; strictly increasing within a session. */
  seq: number;
  cell_id?: string;
  cell_ordinal?: number;
  source?: string;
  outputs?: Output[];
  new_cell_type?: string;
  extras?: Record<string, unknown>;
}

type CellField = "cell_id" | "cell_ordinal" | "source" | "outputs" | "new_cell_type";

/** Cell-level fields each kind must carry; all others must be absent. */
export const KIND_FIELDS: Record<EventKind, readonly CellField[]> = {
  notebook_launch: [],
  notebook_interrupt: [],
  notebook_restart: [],
  create_cell: ["cell_id", "cell_ordinal", "source"],
  delete_cell: ["cell_id", "cell_ordinal"],
  execute_cell: ["cell_id", "cell_ordinal", "source"],
  finish_execute: ["cell_id", "cell_ordinal", "outputs"],
  error_event: ["cell_id", "cell_ordinal", "outputs"],
  render_markdown: ["cell_id", "cell_ordinal", "source"],
  change_cell_type: ["cell_id", "cell_ordinal", "new_cell_type", "source"],
};

const ALL_CELL_FIELDS: readonly CellField[] = [
  "cell_id",
  "cell_ordinal",
  "source",
  "outputs",
  "new_cell_type",
];

/** Problems that make an event unfit to buffer or send; empty means valid. */
export function validateEvent(event: CapturedEvent): string[] {
  const problems: string[] = [];
  if (!EVENT_KINDS.includes(event.kind)) {
    problems.push(`unknown kind ${JSON.stringify(event.kind)}`);
    return problems;
  }
  for (const name of ["session_id", "kernel_id", "notebook_name", "user_id"] as const) {
    if (typeof event[name] !== "string" || event[name] === "") {
      problems.push(`missing ${name}`);
    }
  }
  if (!Number.isInteger(event.timestamp) || event.timestamp < 0) {
    problems.push("timestamp must be a non-negative integer");
  }
  if (!Number.isInteger(event.seq) || event.seq < 0) {
    problems.push("seq must be a non-negative integer");
  }
  const mandated = KIND_FIELDS[event.kind];
  for (const field of ALL_CELL_FIELDS) {
    const value = event[field];
    if (mandated.includes(field)) {
      if (value === undefined || value === null) {
        problems.push(`missing ${field} for kind ${event.kind}`);
      }
    } else if (value !== undefined) {
      problems.push(`field ${field} not allowed for kind ${event.kind}`);
    }
  }
  if (mandated.includes("cell_ordinal") && typeof event.cell_ordinal === "number") {
    if (!Number.isInteger(event.cell_ordinal) || event.cell_ordinal < 0) {
      problems.push("cell_ordinal must be a non-negative integer");
    }
  }
  if (mandated.includes("outputs") && Array.isArray(event.outputs)) {
    for (const output of event.outputs) {
      if (typeof output.output_type !== "string" || typeof output.payload !== "string") {
        problems.push("each output needs string output_type and payload");
        break;
      }
    }
  }
  return problems;
}

/** Throwing form of {@link validateEvent}. */
export function assertValidEvent(event: CapturedEvent): void {
  const problems = validateEvent(event);
  if (problems.length > 0) {
    throw new Error(`invalid ${event.kind} event: ${problems.join("; ")}`);
  }
}

/** One JSON line, stable key order, suitable for the buffer and the wire. */
export function serializeEvent(event: CapturedEvent): string {
  const doc: Record<string, unknown> = {
    kind: event.kind,
    session_id: event.session_id,
    kernel_id: event.kernel_id,
    notebook_name: event.notebook_name,
    timestamp: event.timestamp,
    seq: event.seq,
    user_id: event.user_id,
  };
  for (const field of ALL_CELL_FIELDS) {
    if (event[field] !== undefined) {
      doc[field] = event[field];
    }
  }
  if (event.extras !== undefined && Object.keys(event.extras).length > 0) {
    doc.extras = event.extras;
  }
  return JSON.stringify(doc);
}

export function parseEventLine(line: string): CapturedEvent {
  const doc = JSON.parse(line) as CapturedEvent;
  assertValidEvent(doc);
  return doc;
}
