export {
  EVENT_KINDS,
  KIND_FIELDS,
  assertValidEvent,
  parseEventLine,
  serializeEvent,
  validateEvent,
} from "./events.js";
export type { CapturedEvent, EventKind, Output } from "./events.js";

export { FileBuffer, MemoryBuffer } from "./buffer.js";
export type { EventBuffer } from "./buffer.js";

export { IngestClient, TransportError, flushBuffer } from "./client.js";
export type { Ack, FetchLike, FlushOptions } from "./client.js";

export type { CaptureConfig } from "./config.js";

export { hookNotebook, startCapture } from "./capture.js";
export type {
  Capture,
  CaptureHandle,
  HookOptions,
  NotebookSession,
  SessionAction,
} from "./capture.js";
