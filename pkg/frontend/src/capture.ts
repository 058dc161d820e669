/**
 * Notebook lifecycle hook: turns user actions into wire events.
 *
 * The extension subscribes to a live notebook session, stamps each action
 * with identity, a capture-time timestamp, and a per-session monotonically
 * increasing counter, and appends the result to the local buffer.  It only
 * ever observes the session — notebook content is never mutated.
 *
 * Failures inside the hook (a malformed action, a buffer write error)
 * disable the extension and surface a non-blocking notice; they never
 * propagate into the notebook's own handlers.
 */

import { CapturedEvent, Output, assertValidEvent } from "./events.js";
import { EventBuffer, FileBuffer } from "./buffer.js";
import { CaptureConfig } from "./config.js";
import { IngestClient, flushBuffer } from "./client.js";

/** One user action as the notebook frontend reports it. */
export type SessionAction =
  | { type: "notebook_launch" }
  | { type: "notebook_interrupt" }
  | { type: "notebook_restart" }
  | { type: "create_cell"; cellId: string; ordinal: number; source?: string }
  | { type: "delete_cell"; cellId: string; ordinal: number }
  | { type: "execute_cell"; cellId: string; ordinal: number; source: string }
  | { type: "finish_execute"; cellId: string; ordinal: number; outputs: Output[] }
  | { type: "error_event"; cellId: string; ordinal: number; outputs: Output[] }
  | { type: "render_markdown"; cellId: string; ordinal: number; source: string }
  | { type: "change_cell_type"; cellId: string; ordinal: number; newCellType: string; source: string };

/** The narrow surface the hook needs from a notebook session. */
export interface NotebookSession {
  readonly sessionId: string;
  readonly kernelId: string;
  readonly notebookName: string;
  readonly userId: string;
  /** Register a lifecycle listener; returns the unsubscribe function. */
  subscribe(listener: (action: SessionAction) => void): () => void;
}

export interface CaptureHandle {
  /** Stop observing the session. Idempotent. */
  dispose(): void;
  /** True once a hook failure has switched the extension off. */
  readonly disabled: boolean;
  /** Events captured into the buffer so far. */
  readonly captured: number;
}

export interface HookOptions {
  /** Clock override for tests; defaults to Date.now. */
  now?: () => number;
  /** Non-blocking notice channel (status bar, console). Never throws back. */
  notify?: (message: string) => void;
}

function eventFromAction(
  session: NotebookSession,
  action: SessionAction,
  seq: number,
  timestamp: number,
): CapturedEvent {
  const event: CapturedEvent = {
    kind: action.type,
    session_id: session.sessionId,
    kernel_id: session.kernelId,
    notebook_name: session.notebookName,
    user_id: session.userId,
    timestamp,
    seq,
  };
  if ("cellId" in action) {
    event.cell_id = action.cellId;
    event.cell_ordinal = action.ordinal;
  }
  if ("source" in action || action.type === "create_cell") {
    event.source = "source" in action && action.source !== undefined ? action.source : "";
  }
  if ("outputs" in action) {
    event.outputs = action.outputs;
  }
  if (action.type === "change_cell_type") {
    event.new_cell_type = action.newCellType;
  }
  return event;
}

/**
 * Observe a session and buffer one event per lifecycle action.
 *
 * All ten event kinds are emitted on their triggering actions, each
 * carrying the fields its kind mandates.  Consent is not required to
 * capture — only to deliver — so the buffer fills either way and the
 * flush path enforces the privacy gate.
 */
export function hookNotebook(
  session: NotebookSession,
  buffer: EventBuffer,
  options: HookOptions = {},
): CaptureHandle {
  const now = options.now ?? Date.now;
  const notify = options.notify ?? (() => undefined);
  let seq = 1;
  let captured = 0;
  let disabled = false;
  let unsubscribe: (() => void) | null = null;

  const disable = (reason: string) => {
    disabled = true;
    if (unsubscribe) {
      unsubscribe();
      unsubscribe = null;
    }
    try {
      notify(`capture disabled: ${reason}`);
    } catch {
      // The notice channel itself must never take the notebook down.
    }
  };

  const listener = (action: SessionAction) => {
    if (disabled) {
      return;
    }
    try {
      const event = eventFromAction(session, action, seq, now());
      assertValidEvent(event);
      buffer.append(event);
      seq += 1;
      captured += 1;
    } catch (error) {
      disable(error instanceof Error ? error.message : String(error));
    }
  };

  unsubscribe = session.subscribe(listener);

  return {
    dispose() {
      if (unsubscribe) {
        unsubscribe();
        unsubscribe = null;
      }
    },
    get disabled() {
      return disabled;
    },
    get captured() {
      return captured;
    },
  };
}

export interface Capture {
  readonly handle: CaptureHandle;
  readonly buffer: EventBuffer;
  /** Deliver pending events now (consent-gated); resolves to count sent. */
  flush(): Promise<number>;
  /** Stop the hook and the background flush timer. */
  stop(): Promise<void>;
}

/**
 * Wire a session to a file buffer and a periodic, consent-gated flush.
 *
 * The flush timer never blocks notebook handlers: it runs in the
 * background, skips entirely without consent, and failures simply leave
 * events buffered for the next tick.
 */
export function startCapture(
  session: NotebookSession,
  config: CaptureConfig,
  options: HookOptions = {},
): Capture {
  const buffer = new FileBuffer(config.buffer_key);
  const handle = hookNotebook(session, buffer, options);
  const client = new IngestClient(config.server_url);
  const notify = options.notify ?? (() => undefined);

  const flush = async () => {
    try {
      return await flushBuffer(buffer, config, client);
    } catch (error) {
      try {
        notify(`flush failed: ${error instanceof Error ? error.message : String(error)}`);
      } catch {
        // Non-blocking by contract.
      }
      return 0;
    }
  };

  const timer = setInterval(flush, Math.max(1, config.flush_interval_seconds) * 1000);
  timer.unref?.();

  return {
    handle,
    buffer,
    flush,
    async stop() {
      clearInterval(timer);
      handle.dispose();
      await flush();
    },
  };
}
