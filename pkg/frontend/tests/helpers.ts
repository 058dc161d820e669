import { CapturedEvent, Output } from "../src/events.js";
import { NotebookSession, SessionAction } from "../src/capture.js";

/** A headless notebook session driven line-by-line from a test script. */
export class ScriptedSession implements NotebookSession {
  private listeners: Array<(action: SessionAction) => void> = [];

  constructor(
    readonly sessionId: string = "s-test",
    readonly kernelId: string = "k-test",
    readonly notebookName: string = "scripted.ipynb",
    readonly userId: string = "tester",
  ) {}

  subscribe(listener: (action: SessionAction) => void): () => void {
    this.listeners.push(listener);
    return () => {
      this.listeners = this.listeners.filter((l) => l !== listener);
    };
  }

  emit(action: SessionAction): void {
    for (const listener of [...this.listeners]) {
      listener(action);
    }
  }

  get subscriberCount(): number {
    return this.listeners.length;
  }
}

export const errorOutput: Output = {
  output_type: "error",
  payload: "ZeroDivisionError: division by zero",
};

export function makeEvent(seq: number, overrides: Partial<CapturedEvent> = {}): CapturedEvent {
  return {
    kind: "execute_cell",
    session_id: "s-test",
    kernel_id: "k-test",
    notebook_name: "scripted.ipynb",
    user_id: "tester",
    timestamp: 1_000 * seq,
    seq,
    cell_id: "c1",
    cell_ordinal: 0,
    source: `x = ${seq}`,
    ...overrides,
  };
}

/** Minimal fetch stand-in: records calls and replays scripted outcomes. */
export class FakeFetch {
  readonly calls: Array<{ url: string; body?: string }> = [];
  private outcomes: Array<{ status: number; body: string } | Error> = [];

  /** Queue one response (or an Error to reject with) per upcoming call. */
  queue(outcome: { status: number; body: string } | Error): void {
    this.outcomes.push(outcome);
  }

  get fn() {
    return async (url: string, init?: { body?: string }) => {
      this.calls.push({ url, body: init?.body });
      const outcome = this.outcomes.shift();
      if (outcome === undefined) {
        throw new Error("FakeFetch: no outcome queued");
      }
      if (outcome instanceof Error) {
        throw outcome;
      }
      return {
        ok: outcome.status >= 200 && outcome.status < 300,
        status: outcome.status,
        text: async () => outcome.body,
      };
    };
  }
}
