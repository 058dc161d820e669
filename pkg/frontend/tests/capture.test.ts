import { describe, expect, test } from "vitest";

import { MemoryBuffer } from "../src/buffer.js";
import { hookNotebook } from "../src/capture.js";
import { validateEvent } from "../src/events.js";
import { ScriptedSession, errorOutput } from "./helpers.js";

function hooked() {
  const session = new ScriptedSession();
  const buffer = new MemoryBuffer();
  const notices: string[] = [];
  let tick = 0;
  const handle = hookNotebook(session, buffer, {
    now: () => 1_000_000 + 100 * tick++,
    notify: (message) => notices.push(message),
  });
  return { session, buffer, notices, handle };
}

describe("scripted headless session", () => {
  test("create -> execute -> error -> delete produces exactly four events", () => {
    const { session, buffer } = hooked();
    session.emit({ type: "create_cell", cellId: "c1", ordinal: 0, source: "" });
    session.emit({ type: "execute_cell", cellId: "c1", ordinal: 0, source: "1 / 0" });
    session.emit({ type: "error_event", cellId: "c1", ordinal: 0, outputs: [errorOutput] });
    session.emit({ type: "delete_cell", cellId: "c1", ordinal: 0 });

    const events = buffer.pending();
    expect(events.map((e) => e.kind)).toEqual([
      "create_cell",
      "execute_cell",
      "error_event",
      "delete_cell",
    ]);
    for (const event of events) {
      expect(validateEvent(event)).toEqual([]);
      expect(event.cell_id).toBe("c1");
      expect(event.session_id).toBe("s-test");
    }
    expect(events[1]?.source).toBe("1 / 0");
    expect(events[2]?.outputs?.[0]?.output_type).toBe("error");
    expect(events[3]?.source).toBeUndefined();
  });

  test("all ten kinds are emitted on their triggering actions", () => {
    const { session, buffer } = hooked();
    session.emit({ type: "notebook_launch" });
    session.emit({ type: "create_cell", cellId: "c1", ordinal: 0, source: "x = 1" });
    session.emit({ type: "execute_cell", cellId: "c1", ordinal: 0, source: "x = 1" });
    session.emit({
      type: "finish_execute",
      cellId: "c1",
      ordinal: 0,
      outputs: [{ output_type: "execute_result", payload: "1" }],
    });
    session.emit({ type: "error_event", cellId: "c1", ordinal: 0, outputs: [errorOutput] });
    session.emit({ type: "render_markdown", cellId: "c1", ordinal: 0, source: "# notes" });
    session.emit({
      type: "change_cell_type",
      cellId: "c1",
      ordinal: 0,
      newCellType: "code",
      source: "x = 1",
    });
    session.emit({ type: "notebook_interrupt" });
    session.emit({ type: "notebook_restart" });
    session.emit({ type: "delete_cell", cellId: "c1", ordinal: 0 });

    const kinds = buffer.pending().map((e) => e.kind);
    expect(new Set(kinds).size).toBe(10);
    for (const event of buffer.pending()) {
      expect(validateEvent(event)).toEqual([]);
    }
  });

  test("seq is monotonically increasing from 1; timestamps come from the clock", () => {
    const { session, buffer } = hooked();
    session.emit({ type: "notebook_launch" });
    session.emit({ type: "create_cell", cellId: "c1", ordinal: 0, source: "" });
    session.emit({ type: "notebook_interrupt" });

    const events = buffer.pending();
    expect(events.map((e) => e.seq)).toEqual([1, 2, 3]);
    expect(events.map((e) => e.timestamp)).toEqual([1_000_000, 1_000_100, 1_000_200]);
  });

  test("a create without source captures an empty source", () => {
    const { session, buffer } = hooked();
    session.emit({ type: "create_cell", cellId: "c9", ordinal: 2 });
    expect(buffer.pending()[0]?.source).toBe("");
  });

  test("emitted actions are never mutated", () => {
    const { session } = hooked();
    const action = {
      type: "execute_cell",
      cellId: "c1",
      ordinal: 0,
      source: "x = 1",
    } as const;
    const copy = structuredClone(action);
    session.emit(action);
    expect(action).toEqual(copy);
  });
});

describe("hook failure handling", () => {
  test("a buffer failure disables the hook with a non-blocking notice", () => {
    const session = new ScriptedSession();
    const notices: string[] = [];
    const broken = new MemoryBuffer();
    broken.append = () => {
      throw new Error("disk full");
    };
    const handle = hookNotebook(session, broken, { notify: (m) => notices.push(m) });

    expect(() => session.emit({ type: "notebook_launch" })).not.toThrow();
    expect(handle.disabled).toBe(true);
    expect(notices.join(" ")).toContain("capture disabled");
    expect(session.subscriberCount).toBe(0);

    session.emit({ type: "notebook_restart" });
    expect(handle.captured).toBe(0);
  });

  test("a throwing notice channel is swallowed", () => {
    const session = new ScriptedSession();
    const broken = new MemoryBuffer();
    broken.append = () => {
      throw new Error("disk full");
    };
    const handle = hookNotebook(session, broken, {
      notify: () => {
        throw new Error("status bar gone");
      },
    });
    expect(() => session.emit({ type: "notebook_launch" })).not.toThrow();
    expect(handle.disabled).toBe(true);
  });

  test("dispose unsubscribes and is idempotent", () => {
    const { session, buffer, handle } = hooked();
    session.emit({ type: "notebook_launch" });
    handle.dispose();
    handle.dispose();
    session.emit({ type: "notebook_restart" });
    expect(buffer.size()).toBe(1);
    expect(handle.disabled).toBe(false);
  });
});
