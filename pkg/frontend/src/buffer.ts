/**
 * Append-only local event buffer.
 *
 * Captured events land here first and leave only after the ingest service
 * has acknowledged them: the flush path reads the pending tail, posts it,
 * and calls {@link EventBuffer.acknowledge} with the count the server
 * confirmed.  A crash between delivery and acknowledgment therefore causes
 * re-delivery, never loss — the server's (session_id, seq) dedup absorbs
 * the repeat.
 *
 * The file-backed implementation keeps the log itself append-only and
 * tracks delivery with a cursor sidecar (`<path>.cursor`) holding the
 * number of leading events already acknowledged.
 */

import * as fs from "node:fs";
import * as path from "node:path";

import { CapturedEvent, assertValidEvent, parseEventLine, serializeEvent } from "./events.js";

export interface EventBuffer {
  /** Append one validated event; order of appends is preserved. */
  append(event: CapturedEvent): void;
  /** Undelivered events, oldest first. A copy — mutating it has no effect. */
  pending(): CapturedEvent[];
  /** Drop the first `count` pending events. Call only after a server ack. */
  acknowledge(count: number): void;
  size(): number;
}

export class MemoryBuffer implements EventBuffer {
  private events: CapturedEvent[] = [];

  append(event: CapturedEvent): void {
    assertValidEvent(event);
    this.events.push(event);
  }

  pending(): CapturedEvent[] {
    return [...this.events];
  }

  acknowledge(count: number): void {
    if (!Number.isInteger(count) || count < 0 || count > this.events.length) {
      throw new RangeError(`cannot acknowledge ${count} of ${this.events.length} events`);
    }
    this.events.splice(0, count);
  }

  size(): number {
    return this.events.length;
  }
}

export class FileBuffer implements EventBuffer {
  private readonly logPath: string;
  private readonly cursorPath: string;
  private events: CapturedEvent[] = [];
  private delivered = 0;

  constructor(logPath: string) {
    this.logPath = logPath;
    this.cursorPath = `${logPath}.cursor`;
    fs.mkdirSync(path.dirname(logPath), { recursive: true });
    this.reload();
  }

  private reload(): void {
    this.events = [];
    this.delivered = 0;
    if (fs.existsSync(this.logPath)) {
      const text = fs.readFileSync(this.logPath, "utf-8");
      for (const line of text.split("\n")) {
        if (line.trim() !== "") {
          this.events.push(parseEventLine(line));
        }
      }
    }
    if (fs.existsSync(this.cursorPath)) {
      const raw = fs.readFileSync(this.cursorPath, "utf-8").trim();
      const cursor = Number.parseInt(raw, 10);
      if (Number.isInteger(cursor) && cursor >= 0) {
        this.delivered = Math.min(cursor, this.events.length);
      }
    }
  }

  append(event: CapturedEvent): void {
    assertValidEvent(event);
    fs.appendFileSync(this.logPath, serializeEvent(event) + "\n", "utf-8");
    this.events.push(event);
  }

  pending(): CapturedEvent[] {
    return this.events.slice(this.delivered);
  }

  acknowledge(count: number): void {
    const pending = this.events.length - this.delivered;
    if (!Number.isInteger(count) || count < 0 || count > pending) {
      throw new RangeError(`cannot acknowledge ${count} of ${pending} pending events`);
    }
    this.delivered += count;
    fs.writeFileSync(this.cursorPath, `${this.delivered}\n`, "utf-8");
  }

  size(): number {
    return this.events.length - this.delivered;
  }
}
