/**
 * HTTP client for the ingest service, plus the consent-gated flush path.
 *
 * Delivery is at-least-once: events are posted in buffer order and removed
 * from the buffer only after the server acknowledges them.  Transient
 * failures (network down, 5xx) are retried with exponential backoff and
 * leave the buffer untouched; a 400 response means an invalid event got
 * past local validation, which no retry can fix, so it surfaces as an
 * error with the buffer intact.
 */

import { CapturedEvent, serializeEvent } from "./events.js";
import { EventBuffer } from "./buffer.js";
import { CaptureConfig } from "./config.js";

/** The ingest service's acknowledgment for one delivery. */
export interface Ack {
  accepted: number;
  deduplicated: number;
}

export type FetchLike = (
  url: string,
  init?: { method?: string; headers?: Record<string, string>; body?: string },
) => Promise<{ ok: boolean; status: number; text(): Promise<string> }>;

export class TransportError extends Error {
  constructor(
    message: string,
    readonly retryable: boolean,
  ) {
    super(message);
    this.name = "TransportError";
  }
}

export class IngestClient {
  private readonly baseUrl: string;
  private readonly fetchImpl: FetchLike;

  constructor(serverUrl: string, fetchImpl: FetchLike = fetch) {
    this.baseUrl = serverUrl.replace(/\/+$/, "");
    this.fetchImpl = fetchImpl;
  }

  /** POST a batch; resolves to the server's ack or throws TransportError. */
  async postEvents(events: CapturedEvent[]): Promise<Ack> {
    if (events.length === 0) {
      return { accepted: 0, deduplicated: 0 };
    }
    const body = "[" + events.map(serializeEvent).join(",") + "]";
    let response;
    try {
      response = await this.fetchImpl(`${this.baseUrl}/events`, {
        method: "POST",
        headers: { "Content-Type": "application/json" },
        body,
      });
    } catch (error) {
      throw new TransportError(`network failure: ${String(error)}`, true);
    }
    if (!response.ok) {
      const detail = await response.text().catch(() => "");
      const retryable = response.status >= 500;
      throw new TransportError(`server returned ${response.status}: ${detail}`, retryable);
    }
    const ack = JSON.parse(await response.text()) as Ack;
    if (!Number.isInteger(ack.accepted) || !Number.isInteger(ack.deduplicated)) {
      throw new TransportError("malformed acknowledgment", false);
    }
    return ack;
  }

  async health(): Promise<{ status: string; events: number }> {
    let response;
    try {
      response = await this.fetchImpl(`${this.baseUrl}/health`);
    } catch (error) {
      throw new TransportError(`network failure: ${String(error)}`, true);
    }
    if (!response.ok) {
      throw new TransportError(`health check returned ${response.status}`, response.status >= 500);
    }
    return JSON.parse(await response.text());
  }
}

export interface FlushOptions {
  /** Total delivery attempts per flush (default 3). */
  attempts?: number;
  /** First retry delay in ms, doubled per attempt (default 250). */
  backoffMs?: number;
  /** Injectable sleeper for tests. */
  sleep?: (ms: number) => Promise<void>;
}

const defaultSleep = (ms: number) => new Promise<void>((resolve) => setTimeout(resolve, ms));

/**
 * Deliver everything pending in the buffer; returns the count delivered.
 *
 * Nothing leaves the machine unless the config carries consent — without
 * it this resolves to 0 and performs no network activity at all.  Events
 * are acknowledged out of the buffer only after the server confirms them.
 * Transient failures are retried with exponential backoff; when retries
 * are exhausted the flush resolves to 0 with every event still buffered
 * for the next round.  Non-retryable rejections (the server called the
 * batch invalid) throw, because no retry can fix them.
 */
export async function flushBuffer(
  buffer: EventBuffer,
  config: CaptureConfig,
  client?: IngestClient,
  options: FlushOptions = {},
): Promise<number> {
  if (!config.consent_given) {
    return 0;
  }
  const batch = buffer.pending();
  if (batch.length === 0) {
    return 0;
  }
  const attempts = Math.max(1, options.attempts ?? 3);
  const sleep = options.sleep ?? defaultSleep;
  const ingest = client ?? new IngestClient(config.server_url);
  let delay = options.backoffMs ?? 250;
  for (let attempt = 1; attempt <= attempts; attempt += 1) {
    try {
      await ingest.postEvents(batch);
      buffer.acknowledge(batch.length);
      return batch.length;
    } catch (error) {
      const retryable = error instanceof TransportError ? error.retryable : false;
      if (!retryable) {
        throw error;
      }
      if (attempt < attempts) {
        await sleep(delay);
        delay *= 2;
      }
    }
  }
  return 0;
}
