import { describe, expect, test } from "vitest";

import { MemoryBuffer } from "../src/buffer.js";
import { IngestClient, TransportError, flushBuffer } from "../src/client.js";
import { CaptureConfig } from "../src/config.js";
import { FakeFetch, makeEvent } from "./helpers.js";

const config = (consent: boolean): CaptureConfig => ({
  server_url: "http://127.0.0.1:9",
  consent_given: consent,
  buffer_key: "unused",
  flush_interval_seconds: 60,
});

function buffered(count: number): MemoryBuffer {
  const buffer = new MemoryBuffer();
  for (let seq = 1; seq <= count; seq += 1) {
    buffer.append(makeEvent(seq));
  }
  return buffer;
}

const noSleep = async () => undefined;

describe("consent gate", () => {
  test("without consent nothing touches the network and the buffer stays", async () => {
    const fake = new FakeFetch();
    const client = new IngestClient("http://127.0.0.1:9", fake.fn);
    const buffer = buffered(3);

    const delivered = await flushBuffer(buffer, config(false), client);

    expect(delivered).toBe(0);
    expect(fake.calls).toHaveLength(0);
    expect(buffer.size()).toBe(3);
  });
});

describe("flushBuffer", () => {
  test("empty buffer flushes to zero without a request", async () => {
    const fake = new FakeFetch();
    const client = new IngestClient("http://127.0.0.1:9", fake.fn);
    expect(await flushBuffer(new MemoryBuffer(), config(true), client)).toBe(0);
    expect(fake.calls).toHaveLength(0);
  });

  test("three buffered events, server up: three delivered, buffer empty", async () => {
    const fake = new FakeFetch();
    fake.queue({ status: 200, body: '{"accepted":3,"deduplicated":0}' });
    const client = new IngestClient("http://127.0.0.1:9", fake.fn);
    const buffer = buffered(3);

    const delivered = await flushBuffer(buffer, config(true), client);

    expect(delivered).toBe(3);
    expect(buffer.size()).toBe(0);
    expect(fake.calls).toHaveLength(1);
    const body = JSON.parse(fake.calls[0]!.body!) as Array<{ seq: number }>;
    expect(body.map((e) => e.seq)).toEqual([1, 2, 3]);
  });

  test("server down: zero delivered, buffer unchanged, backoff between tries", async () => {
    const fake = new FakeFetch();
    fake.queue(new Error("ECONNREFUSED"));
    fake.queue(new Error("ECONNREFUSED"));
    fake.queue(new Error("ECONNREFUSED"));
    const client = new IngestClient("http://127.0.0.1:9", fake.fn);
    const buffer = buffered(3);
    const delays: number[] = [];

    const delivered = await flushBuffer(buffer, config(true), client, {
      attempts: 3,
      backoffMs: 250,
      sleep: async (ms) => {
        delays.push(ms);
      },
    });

    expect(delivered).toBe(0);
    expect(buffer.pending().map((e) => e.seq)).toEqual([1, 2, 3]);
    expect(fake.calls).toHaveLength(3);
    expect(delays).toEqual([250, 500]);
  });

  test("a transient failure followed by success delivers everything", async () => {
    const fake = new FakeFetch();
    fake.queue(new Error("ECONNRESET"));
    fake.queue({ status: 200, body: '{"accepted":2,"deduplicated":0}' });
    const client = new IngestClient("http://127.0.0.1:9", fake.fn);
    const buffer = buffered(2);

    const delivered = await flushBuffer(buffer, config(true), client, { sleep: noSleep });

    expect(delivered).toBe(2);
    expect(buffer.size()).toBe(0);
    expect(fake.calls).toHaveLength(2);
  });

  test("a 400 rejection is not retried and surfaces with the buffer intact", async () => {
    const fake = new FakeFetch();
    fake.queue({ status: 400, body: "schema error detail" });
    const client = new IngestClient("http://127.0.0.1:9", fake.fn);
    const buffer = buffered(1);

    await expect(flushBuffer(buffer, config(true), client, { sleep: noSleep })).rejects.toThrow(
      TransportError,
    );
    expect(fake.calls).toHaveLength(1);
    expect(buffer.size()).toBe(1);
  });

  test("5xx responses are retried", async () => {
    const fake = new FakeFetch();
    fake.queue({ status: 503, body: "busy" });
    fake.queue({ status: 200, body: '{"accepted":1,"deduplicated":0}' });
    const client = new IngestClient("http://127.0.0.1:9", fake.fn);
    const buffer = buffered(1);

    expect(await flushBuffer(buffer, config(true), client, { sleep: noSleep })).toBe(1);
    expect(buffer.size()).toBe(0);
  });
});

describe("IngestClient", () => {
  test("posts to /events under the server base URL", async () => {
    const fake = new FakeFetch();
    fake.queue({ status: 200, body: '{"accepted":1,"deduplicated":0}' });
    const client = new IngestClient("http://example.test:8000/", fake.fn);

    await client.postEvents([makeEvent(1)]);

    expect(fake.calls[0]?.url).toBe("http://example.test:8000/events");
  });

  test("malformed acknowledgments are rejected as non-retryable", async () => {
    const fake = new FakeFetch();
    fake.queue({ status: 200, body: '{"accepted":"lots"}' });
    const client = new IngestClient("http://127.0.0.1:9", fake.fn);

    await expect(client.postEvents([makeEvent(1)])).rejects.toMatchObject({
      retryable: false,
    });
  });

  test("an empty batch is a no-op", async () => {
    const fake = new FakeFetch();
    const client = new IngestClient("http://127.0.0.1:9", fake.fn);
    expect(await client.postEvents([])).toEqual({ accepted: 0, deduplicated: 0 });
    expect(fake.calls).toHaveLength(0);
  });
});
