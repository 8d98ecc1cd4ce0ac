import { describe, expect, it, vi } from "vitest";

import { EventStream } from "../src/sse.js";
import type { StreamState } from "../src/sse.js";

function sseResponse(chunks: string[], failAtEnd = false): Response {
  const encoder = new TextEncoder();
  let i = 0;
  // pull-based so queued chunks are read before an end-of-stream error
  const stream = new ReadableStream<Uint8Array>({
    pull(controller) {
      const chunk = chunks[i];
      i += 1;
      if (chunk !== undefined) controller.enqueue(encoder.encode(chunk));
      else if (failAtEnd) controller.error(new Error("connection reset"));
      else controller.close();
    },
  });
  return new Response(stream, { status: 200, headers: { "Content-Type": "text/event-stream" } });
}

function harness(responses: (() => Response | Promise<Response>)[]) {
  const lines: string[] = [];
  const states: StreamState[] = [];
  let fetchCalls = 0;
  const stream = new EventStream(
    "http://x:1/events",
    {
      onLine: (l) => lines.push(l),
      onState: (s) => states.push(s),
    },
    {
      baseDelayMs: 1,
      maxDelayMs: 5,
      fetchFn: async () => {
        const next = responses[fetchCalls];
        fetchCalls += 1;
        if (!next) return new Promise<Response>(() => {}); // hang: nothing more scripted
        return next();
      },
    },
  );
  return { stream, lines, states, calls: () => fetchCalls };
}

describe("EventStream", () => {
  it("parses data lines even when frames split across chunks", async () => {
    const h = harness([
      () => sseResponse(['data: {"id"', ': 1}\n\ndata: second', " half\n", "\n"]),
    ]);
    h.stream.start();
    await vi.waitFor(() => expect(h.lines.length).toBe(2));
    h.stream.stop();
    expect(h.lines).toEqual(['{"id": 1}', "second half"]);
  });

  it("drops keepalive comments", async () => {
    const h = harness([() => sseResponse([": ping\n\n", "data: real\n\n", ": ping\n\n"])]);
    h.stream.start();
    await vi.waitFor(() => expect(h.lines).toEqual(["real"]));
    h.stream.stop();
  });

  it("reconnects after a broken stream and reports state changes", async () => {
    const h = harness([
      () => sseResponse(["data: one\n\n"], true),
      () => sseResponse(["data: two\n\n", "data: three\n\n"]),
      () => new Promise<Response>(() => {}),
    ]);
    h.stream.start();
    await vi.waitFor(() => expect(h.lines).toEqual(["one", "two", "three"]));
    h.stream.stop();
    expect(h.states[0]).toBe("connecting");
    expect(h.states).toContain("open");
    expect(h.states).toContain("retrying");
    expect(h.states.indexOf("retrying")).toBeGreaterThan(h.states.indexOf("open"));
    expect(h.states[h.states.length - 1]).toBe("stopped");
    expect(h.calls()).toBeGreaterThanOrEqual(2);
  });

  it("retries on a non-200 response", async () => {
    const h = harness([
      () => new Response("busy", { status: 503 }),
      () => sseResponse(["data: after-retry\n\n"]),
    ]);
    h.stream.start();
    await vi.waitFor(() => expect(h.lines).toEqual(["after-retry"]));
    h.stream.stop();
    expect(h.calls()).toBeGreaterThanOrEqual(2);
  });

  it("stops cleanly and fetches nothing further", async () => {
    const h = harness([() => sseResponse(["data: only\n\n"])]);
    h.stream.start();
    await vi.waitFor(() => expect(h.lines).toEqual(["only"]));
    h.stream.stop();
    const callsAtStop = h.calls();
    await new Promise((r) => setTimeout(r, 30));
    expect(h.calls()).toBe(callsAtStop);
  });
});
