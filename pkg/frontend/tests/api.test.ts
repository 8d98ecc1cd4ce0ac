import { describe, expect, it } from "vitest";

import { ApiError, OperatorApi } from "../src/api.js";
import type { FetchLike } from "../src/api.js";

function jsonResponse(status: number, doc: unknown): Response {
  return new Response(JSON.stringify(doc, null, 0), {
    status,
    headers: { "Content-Type": "application/json" },
  });
}

function recordingFetch(responses: Response[]): { fetchFn: FetchLike; calls: { url: string; init?: RequestInit }[] } {
  const calls: { url: string; init?: RequestInit }[] = [];
  const fetchFn: FetchLike = async (url, init) => {
    calls.push({ url, init });
    const next = responses.shift();
    if (!next) throw new TypeError("fetch failed");
    return next;
  };
  return { fetchFn, calls };
}

describe("OperatorApi", () => {
  it("posts the submit body and preserves the raw response text", async () => {
    const rawBody = '{"decision": {"human_text": "", "kind": "Accepted", "reason": null, "request_id": 1, "tick": 2}, "request_id": 1}';
    const { fetchFn, calls } = recordingFetch([new Response(rawBody, { status: 200 })]);
    const api = new OperatorApi("http://x:1/", fetchFn);

    const result = await api.submitTask({ task_name: "call_robot", priority: 3 });

    expect(calls[0]?.url).toBe("http://x:1/tasks");
    expect(calls[0]?.init?.method).toBe("POST");
    expect(JSON.parse(String(calls[0]?.init?.body))).toEqual({ task_name: "call_robot", priority: 3 });
    expect(result.raw).toBe(rawBody);
    expect(result.doc.decision?.kind).toBe("Accepted");
  });

  it("omits priority and slots when not given", async () => {
    const { fetchFn, calls } = recordingFetch([jsonResponse(200, { request_id: 1, decision: null })]);
    await new OperatorApi("http://x:1", fetchFn).submitTask({ task_name: "guard" });
    expect(JSON.parse(String(calls[0]?.init?.body))).toEqual({ task_name: "guard" });
  });

  it("surfaces InvalidPriority details from a 400", async () => {
    const { fetchFn } = recordingFetch([
      jsonResponse(400, { error: "InvalidPriority", detail: "priority must be an integer" }),
    ]);
    const api = new OperatorApi("http://x:1", fetchFn);
    const err = await api.submitTask({ task_name: "guard", priority: 2 }).catch((e) => e);
    expect(err).toBeInstanceOf(ApiError);
    expect(err.cause_kind).toBe("http");
    expect(err.status).toBe(400);
    expect(err.message).toBe("InvalidPriority: priority must be an integer");
  });

  it("wraps connection failures as network errors", async () => {
    const api = new OperatorApi("http://x:1", async () => {
      throw new TypeError("fetch failed");
    });
    const err = await api.status().catch((e) => e);
    expect(err).toBeInstanceOf(ApiError);
    expect(err.cause_kind).toBe("network");
  });

  it("maps cancel responses onto ok / not_running", async () => {
    const { fetchFn, calls } = recordingFetch([
      jsonResponse(200, { ok: true }),
      jsonResponse(409, { error: "NotRunning" }),
    ]);
    const api = new OperatorApi("http://x:1", fetchFn);
    expect(await api.cancelCurrent()).toBe("ok");
    expect(await api.cancelCurrent()).toBe("not_running");
    expect(calls.every((c) => c.url === "http://x:1/tasks/current")).toBe(true);
    expect(calls.every((c) => c.init?.method === "DELETE")).toBe(true);
  });

  it("parses a status document", async () => {
    const doc = {
      tick: 5,
      phase: "idle",
      conversation_open: false,
      running: null,
      last_decision: null,
      tasks: [["call_robot", 1, 3]],
      history: [],
    };
    const { fetchFn } = recordingFetch([jsonResponse(200, doc)]);
    const status = await new OperatorApi("http://x:1", fetchFn).status();
    expect(status.phase).toBe("idle");
    expect(status.tasks[0]?.[0]).toBe("call_robot");
  });
});
