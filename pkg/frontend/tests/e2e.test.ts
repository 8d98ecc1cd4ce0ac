// End-to-end: drive the console code against a real operator service.
// Spawns `python3 -m intentsim serve` on an ephemeral port; skipped with
// a message when the Python package is not importable in this sandbox.

import { spawn, spawnSync } from "node:child_process";
import type { ChildProcess } from "node:child_process";
import { afterAll, beforeAll, describe, expect, it, vi } from "vitest";

import { OperatorApi } from "../src/api.js";
import { canonicalJson } from "../src/canon.js";
import { EventStream } from "../src/sse.js";
import { ConsoleStore } from "../src/store.js";

const pythonOk =
  spawnSync("python3", ["-c", "import intentsim"], { timeout: 15000 }).status === 0;
if (!pythonOk) {
  console.log("skipping e2e: `python3 -c 'import intentsim'` failed; install the package first");
}

let proc: ChildProcess | null = null;
let base = "";

function startServe(): Promise<string> {
  return new Promise((resolve, reject) => {
    const child = spawn(
      "python3",
      ["-m", "intentsim", "serve", "--port", "0", "--tick-hz", "10", "--seed", "7"],
      { stdio: ["ignore", "pipe", "pipe"] },
    );
    proc = child;
    const timer = setTimeout(() => reject(new Error("serve did not start in 15s")), 15000);
    let out = "";
    child.stdout?.on("data", (chunk: Buffer) => {
      out += chunk.toString();
      const m = out.match(/operator service on (http:\/\/[\w.]+:\d+)/);
      if (m && m[1]) {
        clearTimeout(timer);
        resolve(m[1]);
      }
    });
    child.on("exit", (code) => {
      clearTimeout(timer);
      reject(new Error(`serve exited early with code ${code}`));
    });
  });
}

async function waitIdle(api: OperatorApi): Promise<void> {
  await vi.waitFor(
    async () => {
      const s = await api.status();
      expect(s.running).toBeNull();
      expect(s.phase).toBe("idle");
    },
    { timeout: 20000, interval: 150 },
  );
}

describe.skipIf(!pythonOk)("operator console against live serve", () => {
  beforeAll(async () => {
    base = await startServe();
  });

  afterAll(() => {
    proc?.kill("SIGTERM");
  });

  it("reads the status snapshot a browser would start from", async () => {
    const api = new OperatorApi(base);
    const status = await api.status();
    expect(status.phase).toBe("idle");
    expect(status.running).toBeNull();
    expect(status.tasks.map((t) => t[0])).toEqual(["call_robot", "guard", "medicine_reminder"]);

    const res = await fetch(`${base}/status`);
    expect(res.headers.get("access-control-allow-origin")).toBe("*");
  });

  it("renders a rejected decision byte-equal to the service response", async () => {
    const api = new OperatorApi(base);
    const store = new ConsoleStore();

    const result = await api.submitTask({ task_name: "polish_silver" });
    store.applySubmit(result);

    const rendered = store.state.decisionText;
    expect(rendered).not.toBeNull();
    // the rendered bytes appear verbatim inside the raw HTTP body
    expect(result.raw).toContain(rendered);
    expect(store.state.decision?.kind).toBe("Rejected");
    expect(store.state.decision?.reason).toBe("UnknownTask");
    expect(store.state.decision?.human_text).toBe("i do not know how to do polish_silver");
  });

  it("matches a direct POST /tasks response from outside the console code", async () => {
    // plain fetch, no console client involved
    const res = await fetch(`${base}/tasks`, {
      method: "POST",
      headers: { "Content-Type": "application/json" },
      body: JSON.stringify({ task_name: "polish_silver" }),
    });
    expect(res.status).toBe(200);
    const raw = await res.text();
    const doc = JSON.parse(raw);

    // feed those bytes through the console store: what it would render
    // must be byte-equal to the decision inside the direct response
    const store = new ConsoleStore();
    store.applySubmit({ raw, doc });
    const rendered = store.state.decisionText;
    expect(rendered).not.toBeNull();
    expect(raw).toContain(rendered);
    expect(rendered).toBe(canonicalJson(doc.decision));
  });

  it("accepts a known task and reports it running", async () => {
    const api = new OperatorApi(base);
    const store = new ConsoleStore();

    const result = await api.submitTask({ task_name: "call_robot" });
    store.applySubmit(result);
    expect(store.state.decision?.kind).toBe("Accepted");
    expect(result.raw).toContain(store.state.decisionText);

    await vi.waitFor(
      async () => {
        const s = await api.status();
        if (s.running === null) {
          // must not have silently vanished without a verdict
          expect(s.history.some((h) => h.request_id === result.doc.request_id)).toBe(true);
        } else {
          expect(s.running.task_name).toBe("call_robot");
        }
      },
      { timeout: 10000, interval: 100 },
    );
    await waitIdle(api);
  });

  it("cancel returns the status view to idle within one refresh interval", async () => {
    const api = new OperatorApi(base);
    const store = new ConsoleStore();

    const result = await api.submitTask({ task_name: "medicine_reminder" });
    store.applySubmit(result);
    expect(store.state.decision?.kind).toBe("Accepted");

    await vi.waitFor(
      async () => {
        const s = await api.status();
        expect(s.running?.task_name).toBe("medicine_reminder");
      },
      { timeout: 10000, interval: 100 },
    );

    store.applyCancel(await api.cancelCurrent());
    expect(store.state.toast).toBe("cancel sent");

    // one refresh interval: the console polls /status every 500 ms
    await new Promise((r) => setTimeout(r, 500));
    const after = await api.status();
    expect(after.running).toBeNull();
    expect(after.phase).toBe("idle");
    const last = after.history[after.history.length - 1];
    expect(last?.task_name).toBe("medicine_reminder");
    expect(last?.outcome).toBe("preempted");

    // pressing cancel again is a no-op surfaced as a toast
    store.applyCancel(await api.cancelCurrent());
    expect(store.state.toast).toBe("no task is running");
  });

  it("streams the event feed in envelope id order", async () => {
    const api = new OperatorApi(base);
    const store = new ConsoleStore();
    const rawLines: string[] = [];

    let open = false;
    const stream = new EventStream(`${base}/events`, {
      onLine: (line) => {
        rawLines.push(line);
        store.pushWireLine(line);
      },
      onState: (s) => {
        if (s === "open") open = true;
      },
    });
    stream.start();
    try {
      await vi.waitFor(() => expect(open).toBe(true), { timeout: 5000 });
      await api.submitTask({ task_name: "call_robot" });
      await waitIdle(api);
      await api.submitTask({ task_name: "guard" });
      await vi.waitFor(() => expect(store.state.feed.length).toBeGreaterThanOrEqual(12), {
        timeout: 15000,
      });
    } finally {
      stream.stop();
    }

    const ids = store.state.feed.map((e) => e.id);
    for (let i = 1; i < ids.length; i += 1) {
      expect(ids[i]).toBeGreaterThan(ids[i - 1] ?? Infinity);
    }
    // the store did not reorder anything the wire delivered
    const wireIds = rawLines.map((l) => JSON.parse(l).id as number);
    expect(ids).toEqual(wireIds.slice(wireIds.length - ids.length));

    // wire key order is part of the protocol the console displays
    for (const line of rawLines.slice(0, 5)) {
      expect(Object.keys(JSON.parse(line))).toEqual(["id", "ts", "src", "dst", "kind", "payload"]);
    }
    await waitIdle(api);
  });
});
