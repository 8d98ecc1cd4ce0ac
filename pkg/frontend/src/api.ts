// Thin typed client for the operator service. No retries, no caching,
// no reshaping of payloads; callers get the parsed document plus the
// raw body text so byte-faithful rendering stays possible.

import type { StatusDoc, SubmitResponse } from "./types.js";

export type FetchLike = (url: string, init?: RequestInit) => Promise<Response>;

export class ApiError extends Error {
  readonly cause_kind: "network" | "http";
  readonly status: number;
  readonly detail: string;

  constructor(kind: "network" | "http", message: string, status = 0, detail = "") {
    super(message);
    this.name = "ApiError";
    this.cause_kind = kind;
    this.status = status;
    this.detail = detail;
  }
}

export interface SubmitParams {
  task_name: string;
  priority?: number;
  slots?: Record<string, unknown>;
}

export interface SubmitResult {
  raw: string;
  doc: SubmitResponse;
}

export class OperatorApi {
  readonly base: string;
  private fetchFn: FetchLike;

  constructor(base: string, fetchFn: FetchLike = fetch) {
    this.base = base.replace(/\/$/, "");
    this.fetchFn = fetchFn;
  }

  private async request(path: string, init?: RequestInit): Promise<Response> {
    let res: Response;
    try {
      res = await this.fetchFn(this.base + path, init);
    } catch (err) {
      throw new ApiError("network", `cannot reach ${this.base}: ${String(err)}`);
    }
    return res;
  }

  private async errorFrom(res: Response): Promise<ApiError> {
    let detail = "";
    let label = `HTTP ${res.status}`;
    try {
      const doc = await res.json();
      if (doc && typeof doc.error === "string") label = doc.error;
      if (doc && typeof doc.detail === "string") detail = doc.detail;
    } catch {
      // non-JSON error body, keep the status label
    }
    return new ApiError("http", detail ? `${label}: ${detail}` : label, res.status, detail);
  }

  async status(): Promise<StatusDoc> {
    const res = await this.request("/status");
    if (!res.ok) throw await this.errorFrom(res);
    return (await res.json()) as StatusDoc;
  }

  async submitTask(params: SubmitParams): Promise<SubmitResult> {
    const body: Record<string, unknown> = { task_name: params.task_name };
    if (params.priority !== undefined) body.priority = params.priority;
    if (params.slots !== undefined) body.slots = params.slots;
    const res = await this.request("/tasks", {
      method: "POST",
      headers: { "Content-Type": "application/json" },
      body: JSON.stringify(body),
    });
    if (!res.ok) throw await this.errorFrom(res);
    const raw = await res.text();
    return { raw, doc: JSON.parse(raw) as SubmitResponse };
  }

  /** Returns "ok" when a task was cancelled, "not_running" when there was none. */
  async cancelCurrent(): Promise<"ok" | "not_running"> {
    const res = await this.request("/tasks/current", { method: "DELETE" });
    if (res.status === 200) return "ok";
    if (res.status === 409) return "not_running";
    throw await this.errorFrom(res);
  }
}
