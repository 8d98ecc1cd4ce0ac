// Single view-model store. Every UI update funnels through here so the
// page only ever renders one consistent snapshot; nothing else in the
// console holds state.

import { canonicalJson } from "./canon.js";
import type { StreamState } from "./sse.js";
import type { Decision, Envelope, StatusDoc } from "./types.js";
import type { SubmitResult } from "./api.js";

export const FEED_LIMIT = 500;

export interface ConsoleState {
  connection: StreamState;
  status: StatusDoc | null;
  /** Set while /status polls are failing; doubles as the network banner. */
  statusError: string | null;
  /** Exact bytes of the last Decision as the service serialized it. */
  decisionText: string | null;
  decision: Decision | null;
  lastRequestId: number | null;
  toast: string | null;
  feed: Envelope[];
}

type Listener = (state: ConsoleState) => void;

export class ConsoleStore {
  state: ConsoleState = {
    connection: "connecting",
    status: null,
    statusError: null,
    decisionText: null,
    decision: null,
    lastRequestId: null,
    toast: null,
    feed: [],
  };

  private listeners: Listener[] = [];

  subscribe(fn: Listener): () => void {
    this.listeners.push(fn);
    return () => {
      this.listeners = this.listeners.filter((l) => l !== fn);
    };
  }

  private emit(): void {
    for (const fn of this.listeners) fn(this.state);
  }

  setConnection(state: StreamState): void {
    this.state.connection = state;
    this.emit();
  }

  setStatus(doc: StatusDoc): void {
    this.state.status = doc;
    this.state.statusError = null;
    this.emit();
  }

  setStatusError(message: string): void {
    this.state.statusError = message;
    this.emit();
  }

  applySubmit(result: SubmitResult): void {
    this.state.lastRequestId = result.doc.request_id;
    if (result.doc.decision !== null) {
      this.state.decision = result.doc.decision;
      this.state.decisionText = canonicalJson(result.doc.decision);
    } else {
      this.state.decision = null;
      this.state.decisionText = null;
      this.state.toast = `request ${result.doc.request_id} submitted, decision pending`;
    }
    this.emit();
  }

  applyCancel(outcome: "ok" | "not_running"): void {
    this.state.toast = outcome === "ok" ? "cancel sent" : "no task is running";
    this.emit();
  }

  setToast(message: string | null): void {
    this.state.toast = message;
    this.emit();
  }

  /** Ingest one wire line from the event stream. Bad JSON is dropped. */
  pushWireLine(line: string): void {
    let env: Envelope;
    try {
      env = JSON.parse(line) as Envelope;
    } catch {
      return;
    }
    if (typeof env.id !== "number") return;
    this.insert(env);
    this.emit();
  }

  // Feed stays sorted by envelope id with duplicates dropped. Envelopes
  // arrive in order on a healthy stream, so this is almost always an
  // append; the general path only runs around reconnects.
  private insert(env: Envelope): void {
    const feed = this.state.feed;
    const last = feed[feed.length - 1];
    if (last === undefined || env.id > last.id) {
      feed.push(env);
    } else {
      let i = feed.length - 1;
      while (i >= 0) {
        const cur = feed[i];
        if (cur === undefined || cur.id < env.id) break;
        if (cur.id === env.id) return;
        i -= 1;
      }
      feed.splice(i + 1, 0, env);
    }
    if (feed.length > FEED_LIMIT) {
      feed.splice(0, feed.length - FEED_LIMIT);
    }
  }
}
