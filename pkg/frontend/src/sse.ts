// SSE reader over fetch with automatic reconnect. The native EventSource
// would do the framing for us but hides connection state transitions,
// which the console surfaces as a banner; reading the stream by hand
// also keeps this testable without a browser.

import type { FetchLike } from "./api.js";

export type StreamState = "connecting" | "open" | "retrying" | "stopped";

export interface StreamHandlers {
  onLine: (line: string) => void;
  onState?: (state: StreamState) => void;
}

export interface StreamOptions {
  baseDelayMs?: number;
  maxDelayMs?: number;
  fetchFn?: FetchLike;
}

export class EventStream {
  private url: string;
  private handlers: StreamHandlers;
  private fetchFn: FetchLike;
  private baseDelayMs: number;
  private maxDelayMs: number;
  private stopped = false;
  private controller: AbortController | null = null;

  constructor(url: string, handlers: StreamHandlers, opts: StreamOptions = {}) {
    this.url = url;
    this.handlers = handlers;
    this.fetchFn = opts.fetchFn ?? fetch;
    this.baseDelayMs = opts.baseDelayMs ?? 500;
    this.maxDelayMs = opts.maxDelayMs ?? 5000;
  }

  start(): void {
    void this.loop();
  }

  stop(): void {
    this.stopped = true;
    this.controller?.abort();
    this.setState("stopped");
  }

  private setState(state: StreamState): void {
    this.handlers.onState?.(state);
  }

  private async loop(): Promise<void> {
    let attempt = 0;
    while (!this.stopped) {
      this.setState(attempt === 0 ? "connecting" : "retrying");
      try {
        await this.readOnce(() => {
          attempt = 0;
          this.setState("open");
        });
      } catch {
        // fall through to the backoff below
      }
      if (this.stopped) return;
      const delay = Math.min(this.baseDelayMs * 2 ** attempt, this.maxDelayMs);
      attempt += 1;
      await sleep(delay);
    }
  }

  private async readOnce(onOpen: () => void): Promise<void> {
    this.controller = new AbortController();
    const res = await this.fetchFn(this.url, {
      signal: this.controller.signal,
      headers: { Accept: "text/event-stream" },
    });
    if (!res.ok || !res.body) throw new Error(`stream HTTP ${res.status}`);
    onOpen();

    const reader = res.body.getReader();
    const decoder = new TextDecoder();
    let buffer = "";
    for (;;) {
      const { value, done } = await reader.read();
      if (done) return;
      buffer += decoder.decode(value, { stream: true });
      let cut: number;
      while ((cut = buffer.indexOf("\n\n")) >= 0) {
        const frame = buffer.slice(0, cut);
        buffer = buffer.slice(cut + 2);
        this.deliver(frame);
      }
    }
  }

  private deliver(frame: string): void {
    for (const raw of frame.split("\n")) {
      if (raw.startsWith("data: ")) {
        this.handlers.onLine(raw.slice(6));
      } else if (raw.startsWith("data:")) {
        this.handlers.onLine(raw.slice(5));
      }
      // lines starting with ":" are keepalive comments, dropped
    }
  }
}

function sleep(ms: number): Promise<void> {
  return new Promise((resolve) => setTimeout(resolve, ms));
}
