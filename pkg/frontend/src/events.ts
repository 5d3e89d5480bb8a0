// NDJSON event stream consumer. Events are applied strictly in arrival
// order (the handler is awaited), which is what keeps the view-model
// reconciliation trivial. Reconnects resume from the last seen index.

import type { TraceEvent } from "./types";

export type EventHandler = (event: TraceEvent) => void | Promise<void>;

type FetchLike = (input: string, init?: RequestInit) => Promise<Response>;

export class EventFeed {
  private lastIndex = -1;
  private stopped = false;
  private controller: AbortController | null = null;

  constructor(
    private base: string,
    private handler: EventHandler,
    private fetchFn: FetchLike = (input, init) => fetch(input, init),
    private retryDelayMs = 1000,
  ) {}

  /** Runs until stop(); resolves when stopped. */
  async run(): Promise<void> {
    while (!this.stopped) {
      try {
        await this.consumeOnce();
      } catch {
        // drop the connection error and retry from lastIndex + 1
      }
      if (!this.stopped) {
        await new Promise((r) => setTimeout(r, this.retryDelayMs));
      }
    }
  }

  start(): void {
    void this.run();
  }

  stop(): void {
    this.stopped = true;
    this.controller?.abort();
  }

  private async consumeOnce(): Promise<void> {
    this.controller = new AbortController();
    const resp = await this.fetchFn(
      `${this.base}/events?since=${this.lastIndex + 1}`,
      { signal: this.controller.signal },
    );
    if (!resp.ok || resp.body === null) {
      throw new Error(`event stream unavailable: ${resp.status}`);
    }
    const reader = resp.body.getReader();
    const decoder = new TextDecoder();
    let buffer = "";
    for (;;) {
      const { done, value } = await reader.read();
      if (done) break;
      buffer += decoder.decode(value, { stream: true });
      let newline = buffer.indexOf("\n");
      while (newline >= 0) {
        const line = buffer.slice(0, newline).trim();
        buffer = buffer.slice(newline + 1);
        if (line.length > 0) {
          await this.deliver(line);
        }
        newline = buffer.indexOf("\n");
      }
      if (this.stopped) return;
    }
  }

  private async deliver(line: string): Promise<void> {
    let event: TraceEvent;
    try {
      event = JSON.parse(line) as TraceEvent;
    } catch {
      return; // tolerate a torn line on reconnect
    }
    if (event.i <= this.lastIndex) {
      return; // duplicate after resume
    }
    this.lastIndex = event.i;
    await this.handler(event);
  }
}
