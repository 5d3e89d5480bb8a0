import { describe, expect, it } from "vitest";

import { EventFeed } from "../src/events";
import type { TraceEvent } from "../src/types";

function ndjsonStream(chunks: string[]): Response {
  const encoder = new TextEncoder();
  const body = new ReadableStream<Uint8Array>({
    start(controller) {
      for (const chunk of chunks) {
        controller.enqueue(encoder.encode(chunk));
      }
      controller.close();
    },
  });
  return new Response(body, { status: 200 });
}

function event(i: number, kind = "TX"): string {
  return JSON.stringify({ i, t: i * 1000, kind, text: "", fields: {} });
}

describe("EventFeed", () => {
  it("delivers events in order, handling chunks split mid-line", async () => {
    const line0 = event(0);
    const line1 = event(1, "APPLY");
    const line2 = event(2, "RX");
    const chunks = [
      line0 + "\n" + line1.slice(0, 10),
      line1.slice(10) + "\n",
      line2 + "\n",
    ];
    const seen: TraceEvent[] = [];
    const feed = new EventFeed(
      "",
      (e) => {
        seen.push(e);
        if (e.i === 2) feed.stop();
      },
      async (url) => {
        expect(url).toBe("/events?since=0");
        return ndjsonStream(chunks);
      },
      1,
    );
    await feed.run();
    expect(seen.map((e) => e.i)).toEqual([0, 1, 2]);
    expect(seen[1].kind).toBe("APPLY");
  });

  it("resumes from the last index and skips duplicates", async () => {
    const urls: string[] = [];
    const seen: number[] = [];
    let call = 0;
    const feed = new EventFeed(
      "",
      (e) => {
        seen.push(e.i);
        if (e.i === 3) feed.stop();
      },
      async (url) => {
        urls.push(url);
        call += 1;
        if (call === 1) {
          return ndjsonStream([event(0) + "\n" + event(1) + "\n"]);
        }
        // replays event 1 (duplicate) then continues
        return ndjsonStream([event(1) + "\n" + event(2) + "\n" + event(3) + "\n"]);
      },
      1,
    );
    await feed.run();
    expect(urls[0]).toBe("/events?since=0");
    expect(urls[1]).toBe("/events?since=2");
    expect(seen).toEqual([0, 1, 2, 3]); // no duplicate 1
  });
});
