/** Live step feed for an extraction job.
 *
 * Primary transport is the server-sent event stream (one `step` event per
 * oracle consultation, then a single `end` event). When EventSource is
 * unavailable, errors out, or a bearer token is configured (EventSource
 * cannot attach the Authorization header), the feed degrades to polling the
 * job endpoint every two seconds and diffing its event list.
 */

import type { ApiClient } from "./api.js";
import type { EndEvent, TraceStep } from "./types.js";

export const POLL_INTERVAL_MS = 2000;

export interface StepFeedHandlers {
  onStep(step: TraceStep): void;
  onEnd(end: EndEvent): void;
  onError?(error: unknown): void;
}

/** The slice of EventSource the feed uses; tests substitute a fake. */
export interface EventSourceLike {
  addEventListener(type: string, listener: (event: { data: string }) => void): void;
  close(): void;
  onerror: ((event: unknown) => void) | null;
}

export interface StepFeedOptions {
  /** Returns null to force the polling fallback. */
  eventSourceFactory?: (url: string) => EventSourceLike | null;
  pollIntervalMs?: number;
}

export interface StepFeed {
  readonly mode: "sse" | "poll";
  close(): void;
}

function defaultFactory(url: string): EventSourceLike | null {
  const ctor = (globalThis as { EventSource?: new (url: string) => EventSourceLike }).EventSource;
  return ctor ? new ctor(url) : null;
}

export function openStepFeed(
  client: ApiClient,
  jobId: string,
  handlers: StepFeedHandlers,
  options: StepFeedOptions = {},
): StepFeed {
  const interval = options.pollIntervalMs ?? POLL_INTERVAL_MS;
  const factory = options.eventSourceFactory ?? defaultFactory;

  let closed = false;
  let stepsSeen = 0;
  let timer: ReturnType<typeof setTimeout> | null = null;
  let source: EventSourceLike | null = null;

  const emitStep = (step: TraceStep) => {
    stepsSeen += 1;
    handlers.onStep(step);
  };

  const finish = (end: EndEvent) => {
    if (!closed) {
      closed = true;
      if (source) source.close();
      handlers.onEnd(end);
    }
  };

  const poll = async () => {
    if (closed) return;
    try {
      const job = await client.job(jobId, true);
      const events = job.events ?? [];
      for (const step of events.slice(stepsSeen)) {
        if (closed) return;
        emitStep(step);
      }
      if (job.state === "done" || job.state === "failed" || job.state === "no_path") {
        finish({ state: job.state, storyline_id: job.storyline_id, error: job.error });
        return;
      }
    } catch (error) {
      handlers.onError?.(error);
    }
    if (!closed) {
      timer = setTimeout(poll, interval);
    }
  };

  const startPolling = () => {
    if (!closed && timer === null) {
      timer = setTimeout(poll, interval);
    }
  };

  let mode: "sse" | "poll" = "poll";
  // a token forces polling: the browser EventSource API has no header hook
  if (!client.hasToken) {
    source = factory(client.eventsUrl(jobId));
  }
  if (source) {
    mode = "sse";
    source.addEventListener("step", (event) => {
      if (!closed) emitStep(JSON.parse(event.data) as TraceStep);
    });
    source.addEventListener("end", (event) => {
      finish(JSON.parse(event.data) as EndEvent);
    });
    source.onerror = (error) => {
      if (closed) return;
      handlers.onError?.(error);
      source?.close();
      source = null;
      startPolling(); // degrade rather than drop the feed
    };
  } else {
    startPolling();
  }

  return {
    get mode() {
      return source ? mode : "poll";
    },
    close() {
      closed = true;
      if (source) source.close();
      if (timer !== null) clearTimeout(timer);
    },
  } as StepFeed;
}
