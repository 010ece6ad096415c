/** Typed client for the extraction service. Every workbench panel goes
 * through this module; nothing else in the UI talks to the network.
 */

import type { WorkbenchConfig } from "./config.js";
import type {
  AgendaInfo,
  AgendasPayload,
  CorpusPayload,
  ExtractRequestBody,
  GraphSummaryPayload,
  JaccardPayload,
  JobAccepted,
  JobListPayload,
  JobPayload,
  ProjectionPayload,
  StorylineDetailPayload,
  StorylineListPayload,
  UnionMapPayload,
} from "./types.js";

/** Structural subset of fetch, so tests can substitute a recorded router. */
export interface FetchResponseLike {
  ok: boolean;
  status: number;
  json(): Promise<unknown>;
}

export type FetchLike = (
  url: string,
  init?: { method?: string; headers?: Record<string, string>; body?: string },
) => Promise<FetchResponseLike>;

export class ApiError extends Error {
  readonly status: number;
  readonly detail: unknown;

  constructor(status: number, detail: unknown) {
    super(`service error ${status}: ${typeof detail === "string" ? detail : JSON.stringify(detail)}`);
    this.name = "ApiError";
    this.status = status;
    this.detail = detail;
  }
}

export class ApiClient {
  private readonly config: WorkbenchConfig;
  private readonly fetchFn: FetchLike;

  constructor(config: WorkbenchConfig, fetchFn?: FetchLike) {
    this.config = config;
    this.fetchFn = fetchFn ?? (globalThis.fetch.bind(globalThis) as FetchLike);
  }

  get hasToken(): boolean {
    return Boolean(this.config.token);
  }

  url(path: string): string {
    return `${this.config.baseUrl}${path}`;
  }

  private headers(json = false): Record<string, string> {
    const out: Record<string, string> = {};
    if (json) {
      out["Content-Type"] = "application/json";
    }
    if (this.config.token) {
      out["Authorization"] = `Bearer ${this.config.token}`;
    }
    return out;
  }

  private async request<T>(path: string, init?: { method?: string; body?: string }): Promise<T> {
    const response = await this.fetchFn(this.url(path), {
      method: init?.method ?? "GET",
      headers: this.headers(init?.body !== undefined),
      ...(init?.body !== undefined ? { body: init.body } : {}),
    });
    let payload: unknown = null;
    try {
      payload = await response.json();
    } catch {
      payload = null;
    }
    if (!response.ok) {
      const detail =
        payload && typeof payload === "object" && "detail" in payload
          ? (payload as { detail: unknown }).detail
          : payload;
      throw new ApiError(response.status, detail);
    }
    return payload as T;
  }

  corpus(full = false): Promise<CorpusPayload> {
    return this.request(`/api/corpus${full ? "?full=1" : ""}`);
  }

  graphSummary(): Promise<GraphSummaryPayload> {
    return this.request("/api/graph/summary");
  }

  projection(): Promise<ProjectionPayload> {
    return this.request("/api/projection");
  }

  agendas(): Promise<AgendasPayload> {
    return this.request("/api/agendas");
  }

  createAgenda(agenda: AgendaInfo): Promise<AgendaInfo> {
    return this.request("/api/agendas", { method: "POST", body: JSON.stringify(agenda) });
  }

  extract(body: ExtractRequestBody): Promise<JobAccepted> {
    return this.request("/api/extract", { method: "POST", body: JSON.stringify(body) });
  }

  job(jobId: string, withEvents = false): Promise<JobPayload> {
    const query = withEvents ? "?events=1" : "";
    return this.request(`/api/jobs/${encodeURIComponent(jobId)}${query}`);
  }

  jobs(): Promise<JobListPayload> {
    return this.request("/api/jobs");
  }

  /** URL for the job's server-sent event stream (consumed by EventSource). */
  eventsUrl(jobId: string): string {
    return this.url(`/api/jobs/${encodeURIComponent(jobId)}/events`);
  }

  storylines(): Promise<StorylineListPayload> {
    return this.request("/api/storylines");
  }

  storyline(storylineId: string): Promise<StorylineDetailPayload> {
    return this.request(`/api/storylines/${encodeURIComponent(storylineId)}`);
  }

  jaccard(a: string, b: string): Promise<JaccardPayload> {
    return this.request(`/api/jaccard?a=${encodeURIComponent(a)}&b=${encodeURIComponent(b)}`);
  }

  unionMap(ids: string[]): Promise<UnionMapPayload> {
    return this.request(`/api/map?ids=${encodeURIComponent(ids.join(","))}`);
  }
}
