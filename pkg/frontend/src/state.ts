/** Client-side workbench state: endpoint selection, agenda drafts, tracked
 * jobs, and the pinned storylines under comparison.
 *
 * Invariants enforced here rather than in the views:
 *   - selected endpoints are always temporally valid (source date strictly
 *     before target date), so an invalid pair never reaches the service
 *   - the comparison set holds at most five storylines
 */

import type {
  CorpusDoc,
  EndEvent,
  ExtractMethod,
  ExtractRequestBody,
  JobListPayload,
  JobStateName,
  StorylineListPayload,
  StorylineRow,
  TraceStep,
} from "./types.js";

export const MAX_PINS = 5;
export const MIN_PINS_FOR_COMPARISON = 2;

export interface AgendaDraft {
  text: string;
  category: string;
  /** Catalog agenda id; when set, the draft text is ignored on submit. */
  agendaId: string | null;
}

export interface JobView {
  jobId: string;
  request: ExtractRequestBody;
  state: JobStateName;
  steps: TraceStep[];
  feedMode: "sse" | "poll" | null;
  storylineId: string | null;
  error: string | null;
}

export type Listener = () => void;

export class WorkbenchState {
  readonly docs = new Map<string, CorpusDoc>();
  source: string | null = null;
  target: string | null = null;
  draft: AgendaDraft = { text: "", category: "literal", agendaId: null };
  method: ExtractMethod = "llm_direct";
  k = 5;
  readonly jobs = new Map<string, JobView>();
  pins: string[] = [];
  storylines = new Map<string, StorylineRow>();
  /** One-line inline error surfaced next to the controls; null when clear. */
  lastError: string | null = null;

  private listeners = new Set<Listener>();

  subscribe(listener: Listener): () => void {
    this.listeners.add(listener);
    return () => this.listeners.delete(listener);
  }

  private notify(): void {
    for (const listener of this.listeners) {
      listener();
    }
  }

  setError(message: string | null): void {
    this.lastError = message;
    this.notify();
  }

  setDocs(docs: CorpusDoc[]): void {
    this.docs.clear();
    for (const doc of docs) {
      this.docs.set(doc.id, doc);
    }
    this.notify();
  }

  /** First pick sets the source, second the target; a third restarts.
   * Picking a target at or before the source is rejected with an inline
   * error and leaves the selection unchanged. Date granularity is the
   * server's display date, so the check is conservative.
   */
  selectDoc(docId: string): void {
    const doc = this.docs.get(docId);
    if (!doc) {
      this.lastError = `unknown document ${docId}`;
      this.notify();
      return;
    }
    this.lastError = null;
    if (this.source === null || this.target !== null) {
      this.source = docId;
      this.target = null;
    } else if (docId === this.source) {
      this.source = null;
    } else if (this.docDate(docId) <= this.docDate(this.source)) {
      this.lastError = "target must come strictly after the source in time";
    } else {
      this.target = docId;
    }
    this.notify();
  }

  private docDate(docId: string): string {
    return this.docs.get(docId)?.date ?? "";
  }

  clearEndpoints(): void {
    this.source = null;
    this.target = null;
    this.lastError = null;
    this.notify();
  }

  setDraft(update: Partial<AgendaDraft>): void {
    this.draft = { ...this.draft, ...update };
    this.notify();
  }

  setMethod(method: ExtractMethod): void {
    this.method = method;
    this.notify();
  }

  setK(k: number): void {
    this.k = Math.min(10, Math.max(1, Math.round(k)));
    this.notify();
  }

  /** Validation gate run before any extract request is sent. */
  buildRequest(): { ok: true; request: ExtractRequestBody } | { ok: false; reason: string } {
    if (this.source === null || this.target === null) {
      return { ok: false, reason: "select a source and a target document first" };
    }
    const request: ExtractRequestBody = {
      source: this.source,
      target: this.target,
      method: this.method,
      k: this.k,
    };
    if (this.method !== "max_capacity") {
      if (this.draft.agendaId !== null) {
        request.agenda_id = this.draft.agendaId;
      } else if (this.draft.text.trim()) {
        request.agenda_text = this.draft.text.trim();
        request.agenda_category = this.draft.category;
      } else {
        return { ok: false, reason: `method ${this.method} needs an agenda` };
      }
    }
    return { ok: true, request };
  }

  trackJob(jobId: string, request: ExtractRequestBody, feedMode: "sse" | "poll" | null): void {
    this.jobs.set(jobId, {
      jobId,
      request,
      state: "queued",
      steps: [],
      feedMode,
      storylineId: null,
      error: null,
    });
    this.notify();
  }

  applyStep(jobId: string, step: TraceStep): void {
    const job = this.jobs.get(jobId);
    if (!job) return;
    job.state = "running";
    job.steps.push(step);
    this.notify();
  }

  finishJob(jobId: string, end: EndEvent): void {
    const job = this.jobs.get(jobId);
    if (!job) return;
    job.state = end.state;
    job.storylineId = end.storyline_id;
    job.error = end.error;
    this.notify();
  }

  setFeedMode(jobId: string, mode: "sse" | "poll"): void {
    const job = this.jobs.get(jobId);
    if (job && job.feedMode !== mode) {
      job.feedMode = mode;
      this.notify();
    }
  }

  pin(storylineId: string): void {
    this.lastError = null;
    if (this.pins.includes(storylineId)) {
      this.lastError = `${storylineId} is already pinned`;
    } else if (this.pins.length >= MAX_PINS) {
      this.lastError = `comparison holds at most ${MAX_PINS} storylines`;
    } else {
      this.pins = [...this.pins, storylineId];
    }
    this.notify();
  }

  unpin(storylineId: string): void {
    this.pins = this.pins.filter((id) => id !== storylineId);
    this.notify();
  }

  comparisonActive(): boolean {
    return this.pins.length >= MIN_PINS_FOR_COMPARISON;
  }

  /** Rebuild job and storyline listings from the server after a reload. */
  hydrate(storylines: StorylineListPayload, jobs: JobListPayload): void {
    this.storylines.clear();
    for (const row of storylines.storylines) {
      this.storylines.set(row.id, row);
    }
    for (const job of jobs.jobs) {
      if (!this.jobs.has(job.job_id)) {
        this.jobs.set(job.job_id, {
          jobId: job.job_id,
          request: job.request as unknown as ExtractRequestBody,
          state: job.state,
          steps: [],
          feedMode: null,
          storylineId: job.storyline_id,
          error: job.error,
        });
      }
    }
    this.notify();
  }

  upsertStoryline(row: StorylineRow): void {
    this.storylines.set(row.id, row);
    this.notify();
  }
}
