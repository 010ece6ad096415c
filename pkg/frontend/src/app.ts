/** Workbench orchestration: boots the panels, routes user actions to the
 * service client, and re-renders on state changes.
 */

import { ApiClient } from "./api.js";
import { renderComparison, type ComparisonData } from "./compare.js";
import { openStepFeed, type StepFeedOptions } from "./events.js";
import { renderProjection } from "./projection.js";
import { renderJobs, renderRunPanel } from "./runpanel.js";
import { WorkbenchState } from "./state.js";
import type {
  AgendaInfo,
  GraphSummaryPayload,
  ProjectionPayload,
  StorylineDetailPayload,
  TrailsPayload,
} from "./types.js";

const SHELL = `
  <header id="status-bar"></header>
  <main class="workbench-grid">
    <section class="panel" id="projection-section">
      <h2>projection explorer</h2>
      <div id="projection-panel"></div>
    </section>
    <section class="panel" id="run-section">
      <h2>agenda runs</h2>
      <div id="run-panel"></div>
      <div id="jobs-panel"></div>
    </section>
    <section class="panel" id="compare-section">
      <h2>comparison</h2>
      <div id="compare-panel"></div>
    </section>
  </main>
`;

export interface WorkbenchOptions {
  feed?: StepFeedOptions;
}

export class Workbench {
  readonly state = new WorkbenchState();
  private readonly root: HTMLElement;
  private readonly client: ApiClient;
  private readonly feedOptions: StepFeedOptions;

  private catalog: AgendaInfo[] = [];
  private projectionData: ProjectionPayload | null = null;
  private graphSummary: GraphSummaryPayload | null = null;
  private comparison: ComparisonData | null = null;
  private lastTrails: TrailsPayload | null = null;
  private readonly detailCache = new Map<string, StorylineDetailPayload>();
  private readonly pending = new Set<Promise<unknown>>();
  private comparisonEpoch = 0;

  constructor(root: HTMLElement, client: ApiClient, options: WorkbenchOptions = {}) {
    this.root = root;
    this.client = client;
    this.feedOptions = options.feed ?? {};
  }

  /** Track an async action so tests (and shutdown) can await quiescence. */
  private track<T>(promise: Promise<T>): Promise<T> {
    this.pending.add(promise);
    promise.catch(() => undefined).finally(() => this.pending.delete(promise));
    return promise;
  }

  async settle(): Promise<void> {
    while (this.pending.size > 0) {
      await Promise.allSettled([...this.pending]);
    }
  }

  async boot(): Promise<void> {
    this.root.innerHTML = SHELL;
    const [corpus, projection, agendas, summary, storylines, jobs] = await Promise.all([
      this.client.corpus(),
      this.client.projection(),
      this.client.agendas(),
      this.client.graphSummary(),
      this.client.storylines(),
      this.client.jobs(),
    ]);
    this.projectionData = projection;
    this.catalog = agendas.agendas;
    this.graphSummary = summary;
    this.state.setDocs(corpus.documents);
    this.state.hydrate(storylines, jobs);
    this.state.subscribe(() => this.render());
    this.render();
  }

  run(): void {
    const built = this.state.buildRequest();
    if (!built.ok) {
      // inline error, nothing sent
      this.state.setError(built.reason);
      return;
    }
    this.state.setError(null);
    const request = built.request;
    this.track(
      this.client.extract(request).then((accepted) => {
        this.state.trackJob(accepted.job_id, request, null);
        this.watch(accepted.job_id);
      }).catch((error) => {
        this.state.setError(String(error instanceof Error ? error.message : error));
      }),
    );
  }

  private watch(jobId: string): void {
    const feed = openStepFeed(
      this.client,
      jobId,
      {
        onStep: (step) => this.state.applyStep(jobId, step),
        onEnd: (end) => {
          this.state.finishJob(jobId, end);
          if (end.storyline_id) {
            this.afterStoryline(end.storyline_id);
          }
        },
        onError: () => this.state.setFeedMode(jobId, "poll"),
      },
      this.feedOptions,
    );
    this.state.setFeedMode(jobId, feed.mode);
  }

  private afterStoryline(storylineId: string): void {
    this.track(
      Promise.all([this.client.storylines(), this.client.storyline(storylineId)]).then(
        ([listing, detail]) => {
          for (const row of listing.storylines) {
            this.state.storylines.set(row.id, row);
          }
          this.detailCache.set(storylineId, detail);
          this.lastTrails = detail.trails;
          this.state.upsertStoryline(
            listing.storylines.find((row) => row.id === storylineId) ?? {
              id: storylineId,
              job_id: detail.job_id,
              ...detail.storyline,
            },
          );
        },
      ),
    );
  }

  pin(storylineId: string): void {
    this.state.pin(storylineId);
    this.refreshComparison();
  }

  unpin(storylineId: string): void {
    this.state.unpin(storylineId);
    this.refreshComparison();
  }

  private refreshComparison(): void {
    const pins = [...this.state.pins];
    const epoch = ++this.comparisonEpoch;
    if (pins.length < 2) {
      this.comparison = null;
      this.render();
      return;
    }
    const pairs: [string, string][] = [];
    for (let i = 0; i < pins.length; i += 1) {
      for (let j = i + 1; j < pins.length; j += 1) {
        pairs.push([pins[i]!, pins[j]!]);
      }
    }
    this.track(
      Promise.all([
        Promise.all(pins.map((id) => this.detail(id))),
        Promise.all(pairs.map(([a, b]) => this.client.jaccard(a, b))),
        this.client.unionMap(pins),
      ]).then(([details, jaccards, unionMap]) => {
        if (epoch !== this.comparisonEpoch) return; // pins changed underneath
        this.comparison = { details, jaccards, unionMap: unionMap.map };
        this.lastTrails = unionMap.trails;
        this.render();
      }).catch((error) => {
        this.state.setError(String(error instanceof Error ? error.message : error));
      }),
    );
  }

  private detail(storylineId: string): Promise<StorylineDetailPayload> {
    const cached = this.detailCache.get(storylineId);
    if (cached) return Promise.resolve(cached);
    return this.client.storyline(storylineId).then((detail) => {
      this.detailCache.set(storylineId, detail);
      return detail;
    });
  }

  private panel(id: string): HTMLElement {
    const node = this.root.querySelector<HTMLElement>(`#${id}`);
    if (!node) throw new Error(`missing panel #${id}`);
    return node;
  }

  private render(): void {
    const status = this.panel("status-bar");
    if (this.graphSummary) {
      status.textContent =
        `${this.graphSummary.nodes} documents · ${this.graphSummary.edges} edges` +
        ` · tau ${this.graphSummary.tau}`;
    }

    if (this.projectionData) {
      renderProjection(
        this.panel("projection-panel"),
        this.projectionData,
        this.lastTrails,
        { source: this.state.source, target: this.state.target },
        { onSelect: (docId) => this.state.selectDoc(docId) },
      );
    }

    renderRunPanel(this.panel("run-panel"), this.state, this.catalog, {
      onRun: () => this.run(),
    });

    renderJobs(this.panel("jobs-panel"), this.state, {
      onPin: (storylineId) => this.pin(storylineId),
    });

    const titles = new Map(
      [...this.state.docs.values()].map((doc) => [doc.id, { title: doc.title, date: doc.date }]),
    );
    renderComparison(this.panel("compare-panel"), this.comparison, titles, {
      onUnpin: (storylineId) => this.unpin(storylineId),
    });
  }
}

/** Entry point used by index.html. */
export async function mount(root: HTMLElement, client: ApiClient): Promise<Workbench> {
  const workbench = new Workbench(root, client);
  await workbench.boot();
  return workbench;
}
