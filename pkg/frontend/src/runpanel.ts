/** Agenda editor and run panel: catalog picker, free-text draft with a
 * category tag, method and k controls, and live job cards fed by the step
 * stream (candidates plus the chosen ranking per step).
 */

import type { WorkbenchState, JobView } from "./state.js";
import type { AgendaInfo, ExtractMethod, TraceStep } from "./types.js";

export const METHODS: ExtractMethod[] = ["max_capacity", "keyword", "llm_direct", "llm_cot"];
export const CATEGORIES = ["literal", "semantic", "counter"];
const CUSTOM = "__custom__";

export interface RunPanelHandlers {
  onRun(): void;
}

function option(value: string, label: string, selected: boolean): HTMLOptionElement {
  const node = document.createElement("option");
  node.value = value;
  node.textContent = label;
  node.selected = selected;
  return node;
}

function div(className: string, text?: string): HTMLDivElement {
  const node = document.createElement("div");
  node.className = className;
  if (text !== undefined) node.textContent = text;
  return node;
}

export function renderRunPanel(
  container: HTMLElement,
  state: WorkbenchState,
  catalog: AgendaInfo[],
  handlers: RunPanelHandlers,
): void {
  container.textContent = "";

  const endpoints = div("endpoint-summary");
  const sourceDoc = state.source ? state.docs.get(state.source) : null;
  const targetDoc = state.target ? state.docs.get(state.target) : null;
  endpoints.textContent =
    `source: ${sourceDoc ? `${sourceDoc.title} (${sourceDoc.date})` : "click a point"}` +
    ` → target: ${targetDoc ? `${targetDoc.title} (${targetDoc.date})` : "click another"}`;
  container.appendChild(endpoints);

  // agenda selection: catalog entry or a custom draft
  const agendaSelect = document.createElement("select");
  agendaSelect.id = "agenda-select";
  for (const agenda of catalog) {
    agendaSelect.appendChild(
      option(agenda.id, `${agenda.id} [${agenda.category}]`, state.draft.agendaId === agenda.id),
    );
  }
  agendaSelect.appendChild(option(CUSTOM, "custom agenda…", state.draft.agendaId === null));
  agendaSelect.addEventListener("change", () => {
    state.setDraft({ agendaId: agendaSelect.value === CUSTOM ? null : agendaSelect.value });
  });
  container.appendChild(agendaSelect);

  const agendaText = document.createElement("textarea");
  agendaText.id = "agenda-text";
  agendaText.placeholder = "agenda text";
  agendaText.value = state.draft.text;
  agendaText.disabled = state.draft.agendaId !== null;
  agendaText.addEventListener("input", () => state.setDraft({ text: agendaText.value }));
  container.appendChild(agendaText);

  const categorySelect = document.createElement("select");
  categorySelect.id = "agenda-category";
  for (const category of CATEGORIES) {
    categorySelect.appendChild(option(category, category, state.draft.category === category));
  }
  categorySelect.disabled = state.draft.agendaId !== null;
  categorySelect.addEventListener("change", () => state.setDraft({ category: categorySelect.value }));
  container.appendChild(categorySelect);

  const methodSelect = document.createElement("select");
  methodSelect.id = "method-select";
  for (const method of METHODS) {
    methodSelect.appendChild(option(method, method, state.method === method));
  }
  methodSelect.addEventListener("change", () => state.setMethod(methodSelect.value as ExtractMethod));
  container.appendChild(methodSelect);

  const kWrap = div("k-control");
  const kSlider = document.createElement("input");
  kSlider.type = "range";
  kSlider.id = "k-slider";
  kSlider.min = "1";
  kSlider.max = "10";
  kSlider.value = String(state.k);
  kSlider.addEventListener("input", () => state.setK(Number(kSlider.value)));
  const kLabel = document.createElement("span");
  kLabel.id = "k-value";
  kLabel.textContent = `k=${state.k}`;
  kWrap.append(kSlider, kLabel);
  container.appendChild(kWrap);

  const runButton = document.createElement("button");
  runButton.id = "run-button";
  runButton.textContent = "extract storyline";
  runButton.addEventListener("click", () => handlers.onRun());
  container.appendChild(runButton);

  const error = div("inline-error");
  error.id = "inline-error";
  error.textContent = state.lastError ?? "";
  container.appendChild(error);
}

function renderStep(step: TraceStep): HTMLElement {
  const row = div("step-row");
  row.dataset.step = String(step.step);
  const ranked = step.ranking
    .map((index) => step.candidates.find((c) => c.index === index)?.title ?? `#${index}`)
    .join("  >  ");
  row.appendChild(div("step-node", `@${step.node}`));
  row.appendChild(div("step-candidates", `${step.candidates.length} candidates`));
  row.appendChild(div("step-ranking", ranked));
  row.appendChild(div("step-source", step.source));
  return row;
}

export interface JobCardHandlers {
  onPin(storylineId: string): void;
}

export function renderJobs(
  container: HTMLElement,
  state: WorkbenchState,
  handlers: JobCardHandlers,
): void {
  container.textContent = "";
  const jobs = [...state.jobs.values()].reverse(); // newest first
  for (const job of jobs) {
    container.appendChild(renderJobCard(job, state, handlers));
  }
}

function renderJobCard(job: JobView, state: WorkbenchState, handlers: JobCardHandlers): HTMLElement {
  const card = div(`job-card job-${job.state}`);
  card.dataset.jobId = job.jobId;

  const header = div("job-header");
  const agenda = job.request.agenda_id ?? job.request.agenda_text ?? "(no agenda)";
  header.textContent = `${job.jobId} · ${job.request.method} · ${agenda}`;
  card.appendChild(header);

  const status = div("job-status", job.state + (job.feedMode ? ` (${job.feedMode})` : ""));
  status.className += " job-state-badge";
  card.appendChild(status);

  if (job.error) {
    card.appendChild(div("job-error", job.error));
  }

  const steps = div("job-steps");
  for (const step of job.steps) {
    steps.appendChild(renderStep(step));
  }
  card.appendChild(steps);

  if (job.state === "done" && job.storylineId) {
    const row = state.storylines.get(job.storylineId);
    const summary = div(
      "job-result",
      row
        ? `${job.storylineId}: ${row.doc_ids.length} documents, capacity ${row.capacity.toFixed(4)}`
        : job.storylineId,
    );
    card.appendChild(summary);
    const pin = document.createElement("button");
    pin.className = "pin-button";
    pin.dataset.storylineId = job.storylineId;
    pin.textContent = state.pins.includes(job.storylineId) ? "pinned" : "pin for comparison";
    pin.disabled = state.pins.includes(job.storylineId);
    const storylineId = job.storylineId;
    pin.addEventListener("click", () => handlers.onPin(storylineId));
    card.appendChild(pin);
  }
  return card;
}
