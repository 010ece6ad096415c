/** Storyline comparison: one column per pinned storyline, shared documents
 * linked visually, a server-computed jaccard badge per pair, and the union
 * narrative map.
 *
 * The map render walks the server payload in its given node order and takes
 * edge colors from the payload's style table; no layout runs client-side.
 */

import type {
  JaccardPayload,
  MapPayload,
  StorylineDetailPayload,
} from "./types.js";

const SVG_NS = "http://www.w3.org/2000/svg";

export interface ComparisonData {
  details: StorylineDetailPayload[]; // one per pin, pin order
  jaccards: JaccardPayload[]; // one per unordered pair
  unionMap: MapPayload;
}

function div(className: string, text?: string): HTMLDivElement {
  const node = document.createElement("div");
  node.className = className;
  if (text !== undefined) node.textContent = text;
  return node;
}

function sharedDocIds(details: StorylineDetailPayload[]): Set<string> {
  const counts = new Map<string, number>();
  for (const detail of details) {
    for (const docId of new Set(detail.storyline.doc_ids)) {
      counts.set(docId, (counts.get(docId) ?? 0) + 1);
    }
  }
  return new Set([...counts.entries()].filter(([, n]) => n >= 2).map(([id]) => id));
}

function renderColumn(
  detail: StorylineDetailPayload,
  shared: Set<string>,
  titles: Map<string, { title: string; date: string }>,
  onUnpin: (id: string) => void,
): HTMLElement {
  const column = div("compare-column");
  column.dataset.storylineId = detail.id;

  const header = div("compare-header");
  const agenda = detail.storyline.agenda_id ?? "(unsteered)";
  header.appendChild(div("compare-title", `${detail.id} · ${detail.storyline.method}`));
  header.appendChild(div("compare-agenda", agenda));
  header.appendChild(
    div("compare-capacity", `bottleneck ${detail.storyline.capacity.toFixed(4)}`),
  );
  const unpin = document.createElement("button");
  unpin.className = "unpin-button";
  unpin.textContent = "unpin";
  unpin.addEventListener("click", () => onUnpin(detail.id));
  header.appendChild(unpin);
  column.appendChild(header);

  for (const docId of detail.storyline.doc_ids) {
    const info = titles.get(docId);
    const row = div(shared.has(docId) ? "compare-doc shared-doc" : "compare-doc");
    row.dataset.docId = docId;
    row.appendChild(div("doc-title", info?.title ?? docId));
    row.appendChild(div("doc-date", info?.date ?? ""));
    column.appendChild(row);
  }
  return column;
}

function renderBadges(container: HTMLElement, jaccards: JaccardPayload[]): void {
  const strip = div("jaccard-strip");
  for (const pair of jaccards) {
    const badge = div("jaccard-badge", `${pair.a} vs ${pair.b}: ${pair.jaccard.toFixed(4)}`);
    badge.dataset.pair = `${pair.a}|${pair.b}`;
    badge.dataset.jaccard = String(pair.jaccard);
    strip.appendChild(badge);
  }
  container.appendChild(strip);
}

/** Vertical layered render of the union DAG: rows follow the server's node
 * order, edges are cubic arcs in a left gutter, colored per style. */
function renderMap(container: HTMLElement, payload: MapPayload): void {
  const data = payload.data;
  const wrap = div("map-view");
  const rowHeight = 34;
  const gutter = 120;
  const height = data.nodes.length * rowHeight;

  const svg = document.createElementNS(SVG_NS, "svg");
  svg.setAttribute("viewBox", `0 0 ${gutter} ${height}`);
  svg.setAttribute("class", "map-edges");
  svg.setAttribute("width", String(gutter));
  svg.setAttribute("height", String(height));

  const rowIndex = new Map(data.nodes.map((node, i) => [node.id, i]));
  for (const edge of data.edges) {
    const from = rowIndex.get(edge.src);
    const to = rowIndex.get(edge.dst);
    if (from === undefined || to === undefined) continue;
    const y1 = from * rowHeight + rowHeight / 2;
    const y2 = to * rowHeight + rowHeight / 2;
    const bulge = Math.min(gutter - 10, 20 + Math.abs(to - from) * 14);
    const path = document.createElementNS(SVG_NS, "path");
    path.setAttribute(
      "d",
      `M ${gutter} ${y1} C ${gutter - bulge} ${y1}, ${gutter - bulge} ${y2}, ${gutter} ${y2}`,
    );
    path.setAttribute("class", "map-edge");
    path.setAttribute("fill", "none");
    path.setAttribute("stroke", data.styles[edge.style] ?? "#888888");
    path.setAttribute("data-style", edge.style);
    svg.appendChild(path);
  }
  wrap.appendChild(svg);

  const list = div("map-nodes");
  for (const node of data.nodes) {
    const classes = ["map-node"];
    if (data.sources.includes(node.id)) classes.push("map-source");
    if (data.targets.includes(node.id)) classes.push("map-target");
    const row = div(classes.join(" "), `${node.title} (${node.date})`);
    row.dataset.docId = node.id;
    row.style.height = `${rowHeight}px`;
    list.appendChild(row);
  }
  wrap.appendChild(list);
  container.appendChild(wrap);

  const dot = document.createElement("details");
  const summary = document.createElement("summary");
  summary.textContent = "DOT source";
  const pre = document.createElement("pre");
  pre.className = "map-dot";
  pre.textContent = payload.dot;
  dot.append(summary, pre);
  container.appendChild(dot);
}

export interface CompareHandlers {
  onUnpin(storylineId: string): void;
}

export function renderComparison(
  container: HTMLElement,
  data: ComparisonData | null,
  titles: Map<string, { title: string; date: string }>,
  handlers: CompareHandlers,
): void {
  container.textContent = "";
  if (data === null || data.details.length < 2) {
    container.appendChild(
      div("compare-placeholder", "pin at least two storylines to compare them"),
    );
    return;
  }
  renderBadges(container, data.jaccards);
  const columns = div("compare-columns");
  const shared = sharedDocIds(data.details);
  for (const detail of data.details) {
    columns.appendChild(renderColumn(detail, shared, titles, handlers.onUnpin));
  }
  container.appendChild(columns);
  renderMap(container, data.unionMap);
}
