/** Projection explorer: document scatter over density shading, extracted
 * paths as polylines, click-to-select endpoints.
 *
 * All coordinates come from the server's projection payload; this module
 * only applies an affine mapping onto the drawing surface. Density shading
 * is rendered as filled level bands of the server-computed grid.
 */

import type { ProjectionPayload, TrailsPayload } from "./types.js";

const SVG_NS = "http://www.w3.org/2000/svg";
const VIEW_W = 640;
const VIEW_H = 480;
const MARGIN = 24;
const DENSITY_BANDS = 5;

export interface ProjectionSelection {
  source: string | null;
  target: string | null;
}

export interface ProjectionHandlers {
  onSelect(docId: string): void;
}

interface Mapper {
  sx(x: number): number;
  sy(y: number): number;
}

function makeMapper(xs: number[], ys: number[]): Mapper {
  const x0 = Math.min(...xs);
  const x1 = Math.max(...xs);
  const y0 = Math.min(...ys);
  const y1 = Math.max(...ys);
  const spanX = x1 - x0 || 1;
  const spanY = y1 - y0 || 1;
  return {
    sx: (x) => MARGIN + ((x - x0) / spanX) * (VIEW_W - 2 * MARGIN),
    // projection y grows upward, screen y grows downward
    sy: (y) => VIEW_H - MARGIN - ((y - y0) / spanY) * (VIEW_H - 2 * MARGIN),
  };
}

function el(name: string, attrs: Record<string, string>): SVGElement {
  const node = document.createElementNS(SVG_NS, name);
  for (const [key, value] of Object.entries(attrs)) {
    node.setAttribute(key, value);
  }
  return node;
}

function renderDensity(svg: SVGElement, payload: ProjectionPayload, map: Mapper): void {
  const grid = payload.density;
  let peak = 0;
  for (const row of grid.values) {
    for (const value of row) {
      if (value > peak) peak = value;
    }
  }
  if (peak <= 0) return;
  const group = el("g", { class: "density" });
  const cellW = grid.x.length > 1 ? Math.abs(map.sx(grid.x[1]!) - map.sx(grid.x[0]!)) : VIEW_W;
  const cellH = grid.y.length > 1 ? Math.abs(map.sy(grid.y[1]!) - map.sy(grid.y[0]!)) : VIEW_H;
  grid.values.forEach((row, yi) => {
    row.forEach((value, xi) => {
      const band = Math.min(DENSITY_BANDS - 1, Math.floor((value / peak) * DENSITY_BANDS));
      if (band === 0) return;
      group.appendChild(
        el("rect", {
          x: String(map.sx(grid.x[xi]!) - cellW / 2),
          y: String(map.sy(grid.y[yi]!) - cellH / 2),
          width: String(cellW),
          height: String(cellH),
          class: `density-band band-${band}`,
        }),
      );
    });
  });
  svg.appendChild(group);
}

function renderTrails(svg: SVGElement, trails: TrailsPayload, map: Mapper): Set<string> {
  const group = el("g", { class: "trails" });
  const styleOrder: string[] = [];
  for (const path of trails.paths) {
    if (!styleOrder.includes(path.style)) styleOrder.push(path.style);
    const points = path.points
      .map((p) => `${map.sx(p.x).toFixed(1)},${map.sy(p.y).toFixed(1)}`)
      .join(" ");
    const line = el("polyline", {
      points,
      class: `trail trail-style-${styleOrder.indexOf(path.style)}`,
      "data-style": path.style,
    });
    const label = path.agenda_id ? `${path.method} / ${path.agenda_id}` : path.method;
    line.appendChild(
      Object.assign(document.createElementNS(SVG_NS, "title"), { textContent: label }),
    );
    group.appendChild(line);
  }
  for (const endpoint of trails.endpoints) {
    group.appendChild(
      el("rect", {
        x: String(map.sx(endpoint.x) - 5),
        y: String(map.sy(endpoint.y) - 5),
        width: "10",
        height: "10",
        class: `trail-endpoint trail-${endpoint.role}`,
        "data-doc-id": endpoint.doc_id,
      }),
    );
  }
  svg.appendChild(group);
  return new Set(trails.shared_doc_ids);
}

export function renderProjection(
  container: HTMLElement,
  payload: ProjectionPayload,
  trails: TrailsPayload | null,
  selection: ProjectionSelection,
  handlers: ProjectionHandlers,
): void {
  container.textContent = "";
  const svg = el("svg", {
    viewBox: `0 0 ${VIEW_W} ${VIEW_H}`,
    class: "projection-svg",
    role: "img",
  });
  const map = makeMapper(payload.density.x, payload.density.y);

  renderDensity(svg, payload, map);
  const shared = trails ? renderTrails(svg, trails, map) : new Set<string>();

  const pointsGroup = el("g", { class: "points" });
  for (const point of payload.points) {
    const classes = ["doc-point"];
    if (point.doc_id === selection.source) classes.push("selected-source");
    if (point.doc_id === selection.target) classes.push("selected-target");
    if (shared.has(point.doc_id)) classes.push("shared-doc");
    const circle = el("circle", {
      cx: map.sx(point.x).toFixed(1),
      cy: map.sy(point.y).toFixed(1),
      r: "5",
      class: classes.join(" "),
      "data-doc-id": point.doc_id,
    });
    circle.appendChild(
      Object.assign(document.createElementNS(SVG_NS, "title"), {
        textContent: `${point.title} (${point.date})`,
      }),
    );
    circle.addEventListener("click", () => handlers.onSelect(point.doc_id));
    pointsGroup.appendChild(circle);
  }
  svg.appendChild(pointsGroup);
  container.appendChild(svg);
}
