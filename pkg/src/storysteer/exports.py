"""Visualization exports: narrative trails over the 2D projection and a
narrative map (union DAG) as DOT plus JSON. Pure functions, golden-file
stable."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .corpus import Corpus
from .pathfinding import Storyline
from .representation import DocumentRepresentation


class ExportError(ValueError):
    pass


# colorbrewer Dark2; cycled when there are more style classes than colors
_PALETTE = (
    "#1b9e77",
    "#d95f02",
    "#7570b3",
    "#e7298a",
    "#66a61e",
    "#e6ab02",
    "#a6761d",
    "#666666",
)

DENSITY_GRID_SIZE = 40


def _round(value: float) -> float:
    return round(float(value), 12)


def density_grid(
    points: list[tuple[float, float]], grid_size: int = DENSITY_GRID_SIZE
) -> dict:
    """Gaussian KDE of document positions on a regular grid (Scott bandwidth,
    3-bandwidth margin). Degenerate spreads fall back to unit bandwidth."""
    if not points:
        raise ExportError("density grid needs at least one point")
    xs = np.array([p[0] for p in points], dtype=float)
    ys = np.array([p[1] for p in points], dtype=float)
    n = len(points)
    scott = n ** (-1.0 / 6.0)  # d=2: n^(-1/(d+4))
    hx = float(np.std(xs)) * scott or 1.0
    hy = float(np.std(ys)) * scott or 1.0
    gx = np.linspace(xs.min() - 3 * hx, xs.max() + 3 * hx, grid_size)
    gy = np.linspace(ys.min() - 3 * hy, ys.max() + 3 * hy, grid_size)
    dx = (gx[:, None] - xs[None, :]) / hx
    dy = (gy[:, None] - ys[None, :]) / hy
    # values[i][j] = density at (gx[j], gy[i])
    kern_x = np.exp(-0.5 * dx * dx)
    kern_y = np.exp(-0.5 * dy * dy)
    values = (kern_y @ kern_x.T) / (n * 2.0 * np.pi * hx * hy)
    return {
        "x": [_round(v) for v in gx],
        "y": [_round(v) for v in gy],
        "values": [[_round(v) for v in row] for row in values],
        "bandwidth": [_round(hx), _round(hy)],
    }


def _style_key(storyline: Storyline) -> str:
    return storyline.agenda_id if storyline.agenda_id is not None else storyline.method


def export_trails(
    storylines: list[Storyline],
    representations: dict[str, DocumentRepresentation],
    grid_size: int = DENSITY_GRID_SIZE,
) -> dict:
    """Plot data for the trails view: one polyline per storyline in projection
    coordinates, endpoint markers, shared-node flags, and a document-density
    background grid."""
    if not storylines:
        raise ExportError("no storylines to export")
    paths = []
    usage: dict[str, int] = {}
    endpoints: dict[tuple[str, str], dict] = {}
    for storyline in storylines:
        points = []
        for doc_id in storyline.doc_ids:
            if doc_id not in representations:
                raise ExportError(f"no representation for document {doc_id!r}")
            z = representations[doc_id].z
            points.append({"doc_id": doc_id, "x": _round(z[0]), "y": _round(z[1])})
            usage[doc_id] = usage.get(doc_id, 0) + 1
        paths.append(
            {
                "method": storyline.method,
                "agenda_id": storyline.agenda_id,
                "style": _style_key(storyline),
                "capacity": storyline.capacity,
                "points": points,
            }
        )
        for role, doc_id in (("source", storyline.doc_ids[0]), ("target", storyline.doc_ids[-1])):
            z = representations[doc_id].z
            endpoints[(doc_id, role)] = {
                "doc_id": doc_id,
                "role": role,
                "x": _round(z[0]),
                "y": _round(z[1]),
            }
    shared = sorted(doc_id for doc_id, count in usage.items() if count >= 2)
    all_points = [(rep.z[0], rep.z[1]) for rep in representations.values()]
    return {
        "schema": "trails/v1",
        "paths": paths,
        "endpoints": [endpoints[key] for key in sorted(endpoints)],
        "shared_doc_ids": shared,
        "density": density_grid(all_points, grid_size),
    }


# ---------------------------------------------------------------------------
# narrative map


def _dot_escape(text: str) -> str:
    return text.replace("\\", "\\\\").replace('"', '\\"')


@dataclass(frozen=True)
class NarrativeMap:
    dot: str
    data: dict


def export_map(storylines: list[Storyline], corpus: Corpus) -> NarrativeMap:
    """Union DAG of the given storylines. Nodes are labeled title + date;
    sources pin to the top rank, targets to the bottom; every agenda (or the
    bare method for unsteered paths) gets its own edge style class."""
    if not storylines:
        raise ExportError("no storylines to export")
    node_ids: set[str] = set()
    edges: dict[tuple[str, str, str], None] = {}
    sources: set[str] = set()
    targets: set[str] = set()
    styles: list[str] = []
    for storyline in storylines:
        style = _style_key(storyline)
        if style not in styles:
            styles.append(style)
        node_ids.update(storyline.doc_ids)
        sources.add(storyline.doc_ids[0])
        targets.add(storyline.doc_ids[-1])
        for src, dst in zip(storyline.doc_ids, storyline.doc_ids[1:]):
            edges[(src, dst, style)] = None
    missing = sorted(doc_id for doc_id in node_ids if doc_id not in corpus)
    if missing:
        raise ExportError(f"storyline document {missing[0]!r} not in corpus")
    style_colors = {
        style: _PALETTE[i % len(_PALETTE)] for i, style in enumerate(sorted(styles))
    }
    ordered_nodes = sorted(node_ids, key=lambda d: (corpus[d].timestamp, d))

    lines = ["digraph narrative_map {", "  rankdir=TB;", '  node [shape=box, style="rounded"];']
    for doc_id in ordered_nodes:
        doc = corpus[doc_id]
        label = _dot_escape(f"{doc.title}\n{doc.timestamp.date().isoformat()}")
        label = label.replace("\n", "\\n")
        lines.append(f'  "{_dot_escape(doc_id)}" [label="{label}"];')
    for src, dst, style in sorted(edges):
        color = style_colors[style]
        lines.append(
            f'  "{_dot_escape(src)}" -> "{_dot_escape(dst)}" '
            f'[color="{color}", class="{_dot_escape(style)}"];'
        )
    rank_min = " ".join(f'"{_dot_escape(d)}";' for d in sorted(sources))
    rank_max = " ".join(f'"{_dot_escape(d)}";' for d in sorted(targets))
    lines.append(f"  {{ rank=min; {rank_min} }}")
    lines.append(f"  {{ rank=max; {rank_max} }}")
    lines.append("}")

    data = {
        "schema": "map/v1",
        "nodes": [
            {
                "id": doc_id,
                "title": corpus[doc_id].title,
                "date": corpus[doc_id].timestamp.date().isoformat(),
            }
            for doc_id in ordered_nodes
        ],
        "edges": [
            {"src": src, "dst": dst, "style": style} for src, dst, style in sorted(edges)
        ],
        "sources": sorted(sources),
        "targets": sorted(targets),
        "styles": style_colors,
    }
    return NarrativeMap(dot="\n".join(lines) + "\n", data=data)
