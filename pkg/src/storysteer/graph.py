"""Temporally constrained coherence DAG: construction, MST-threshold
sparsification, and reachability queries."""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from datetime import datetime
from typing import Iterable, Mapping

import numpy as np

from .corpus import Corpus
from .representation import (
    DocumentRepresentation,
    angular_similarity,
    jensen_shannon_divergence,
)


class GraphError(ValueError):
    """Invalid graph construction or query."""


def coherence(u: DocumentRepresentation, v: DocumentRepresentation) -> float:
    """Pairwise coherence: geometric mean of spatial and topical similarity.

    theta = sqrt(S(z_u, z_v) * T(p_u, p_v)) with T = 1 - JSD(p_u, p_v).
    Symmetric as a value; the graph keeps only the temporally forward edge.
    """
    spatial = angular_similarity(u.z, v.z)
    topical = 1.0 - jensen_shannon_divergence(u.p, v.p)
    product = spatial * topical
    return math.sqrt(product) if product > 0.0 else 0.0


class CoherenceGraph:
    """Directed acyclic graph over documents with edge weights in [0, 1].

    Out-adjacency lists are sorted by weight descending, ties by target id, so
    candidate enumeration during search is deterministic. Immutable once built;
    reachability queries are read-only and safe to run concurrently.
    """

    def __init__(
        self,
        nodes: Iterable[str],
        weights: Mapping[tuple[str, str], float],
        timestamps: Mapping[str, datetime],
        titles: Mapping[str, str],
    ):
        self.nodes: list[str] = list(nodes)
        self._node_set = set(self.nodes)
        self._weights: dict[tuple[str, str], float] = dict(weights)
        self.timestamps: dict[str, datetime] = dict(timestamps)
        self.titles: dict[str, str] = dict(titles)

        for (src, dst), weight in self._weights.items():
            if not 0.0 <= weight <= 1.0:
                raise GraphError(f"edge {src}->{dst} weight {weight} outside [0, 1]")
            if self.timestamps[dst] <= self.timestamps[src]:
                raise GraphError(f"edge {src}->{dst} violates temporal order")

        self.adjacency: dict[str, list[tuple[str, float]]] = {
            node: [] for node in self.nodes
        }
        self.reverse_adjacency: dict[str, list[tuple[str, float]]] = {
            node: [] for node in self.nodes
        }
        for (src, dst), weight in self._weights.items():
            self.adjacency[src].append((dst, weight))
            self.reverse_adjacency[dst].append((src, weight))
        for node in self.nodes:
            self.adjacency[node].sort(key=lambda item: (-item[1], item[0]))
            self.reverse_adjacency[node].sort(key=lambda item: (-item[1], item[0]))

        self._reach_cache: dict[tuple[str, str], bool] = {}

    # -- basic queries ------------------------------------------------------

    def __contains__(self, node: str) -> bool:
        return node in self._node_set

    @property
    def edge_count(self) -> int:
        return len(self._weights)

    def weight(self, src: str, dst: str) -> float:
        try:
            return self._weights[(src, dst)]
        except KeyError:
            raise GraphError(f"no edge {src}->{dst}") from None

    def has_edge(self, src: str, dst: str) -> bool:
        return (src, dst) in self._weights

    def out_edges(self, node: str) -> list[tuple[str, float]]:
        return self.adjacency[node]

    def edges(self) -> dict[tuple[str, str], float]:
        return dict(self._weights)

    # -- reachability -------------------------------------------------------

    def can_reach_target(
        self, start: str, target: str, visited: Iterable[str] = ()
    ) -> bool:
        """True iff a directed path start ~> target avoids every visited node."""
        if start not in self._node_set or target not in self._node_set:
            raise GraphError(f"unknown node in reachability query: {start!r}/{target!r}")
        blocked = visited if isinstance(visited, (set, frozenset)) else set(visited)
        if start in blocked or target in blocked:
            return False
        if start == target:
            return True
        if not blocked:
            cached = self._reach_cache.get((start, target))
            if cached is not None:
                return cached
        # iterative DFS; the DAG guarantees termination without a seen-check,
        # but the check bounds work on dense graphs
        seen = {start}
        stack = [start]
        found = False
        while stack:
            node = stack.pop()
            for succ, _ in self.adjacency[node]:
                if succ == target:
                    found = True
                    stack.clear()
                    break
                if succ not in seen and succ not in blocked:
                    seen.add(succ)
                    stack.append(succ)
        if not blocked:
            self._reach_cache[(start, target)] = found
        return found

    # -- serialization ------------------------------------------------------

    def to_json_dict(self) -> dict:
        """Export shape used by the service and UI; weights keep full precision."""
        return {
            "nodes": [
                {
                    "id": node,
                    "title": self.titles[node],
                    "date": self.timestamps[node].isoformat(),
                }
                for node in self.nodes
            ],
            "edges": [
                {"src": src, "dst": dst, "weight": weight}
                for (src, dst), weight in sorted(self._weights.items())
            ],
        }


def can_reach_target(
    graph: CoherenceGraph, start: str, target: str, visited: Iterable[str] = ()
) -> bool:
    return graph.can_reach_target(start, target, visited)


def build_graph(
    representations: Mapping[str, DocumentRepresentation], corpus: Corpus
) -> CoherenceGraph:
    """Full coherence DAG: one edge per strictly time-ordered document pair."""
    missing = [doc.id for doc in corpus if doc.id not in representations]
    if missing:
        raise GraphError(f"missing representation for ids {missing[:5]}")
    for doc in corpus:
        rep = representations[doc.id]
        if float(np.linalg.norm(rep.z)) == 0.0:
            raise GraphError(
                f"document {doc.id!r} has a zero-vector projection; "
                "coherence is undefined for it"
            )

    docs = sorted(corpus, key=lambda d: (d.timestamp, d.id))
    weights: dict[tuple[str, str], float] = {}
    for i, earlier in enumerate(docs):
        rep_u = representations[earlier.id]
        for later in docs[i + 1 :]:
            if later.timestamp <= earlier.timestamp:
                continue
            weights[(earlier.id, later.id)] = coherence(rep_u, representations[later.id])
    return CoherenceGraph(
        nodes=corpus.ids,
        weights=weights,
        timestamps={doc.id: doc.timestamp for doc in corpus},
        titles={doc.id: doc.title for doc in corpus},
    )


@dataclass
class SparsificationReport:
    mst_min_weight: float
    threshold: float
    edges_before: int
    edges_after: int
    tree_edges: list[tuple[str, str]] = field(default_factory=list)

    def to_dict(self) -> dict:
        return {
            "mst_min_weight": self.mst_min_weight,
            "threshold": self.threshold,
            "edges_before": self.edges_before,
            "edges_after": self.edges_after,
            "tree_edges": [list(pair) for pair in self.tree_edges],
        }


class _UnionFind:
    def __init__(self, items: Iterable[str]):
        self.parent = {item: item for item in items}

    def find(self, item: str) -> str:
        root = item
        while self.parent[root] != root:
            root = self.parent[root]
        while self.parent[item] != root:
            self.parent[item], item = root, self.parent[item]
        return root

    def union(self, a: str, b: str) -> bool:
        ra, rb = self.find(a), self.find(b)
        if ra == rb:
            return False
        self.parent[rb] = ra
        return True


def _undirected_components(nodes: list[str], pairs: Iterable[tuple[str, str]]) -> list[set[str]]:
    uf = _UnionFind(nodes)
    for a, b in pairs:
        uf.union(a, b)
    groups: dict[str, set[str]] = {}
    for node in nodes:
        groups.setdefault(uf.find(node), set()).add(node)
    return list(groups.values())


def sparsify(
    graph: CoherenceGraph, tau: float
) -> tuple[CoherenceGraph, SparsificationReport]:
    """Drop weak edges using a maximum-spanning-tree floor.

    The threshold is tau times the minimum edge weight of a maximum spanning
    tree over the undirected weighted view. Edges at or above the threshold
    survive, and tree-backed edges always survive, so the undirected view
    stays connected for every tau.
    """
    if tau < 0.0:
        raise GraphError("tau must be >= 0")
    if not graph.nodes:
        raise GraphError("cannot sparsify an empty graph")

    undirected: dict[tuple[str, str], float] = {}
    for (src, dst), weight in graph.edges().items():
        key = (src, dst) if src < dst else (dst, src)
        prev = undirected.get(key)
        if prev is None or weight > prev:
            undirected[key] = weight

    if len(graph.nodes) <= 1:
        report = SparsificationReport(0.0, 0.0, graph.edge_count, graph.edge_count)
        return graph, report

    components = _undirected_components(graph.nodes, undirected.keys())
    if len(components) > 1:
        sizes = sorted((len(c) for c in components), reverse=True)
        raise GraphError(
            f"graph is not weakly connected: {len(components)} components "
            f"with sizes {sizes}"
        )

    # Kruskal on weight descending; deterministic tie order by endpoint ids
    ordered = sorted(undirected.items(), key=lambda item: (-item[1], item[0]))
    uf = _UnionFind(graph.nodes)
    tree: set[tuple[str, str]] = set()
    mst_min = math.inf
    for (a, b), weight in ordered:
        if uf.union(a, b):
            tree.add((a, b))
            mst_min = min(mst_min, weight)
            if len(tree) == len(graph.nodes) - 1:
                break

    threshold = tau * mst_min
    kept: dict[tuple[str, str], float] = {}
    for (src, dst), weight in graph.edges().items():
        key = (src, dst) if src < dst else (dst, src)
        if weight >= threshold or key in tree:
            kept[(src, dst)] = weight

    sparsified = CoherenceGraph(
        nodes=graph.nodes,
        weights=kept,
        timestamps=graph.timestamps,
        titles=graph.titles,
    )
    report = SparsificationReport(
        mst_min_weight=mst_min,
        threshold=threshold,
        edges_before=graph.edge_count,
        edges_after=sparsified.edge_count,
        tree_edges=sorted(tree),
    )
    return sparsified, report
