"""Storyline extraction: the agenda-agnostic maximum-capacity baseline and the
agenda-driven search with an injectable steering oracle."""

from __future__ import annotations

import heapq
import itertools
import math
import time
from collections import deque
from dataclasses import dataclass, field
from typing import Callable, Mapping

from .graph import CoherenceGraph
from .steering import (
    Agenda,
    RankCandidate,
    RankRequest,
    RankResponse,
    SteeringOracle,
)

MAX_CONTEXT_TITLES = 10


class PathError(ValueError):
    """Invalid search input or broken internal path state."""


@dataclass(frozen=True)
class Storyline:
    """A temporally ordered document path with its bottleneck capacity."""

    doc_ids: tuple[str, ...]
    capacity: float
    method: str
    agenda_id: str | None = None
    oracle_call_count: int = 0
    elapsed: float = 0.0

    def to_dict(self, include_elapsed: bool = True) -> dict:
        out: dict = {
            "doc_ids": list(self.doc_ids),
            "capacity": self.capacity,
            "method": self.method,
            "agenda_id": self.agenda_id,
            "oracle_call_count": self.oracle_call_count,
        }
        if include_elapsed:
            out["elapsed"] = self.elapsed
        return out

    @staticmethod
    def from_dict(data: Mapping) -> "Storyline":
        return Storyline(
            doc_ids=tuple(data["doc_ids"]),
            capacity=float(data["capacity"]),
            method=data["method"],
            agenda_id=data.get("agenda_id"),
            oracle_call_count=int(data.get("oracle_call_count", 0)),
            elapsed=float(data.get("elapsed", 0.0)),
        )


@dataclass(frozen=True)
class TraceCandidate:
    index: int  # 1-based position shown to the oracle
    doc_id: str
    title: str
    weight: float
    capacity: float

    def to_dict(self) -> dict:
        return {
            "index": self.index,
            "doc_id": self.doc_id,
            "title": self.title,
            "weight": self.weight,
            "capacity": self.capacity,
        }


@dataclass(frozen=True)
class TraceStep:
    """One oracle consultation: the popped node, its candidate pool, and the
    ranking that ordered the pushes."""

    step: int
    node: str
    candidates: tuple[TraceCandidate, ...]
    ranking: tuple[int, ...]
    source: str

    def to_dict(self) -> dict:
        return {
            "step": self.step,
            "node": self.node,
            "candidates": [c.to_dict() for c in self.candidates],
            "ranking": list(self.ranking),
            "source": self.source,
        }


@dataclass
class SearchTrace:
    steps: list[TraceStep] = field(default_factory=list)

    def rankings(self) -> list[list[int]]:
        return [list(step.ranking) for step in self.steps]

    def to_dict(self) -> dict:
        return {"steps": [step.to_dict() for step in self.steps]}

    @staticmethod
    def from_dict(data: Mapping) -> "SearchTrace":
        steps = []
        for raw in data.get("steps", []):
            steps.append(
                TraceStep(
                    step=int(raw["step"]),
                    node=raw["node"],
                    candidates=tuple(
                        TraceCandidate(
                            index=int(c["index"]),
                            doc_id=c["doc_id"],
                            title=c["title"],
                            weight=float(c["weight"]),
                            capacity=float(c["capacity"]),
                        )
                        for c in raw["candidates"]
                    ),
                    ranking=tuple(int(r) for r in raw["ranking"]),
                    source=raw["source"],
                )
            )
        return SearchTrace(steps=steps)


def _make_storyline(
    graph: CoherenceGraph,
    doc_ids: list[str],
    method: str,
    agenda_id: str | None,
    oracle_calls: int,
    elapsed: float,
) -> Storyline:
    # recompute and assert every invariant rather than trusting the search
    if len(doc_ids) != len(set(doc_ids)):
        raise PathError("storyline repeats a document")
    capacities = []
    for u, v in zip(doc_ids, doc_ids[1:]):
        if not graph.has_edge(u, v):
            raise PathError(f"storyline uses a non-edge {u}->{v}")
        if graph.timestamps[v] <= graph.timestamps[u]:
            raise PathError(f"storyline is not temporally increasing at {u}->{v}")
        capacities.append(graph.weight(u, v))
    if not capacities:
        raise PathError("storyline must contain at least one edge")
    return Storyline(
        doc_ids=tuple(doc_ids),
        capacity=min(capacities),
        method=method,
        agenda_id=agenda_id,
        oracle_call_count=oracle_calls,
        elapsed=elapsed,
    )


def _check_endpoints(graph: CoherenceGraph, source: str, target: str) -> None:
    if source not in graph or target not in graph:
        raise PathError(f"unknown endpoint: {source!r} or {target!r}")
    if graph.timestamps[source] >= graph.timestamps[target]:
        raise PathError(
            f"source {source!r} must be strictly earlier than target {target!r}"
        )


def reconstruct_path(parent: Mapping[str, str | None], node: str) -> list[str]:
    """Walk parent links back to the source; returns the source-first path."""
    path = [node]
    current = node
    seen = {node}
    while True:
        if current not in parent:
            raise PathError(f"broken parent chain at {current!r}")
        nxt = parent[current]
        if nxt is None:
            break
        if nxt in seen:
            raise PathError(f"parent chain cycles at {nxt!r}")
        path.append(nxt)
        seen.add(nxt)
        current = nxt
    path.reverse()
    return path


# ---------------------------------------------------------------------------
# maximum-capacity baseline


def max_capacity_path(
    graph: CoherenceGraph, source: str, target: str
) -> Storyline | None:
    """The path whose minimum edge weight is maximal.

    Best-first search popping the highest-capacity node gives the optimal
    bottleneck; ties are then resolved to the fewest-hop and lexicographically
    smallest id sequence among optimal paths. Returns None when the target is
    unreachable.
    """
    _check_endpoints(graph, source, target)
    start = time.perf_counter()

    best: dict[str, float] = {source: math.inf}
    heap: list[tuple[float, str]] = [(-math.inf, source)]
    done: set[str] = set()
    bottleneck: float | None = None
    while heap:
        neg_cap, node = heapq.heappop(heap)
        if node in done:
            continue
        done.add(node)
        if node == target:
            bottleneck = -neg_cap
            break
        for succ, weight in graph.out_edges(node):
            cap = min(best[node], weight)
            if cap > best.get(succ, -math.inf):
                best[succ] = cap
                heapq.heappush(heap, (-cap, succ))
    if bottleneck is None:
        return None

    path = _tie_broken_optimal_path(graph, source, target, bottleneck)
    return _make_storyline(
        graph,
        path,
        method="max_capacity",
        agenda_id=None,
        oracle_calls=0,
        elapsed=time.perf_counter() - start,
    )


def _tie_broken_optimal_path(
    graph: CoherenceGraph, source: str, target: str, bottleneck: float
) -> list[str]:
    # Optimal-capacity paths are exactly the s->t paths in the subgraph of
    # edges with weight >= bottleneck. BFS levels from both ends identify the
    # fewest-hop paths; a greedy smallest-id walk picks the lexicographic one.
    restricted: dict[str, list[str]] = {node: [] for node in graph.nodes}
    for (src, dst), weight in graph.edges().items():
        if weight >= bottleneck:
            restricted[src].append(dst)

    def bfs(start: str, forward: bool) -> dict[str, int]:
        if not forward:
            incoming: dict[str, list[str]] = {node: [] for node in graph.nodes}
            for src, dsts in restricted.items():
                for dst in dsts:
                    incoming[dst].append(src)
        dist = {start: 0}
        queue = deque([start])
        while queue:
            node = queue.popleft()
            succs = restricted[node] if forward else incoming[node]
            for succ in succs:
                if succ not in dist:
                    dist[succ] = dist[node] + 1
                    queue.append(succ)
        return dist

    dist_from_source = bfs(source, forward=True)
    dist_to_target = bfs(target, forward=False)
    if target not in dist_from_source:
        raise PathError("internal: bottleneck subgraph lost the target")
    length = dist_from_source[target]

    path = [source]
    node = source
    for level in range(1, length + 1):
        choices = [
            succ
            for succ in restricted[node]
            if dist_from_source.get(succ) == level
            and dist_to_target.get(succ) == length - level
        ]
        node = min(choices)
        path.append(node)
    return path


# ---------------------------------------------------------------------------
# agenda-driven search


def _identity_response(n: int) -> RankResponse:
    return RankResponse(
        ranking=list(range(1, n + 1)), reasoning=None, source="fallback_coherence"
    )


def agenda_path(
    graph: CoherenceGraph,
    source: str,
    target: str,
    agenda: Agenda | str,
    k: int,
    oracle: SteeringOracle,
    method: str = "llm_direct",
    on_step: Callable[[TraceStep], None] | None = None,
) -> tuple[Storyline | None, SearchTrace]:
    """Agenda-driven narrative extraction.

    A min-heap keyed (priority, insertion counter) drives the search. At each
    pop the unvisited out-neighbors that can still reach the target and would
    not lower the node's known capacity form the candidate pool; the pool is
    truncated to the top k by edge weight. A single candidate is pushed with
    priority 0; several are pushed in oracle-rank order with priorities
    0..k-1, so lower-ranked candidates stay queued for backtracking. A no-path
    outcome is a normal result (None), not an error.
    """
    _check_endpoints(graph, source, target)
    if k < 1:
        raise PathError("candidate pool size k must be >= 1")
    agenda_text = agenda.text if isinstance(agenda, Agenda) else str(agenda)
    agenda_id = agenda.id if isinstance(agenda, Agenda) else None

    start = time.perf_counter()
    trace = SearchTrace()
    counter = itertools.count()
    heap: list[tuple[int, int, str]] = [(0, next(counter), source)]
    cap: dict[str, float] = {source: math.inf}
    parent: dict[str, str | None] = {source: None}
    processed: set[str] = set()
    oracle_calls = 0

    while heap:
        _, _, node = heapq.heappop(heap)
        if node in processed:
            continue
        processed.add(node)
        if node == target:
            path = reconstruct_path(parent, target)
            storyline = _make_storyline(
                graph,
                path,
                method=method,
                agenda_id=agenda_id,
                oracle_calls=oracle_calls,
                elapsed=time.perf_counter() - start,
            )
            return storyline, trace

        visited = reconstruct_path(parent, node)
        visited_set = set(visited)
        pool: list[tuple[str, float, float]] = []
        # out_edges is already weight-descending with ties by id
        for succ, weight in graph.out_edges(node):
            if succ in visited_set:
                continue
            if not graph.can_reach_target(succ, target, visited_set):
                continue
            candidate_cap = min(cap[node], weight)
            if succ not in cap or candidate_cap >= cap[succ]:
                pool.append((succ, weight, candidate_cap))
        pool = pool[:k]

        if len(pool) == 1:
            succ, _, candidate_cap = pool[0]
            cap[succ] = candidate_cap
            parent[succ] = node
            heapq.heappush(heap, (0, next(counter), succ))
        elif len(pool) > 1:
            request = RankRequest(
                agenda=agenda_text,
                context_titles=[
                    graph.titles[doc] for doc in visited[:-1][-MAX_CONTEXT_TITLES:]
                ],
                current_title=graph.titles[node],
                target_title=graph.titles[target],
                candidates=[
                    RankCandidate(
                        index=i + 1, doc_id=succ, title=graph.titles[succ], weight=weight
                    )
                    for i, (succ, weight, _) in enumerate(pool)
                ],
            )
            oracle_calls += 1
            try:
                response = oracle.rank(request)
                if sorted(response.ranking) != list(range(1, len(pool) + 1)):
                    response = _identity_response(len(pool))
            except Exception:
                # a hard oracle failure must not kill the search; coherence
                # order (the pool order) is the documented fallback
                response = _identity_response(len(pool))
            step = TraceStep(
                step=len(trace.steps),
                node=node,
                candidates=tuple(
                    TraceCandidate(
                        index=i + 1,
                        doc_id=succ,
                        title=graph.titles[succ],
                        weight=weight,
                        capacity=candidate_cap,
                    )
                    for i, (succ, weight, candidate_cap) in enumerate(pool)
                ),
                ranking=tuple(response.ranking),
                source=response.source,
            )
            trace.steps.append(step)
            if on_step is not None:
                on_step(step)
            for priority, candidate_index in enumerate(response.ranking):
                succ, _, candidate_cap = pool[candidate_index - 1]
                cap[succ] = candidate_cap
                parent[succ] = node
                heapq.heappush(heap, (priority, next(counter), succ))

    return None, trace
