"""Shared fixtures: the bundled corpus, stub representations, sparsified
graph, a hand-built diamond graph for steering tests, and helpers for
generating seeded random DAGs with brute-force path oracles."""

from __future__ import annotations

import itertools
import random
from datetime import datetime, timezone
from pathlib import Path

import pytest

from storysteer.corpus import Corpus, Document, load_corpus
from storysteer.graph import CoherenceGraph, build_graph, sparsify
from storysteer.llm import EmbeddingEndpointConfig
from storysteer.representation import compute_representations

FIXTURE_DIR = Path(__file__).resolve().parent.parent / "fixtures"
GOLDEN_DIR = Path(__file__).resolve().parent / "golden"


@pytest.fixture(scope="session")
def fixture_dir() -> Path:
    return FIXTURE_DIR


@pytest.fixture(scope="session")
def golden_dir() -> Path:
    return GOLDEN_DIR


@pytest.fixture(scope="session")
def corpus() -> Corpus:
    return load_corpus(FIXTURE_DIR / "corpus.jsonl")


@pytest.fixture(scope="session")
def representations(corpus):
    # mirrors fixtures/experiment.toml: stub embeddings, 3 topics, seed 0
    return compute_representations(
        corpus,
        EmbeddingEndpointConfig(provider="stub", stub_dim=32),
        topic_count=3,
        seed=0,
    )


@pytest.fixture(scope="session")
def dense_graph(representations, corpus) -> CoherenceGraph:
    return build_graph(representations, corpus)


@pytest.fixture(scope="session")
def graph(dense_graph) -> CoherenceGraph:
    sparsified, _ = sparsify(dense_graph, 1.0)
    return sparsified


# ---------------------------------------------------------------------------
# hand-built graphs


def ts(day: int) -> datetime:
    return datetime(2024, 1, 1 + day, tzinfo=timezone.utc)


def make_graph(
    nodes: dict[str, int], weights: dict[tuple[str, str], float], titles=None
) -> CoherenceGraph:
    """nodes maps id -> day offset; weights maps (u, v) -> coherence."""
    return CoherenceGraph(
        nodes=tuple(sorted(nodes)),
        weights=dict(weights),
        timestamps={node: ts(day) for node, day in nodes.items()},
        titles=titles or {node: f"title {node}" for node in nodes},
    )


@pytest.fixture
def diamond() -> CoherenceGraph:
    """Source, two 2-hop branches (alpha / beta), target. Both branches are
    viable at every capacity, so the steering oracle alone picks the branch;
    the ids and titles make preference rules easy to write."""
    nodes = {"s": 0, "a1": 1, "b1": 1, "a2": 2, "b2": 2, "t": 3}
    weights = {
        ("s", "a1"): 0.9,
        ("a1", "a2"): 0.9,
        ("a2", "t"): 0.9,
        ("s", "b1"): 0.8,
        ("b1", "b2"): 0.8,
        ("b2", "t"): 0.8,
    }
    titles = {
        "s": "story start",
        "a1": "alpha branch opens",
        "a2": "alpha branch deepens",
        "b1": "beta branch opens",
        "b2": "beta branch deepens",
        "t": "story end",
    }
    return make_graph(nodes, weights, titles)


# ---------------------------------------------------------------------------
# random DAGs with brute-force oracles


def random_dag(seed: int, max_nodes: int = 12, edge_prob: float = 0.5) -> CoherenceGraph:
    rng = random.Random(seed)
    n = rng.randint(4, max_nodes)
    ids = [f"n{i:02d}" for i in range(n)]
    nodes = {node: i for i, node in enumerate(ids)}
    weights = {}
    for i in range(n):
        for j in range(i + 1, n):
            if rng.random() < edge_prob:
                weights[(ids[i], ids[j])] = rng.random()
    return make_graph(nodes, weights)


def enumerate_paths(graph: CoherenceGraph, source: str, target: str):
    """All simple source->target paths (DAG, so plain DFS terminates)."""
    paths = []
    stack = [(source, [source])]
    while stack:
        node, path = stack.pop()
        if node == target:
            paths.append(path)
            continue
        for succ, _ in graph.out_edges(node):
            stack.append((succ, path + [succ]))
    return paths


def path_capacity(graph: CoherenceGraph, path) -> float:
    return min(graph.weight(u, v) for u, v in zip(path, path[1:]))


def brute_force_max_capacity(graph: CoherenceGraph, source: str, target: str):
    """Reference answer: max-min capacity, then fewest hops, then the
    lexicographically smallest id sequence."""
    paths = enumerate_paths(graph, source, target)
    if not paths:
        return None
    best_cap = max(path_capacity(graph, p) for p in paths)
    at_cap = [p for p in paths if path_capacity(graph, p) == best_cap]
    fewest = min(len(p) for p in at_cap)
    shortest = [p for p in at_cap if len(p) == fewest]
    return min(shortest), best_cap


def brute_force_reachable(graph: CoherenceGraph, start: str, target: str, blocked) -> bool:
    if start in blocked or target in blocked:
        return False
    seen = {start}
    stack = [start]
    while stack:
        node = stack.pop()
        if node == target:
            return True
        for succ, _ in graph.out_edges(node):
            if succ not in seen and succ not in blocked:
                seen.add(succ)
                stack.append(succ)
    return False


def all_spanning_trees_max_min(weights: dict[tuple[str, str], float], nodes) -> float:
    """Brute-force maximum spanning tree weight floor: enumerate all spanning
    edge subsets of size n-1, keep connected ones, maximize total weight, and
    return the minimum edge weight of the best tree. Only for tiny graphs."""
    edges = list(weights.items())
    n = len(nodes)
    best_total, best_min = None, None
    for subset in itertools.combinations(edges, n - 1):
        parent = {node: node for node in nodes}

        def find(x):
            while parent[x] != x:
                parent[x] = parent[parent[x]]
                x = parent[x]
            return x

        ok = True
        for (u, v), _ in subset:
            ru, rv = find(u), find(v)
            if ru == rv:
                ok = False
                break
            parent[ru] = rv
        if not ok:
            continue
        total = sum(w for _, w in subset)
        if best_total is None or total > best_total:
            best_total = total
            best_min = min(w for _, w in subset)
    return best_min


def write_experiment_toml(tmp_path: Path, **overrides) -> Path:
    """Write a fixture-corpus experiment config into tmp_path. Overrides
    replace the defaults used by fixtures/experiment.toml."""
    values = {
        "corpus_path": str(FIXTURE_DIR / "corpus.jsonl"),
        "agendas_path": str(FIXTURE_DIR / "agendas_grid.json"),
        "topic_count": 3,
        "stub_dim": 32,
        "tau": 1.0,
        "k": 3,
        "alpha": 0.5,
        "methods": ["max_capacity", "keyword", "llm_direct"],
        "endpoint_count": 2,
        "endpoint_pairs": None,
        "seed": 0,
        "workers": 4,
        "mock_llm": True,
        "output_dir": str(tmp_path / "out"),
    }
    values.update(overrides)
    methods = ", ".join(f'"{m}"' for m in values["methods"])
    if values["endpoint_pairs"] is not None:
        pair_rows = ", ".join(f'["{s}", "{t}"]' for s, t in values["endpoint_pairs"])
        endpoint_block = f"pairs = [{pair_rows}]"
    else:
        endpoint_block = f"count = {values['endpoint_count']}"
    text = f"""\
[corpus]
path = "{values['corpus_path']}"
format = "jsonl"

[representation]
source = "compute"
topic_count = {values['topic_count']}

[embedding]
provider = "stub"
stub_dim = {values['stub_dim']}

[graph]
tau = {values['tau']}

[extract]
k = {values['k']}
alpha = {values['alpha']}
methods = [{methods}]

[agendas]
path = "{values['agendas_path']}"

[endpoints]
{endpoint_block}

[run]
seed = {values['seed']}
output_dir = "{values['output_dir']}"
workers = {values['workers']}
mock_llm = {str(values['mock_llm']).lower()}
"""
    path = tmp_path / "experiment.toml"
    path.write_text(text, encoding="utf-8")
    return path


def make_docs(entries) -> Corpus:
    """entries: iterable of (id, title, text, day offset)."""
    return Corpus(
        [
            Document(id=i, title=title, text=text, timestamp=ts(day))
            for i, title, text, day in entries
        ]
    )
