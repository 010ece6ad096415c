"""Maximum-capacity baseline and the oracle-steered search."""

from __future__ import annotations

import math
import random

import pytest

from storysteer.pathfinding import (
    PathError,
    SearchTrace,
    Storyline,
    agenda_path,
    max_capacity_path,
    reconstruct_path,
)
from storysteer.steering import MockOracle, RankRequest

from conftest import (
    brute_force_max_capacity,
    make_graph,
    path_capacity,
    random_dag,
)


class ExplodingOracle:
    """Fails the test if the search consults it at all."""

    def __init__(self):
        self.calls = 0

    def rank(self, request: RankRequest):
        self.calls += 1
        raise AssertionError("oracle must not be consulted")


# ---------------------------------------------------------------------------
# maximum-capacity baseline


def test_max_capacity_matches_brute_force_on_random_dags():
    rng = random.Random(99)
    compared = 0
    seed = 0
    while compared < 300:
        seed += 1
        graph = random_dag(seed, max_nodes=12, edge_prob=0.5)
        nodes = graph.nodes
        i, j = sorted(rng.sample(range(len(nodes)), 2))
        source, target = nodes[i], nodes[j]
        want = brute_force_max_capacity(graph, source, target)
        got = max_capacity_path(graph, source, target)
        if want is None:
            assert got is None
        else:
            want_path, want_cap = want
            assert got.capacity == want_cap
            assert list(got.doc_ids) == want_path
            assert got.method == "max_capacity"
            assert got.agenda_id is None
            assert got.oracle_call_count == 0
        compared += 1


def test_max_capacity_prefers_fewer_hops_on_capacity_tie():
    graph = make_graph(
        {"s": 0, "a": 1, "t": 2},
        {("s", "t"): 0.5, ("s", "a"): 0.5, ("a", "t"): 0.5},
    )
    result = max_capacity_path(graph, "s", "t")
    assert list(result.doc_ids) == ["s", "t"]
    assert result.capacity == 0.5


def test_max_capacity_breaks_full_ties_lexicographically():
    graph = make_graph(
        {"s": 0, "a": 1, "b": 1, "t": 2},
        {
            ("s", "a"): 0.5,
            ("s", "b"): 0.5,
            ("a", "t"): 0.5,
            ("b", "t"): 0.5,
        },
    )
    result = max_capacity_path(graph, "s", "t")
    assert list(result.doc_ids) == ["s", "a", "t"]


def test_max_capacity_takes_longer_path_for_higher_bottleneck():
    graph = make_graph(
        {"s": 0, "a": 1, "t": 2},
        {("s", "t"): 0.3, ("s", "a"): 0.9, ("a", "t"): 0.8},
    )
    result = max_capacity_path(graph, "s", "t")
    assert list(result.doc_ids) == ["s", "a", "t"]
    assert result.capacity == 0.8


def test_max_capacity_unreachable_returns_none():
    graph = make_graph({"s": 0, "x": 1, "t": 2}, {("s", "x"): 0.9})
    assert max_capacity_path(graph, "s", "t") is None


def test_max_capacity_endpoint_validation(diamond):
    with pytest.raises(PathError, match="unknown"):
        max_capacity_path(diamond, "s", "missing")
    with pytest.raises(PathError, match="earlier"):
        max_capacity_path(diamond, "t", "s")
    with pytest.raises(PathError, match="earlier"):
        max_capacity_path(diamond, "a1", "b1")


# ---------------------------------------------------------------------------
# steered search: structure of returned paths


def _assert_valid_storyline(graph, storyline, source, target):
    assert storyline.doc_ids[0] == source
    assert storyline.doc_ids[-1] == target
    assert len(set(storyline.doc_ids)) == len(storyline.doc_ids)
    for u, v in zip(storyline.doc_ids, storyline.doc_ids[1:]):
        assert graph.has_edge(u, v)
        assert graph.timestamps[u] < graph.timestamps[v]
    assert storyline.capacity == path_capacity(graph, storyline.doc_ids)


def test_agenda_path_valid_on_random_dags_and_bounded_by_optimum():
    rng = random.Random(7)
    found = 0
    optimal = 0
    seed = 0
    while found < 200:
        seed += 1
        graph = random_dag(seed, max_nodes=12, edge_prob=0.5)
        nodes = graph.nodes
        i, j = sorted(rng.sample(range(len(nodes)), 2))
        source, target = nodes[i], nodes[j]
        want = brute_force_max_capacity(graph, source, target)
        storyline, trace = agenda_path(
            graph, source, target, "any agenda", k=3, oracle=MockOracle.identity()
        )
        if want is None:
            assert storyline is None
            continue
        assert storyline is not None
        _assert_valid_storyline(graph, storyline, source, target)
        assert storyline.capacity <= want[1] + 1e-15
        assert storyline.oracle_call_count == len(trace.steps)
        if storyline.capacity == want[1]:
            optimal += 1
        found += 1
    # frequency recorded for the curious, never asserted
    print(f"\ncoherence-order steering hit the optimum on {optimal}/{found} DAGs")


def test_agenda_path_k1_never_consults_oracle(diamond):
    oracle = ExplodingOracle()
    storyline, trace = agenda_path(diamond, "s", "t", "agenda", k=1, oracle=oracle)
    assert oracle.calls == 0
    assert trace.steps == []
    assert storyline is not None
    assert storyline.oracle_call_count == 0
    # k=1 keeps only the heaviest viable edge at each step
    assert list(storyline.doc_ids) == ["s", "a1", "a2", "t"]


def test_agenda_path_single_viable_candidate_skips_oracle():
    # d is a dead end, so the pool at s is just x: no ranking needed
    graph = make_graph(
        {"s": 0, "d": 1, "x": 1, "t": 2},
        {("s", "d"): 0.9, ("s", "x"): 0.5, ("x", "t"): 0.5},
    )
    oracle = ExplodingOracle()
    storyline, trace = agenda_path(graph, "s", "t", "agenda", k=3, oracle=oracle)
    assert oracle.calls == 0
    assert trace.steps == []
    assert list(storyline.doc_ids) == ["s", "x", "t"]


def test_agenda_path_unreachable_is_normal_result():
    graph = make_graph({"s": 0, "x": 1, "t": 2}, {("s", "x"): 0.9})
    storyline, trace = agenda_path(
        graph, "s", "t", "agenda", k=2, oracle=MockOracle.identity()
    )
    assert storyline is None
    assert trace.steps == []


def test_agenda_path_argument_validation(diamond):
    with pytest.raises(PathError, match="k"):
        agenda_path(diamond, "s", "t", "agenda", k=0, oracle=MockOracle.identity())
    with pytest.raises(PathError, match="unknown"):
        agenda_path(diamond, "s", "nope", "agenda", k=2, oracle=MockOracle.identity())
    with pytest.raises(PathError, match="earlier"):
        agenda_path(diamond, "t", "s", "agenda", k=2, oracle=MockOracle.identity())


# ---------------------------------------------------------------------------
# steering effect on the diamond


def test_diamond_oracle_preference_flips_branch(diamond):
    alpha, trace_a = agenda_path(
        diamond, "s", "t", "agenda", k=2,
        oracle=MockOracle.prefer_titles_containing("alpha"),
    )
    beta, trace_b = agenda_path(
        diamond, "s", "t", "agenda", k=2,
        oracle=MockOracle.prefer_titles_containing("beta"),
    )
    assert list(alpha.doc_ids) == ["s", "a1", "a2", "t"]
    assert list(beta.doc_ids) == ["s", "b1", "b2", "t"]
    # shared endpoints only: |{s,t}| / |union of 6 ids|
    shared = set(alpha.doc_ids) & set(beta.doc_ids)
    union = set(alpha.doc_ids) | set(beta.doc_ids)
    assert shared == {"s", "t"}
    assert len(shared) / len(union) == pytest.approx(1.0 / 3.0)
    assert len(trace_a.steps) >= 1
    assert trace_a.steps[0].ranking != trace_b.steps[0].ranking


def test_diamond_agenda_reaches_oracle(diamond):
    oracle = MockOracle.agenda_overlap()
    storyline, _ = agenda_path(
        diamond, "s", "t", "freedom alpha movement", k=2, oracle=oracle
    )
    assert oracle.requests[0].agenda == "freedom alpha movement"
    assert list(storyline.doc_ids) == ["s", "a1", "a2", "t"]


# ---------------------------------------------------------------------------
# backtracking and candidate filtering


def test_backtracking_to_lower_ranked_candidate():
    # preferred branch a cannot improve b's capacity, so its pool dries up
    # and the queued lower-ranked b carries the search to the target
    graph = make_graph(
        {"s": 0, "a": 1, "b": 2, "t": 3},
        {
            ("s", "a"): 0.9,
            ("s", "b"): 0.8,
            ("a", "b"): 0.7,
            ("b", "t"): 0.6,
        },
    )
    storyline, trace = agenda_path(
        graph, "s", "t", "agenda", k=2, oracle=MockOracle.identity()
    )
    assert list(storyline.doc_ids) == ["s", "b", "t"]
    assert storyline.capacity == 0.6
    # one ranking happened, at s, over both branches
    assert len(trace.steps) == 1
    assert trace.steps[0].node == "s"
    assert [c.doc_id for c in trace.steps[0].candidates] == ["a", "b"]


def test_pool_sorted_by_weight_and_truncated_to_k():
    graph = make_graph(
        {"s": 0, "w": 1, "x": 1, "y": 1, "z": 1, "t": 2},
        {
            ("s", "w"): 0.6,
            ("s", "x"): 0.9,
            ("s", "y"): 0.7,
            ("s", "z"): 0.8,
            ("w", "t"): 0.5,
            ("x", "t"): 0.5,
            ("y", "t"): 0.5,
            ("z", "t"): 0.5,
        },
    )
    oracle = MockOracle.identity()
    _, trace = agenda_path(graph, "s", "t", "agenda", k=3, oracle=oracle)
    first = trace.steps[0]
    assert [c.doc_id for c in first.candidates] == ["x", "z", "y"]
    assert [c.index for c in first.candidates] == [1, 2, 3]
    assert [c.weight for c in first.candidates] == [0.9, 0.8, 0.7]
    # capacities reported to the trace are min(cap[u], w)
    assert [c.capacity for c in first.candidates] == [0.9, 0.8, 0.7]


def test_pool_weight_ties_break_by_doc_id():
    graph = make_graph(
        {"s": 0, "m": 1, "k": 1, "t": 2},
        {
            ("s", "m"): 0.5,
            ("s", "k"): 0.5,
            ("m", "t"): 0.5,
            ("k", "t"): 0.5,
        },
    )
    _, trace = agenda_path(
        graph, "s", "t", "agenda", k=2, oracle=MockOracle.identity()
    )
    assert [c.doc_id for c in trace.steps[0].candidates] == ["k", "m"]


def test_rank_request_context_window():
    # a 12-node chain forces a long path before the one branching step
    nodes = {f"c{i:02d}": i for i in range(12)}
    weights = {(f"c{i:02d}", f"c{i+1:02d}"): 0.9 for i in range(11)}
    nodes.update({"x": 12, "y": 12, "t": 13})
    weights[("c11", "x")] = 0.8
    weights[("c11", "y")] = 0.7
    weights[("x", "t")] = 0.6
    weights[("y", "t")] = 0.6
    graph = make_graph(nodes, weights)
    oracle = MockOracle.identity()
    storyline, trace = agenda_path(graph, "c00", "t", "agenda", k=2, oracle=oracle)
    assert storyline is not None
    req = oracle.requests[0]
    assert req.current_title == "title c11"
    assert req.target_title == "title t"
    # context excludes the current node and keeps the 10 most recent titles
    assert list(req.context_titles) == [f"title c{i:02d}" for i in range(1, 11)]
    assert [c.title for c in req.candidates] == ["title x", "title y"]


def test_short_context_grows_with_the_path():
    # two consecutive branch points: one ranking at s, another at a
    graph = make_graph(
        {"s": 0, "a": 1, "b": 1, "c": 2, "d": 2, "t": 3},
        {
            ("s", "a"): 0.9,
            ("s", "b"): 0.8,
            ("a", "c"): 0.9,
            ("a", "d"): 0.8,
            ("b", "d"): 0.5,
            ("c", "t"): 0.9,
            ("d", "t"): 0.8,
        },
    )
    oracle = MockOracle.identity()
    agenda_path(graph, "s", "t", "agenda", k=2, oracle=oracle)
    first, second = oracle.requests[0], oracle.requests[1]
    assert list(first.context_titles) == []
    assert first.current_title == "title s"
    assert list(second.context_titles) == ["title s"]
    assert second.current_title == "title a"


# ---------------------------------------------------------------------------
# trace replay and determinism


def test_scripted_replay_reproduces_path(diamond):
    original, trace = agenda_path(
        diamond, "s", "t", "agenda", k=2,
        oracle=MockOracle.prefer_titles_containing("beta"),
    )
    replay_oracle = MockOracle(script=trace.rankings())
    replayed, replay_trace = agenda_path(
        diamond, "s", "t", "agenda", k=2, oracle=replay_oracle
    )
    assert replayed.to_dict(include_elapsed=False) == original.to_dict(
        include_elapsed=False
    )
    assert replay_trace.to_dict() == trace.to_dict()


def test_scripted_replay_on_random_dags():
    rng = random.Random(5)
    replayed_count = 0
    seed = 0
    while replayed_count < 50:
        seed += 1
        graph = random_dag(seed, max_nodes=10, edge_prob=0.6)
        nodes = graph.nodes
        i, j = sorted(rng.sample(range(len(nodes)), 2))
        source, target = nodes[i], nodes[j]
        storyline, trace = agenda_path(
            graph, source, target, "agenda", k=3,
            oracle=MockOracle.agenda_overlap(),
        )
        if storyline is None or not trace.steps:
            continue
        again, trace_again = agenda_path(
            graph, source, target, "agenda", k=3,
            oracle=MockOracle(script=trace.rankings()),
        )
        assert again.to_dict(include_elapsed=False) == storyline.to_dict(
            include_elapsed=False
        )
        assert trace_again.to_dict() == trace.to_dict()
        replayed_count += 1


def test_deterministic_given_deterministic_oracle(diamond):
    runs = [
        agenda_path(
            diamond, "s", "t", "agenda", k=2,
            oracle=MockOracle.prefer_titles_containing("alpha"),
        )
        for _ in range(2)
    ]
    (s1, t1), (s2, t2) = runs
    assert s1.to_dict(include_elapsed=False) == s2.to_dict(include_elapsed=False)
    assert t1.to_dict() == t2.to_dict()


def test_on_step_callback_sees_every_trace_step():
    graph = random_dag(17, max_nodes=10, edge_prob=0.7)
    nodes = graph.nodes
    seen = []
    storyline, trace = agenda_path(
        graph, nodes[0], nodes[-1], "agenda", k=3,
        oracle=MockOracle.identity(), on_step=seen.append,
    )
    assert seen == trace.steps


# ---------------------------------------------------------------------------
# oracle failure fallback


class AlwaysFailsOracle:
    def __init__(self, exc: Exception):
        self.exc = exc

    def rank(self, request: RankRequest):
        raise self.exc


def test_oracle_hard_failure_falls_back_to_coherence_order(diamond):
    storyline, trace = agenda_path(
        diamond, "s", "t", "agenda", k=2,
        oracle=AlwaysFailsOracle(RuntimeError("endpoint down")),
    )
    assert storyline is not None
    # coherence order prefers the alpha branch (higher weights)
    assert list(storyline.doc_ids) == ["s", "a1", "a2", "t"]
    assert all(step.source == "fallback_coherence" for step in trace.steps)
    assert all(
        list(step.ranking) == list(range(1, len(step.candidates) + 1))
        for step in trace.steps
    )


def test_non_permutation_response_treated_as_fallback(diamond):
    class BadRanker:
        def rank(self, request: RankRequest):
            from storysteer.steering import RankResponse

            resp = RankResponse.__new__(RankResponse)
            object.__setattr__(resp, "ranking", [1, 1])
            object.__setattr__(resp, "reasoning", None)
            object.__setattr__(resp, "source", "llm")
            return resp

    storyline, trace = agenda_path(
        diamond, "s", "t", "agenda", k=2, oracle=BadRanker()
    )
    assert storyline is not None
    assert all(step.source == "fallback_coherence" for step in trace.steps)


# ---------------------------------------------------------------------------
# serialization


def test_storyline_round_trip():
    storyline = Storyline(
        doc_ids=("a", "b", "c"),
        capacity=0.25,
        method="llm_direct",
        agenda_id="agenda-1",
        oracle_call_count=2,
        elapsed=1.5,
    )
    data = storyline.to_dict()
    assert Storyline.from_dict(data) == storyline
    slim = storyline.to_dict(include_elapsed=False)
    assert "elapsed" not in slim
    assert Storyline.from_dict(slim).elapsed == 0.0


def test_search_trace_round_trip(diamond):
    _, trace = agenda_path(
        diamond, "s", "t", "agenda", k=2,
        oracle=MockOracle.prefer_titles_containing("alpha"),
    )
    assert trace.steps
    rebuilt = SearchTrace.from_dict(trace.to_dict())
    assert rebuilt.to_dict() == trace.to_dict()
    assert rebuilt.rankings() == trace.rankings()


def test_reconstruct_path_errors():
    with pytest.raises(PathError, match="broken"):
        reconstruct_path({"a": "b"}, "a")
    with pytest.raises(PathError, match="cycle"):
        reconstruct_path({"a": "b", "b": "a"}, "a")
    assert reconstruct_path({"a": None}, "a") == ["a"]
    assert reconstruct_path({"a": None, "b": "a", "c": "b"}, "c") == ["a", "b", "c"]
