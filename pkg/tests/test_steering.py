"""Prompt rendering, response parsing, TF-IDF blending, and the mock oracle."""

from __future__ import annotations

import copy
import itertools
import json
import math
import random

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from storysteer.corpus import Corpus
from storysteer.llm import TransportError
from storysteer.steering import (
    Agenda,
    KeywordOracle,
    MockOracle,
    MockScriptExhausted,
    RankCandidate,
    RankRequest,
    RankingParseError,
    SteeringError,
    TfidfModel,
    builtin_agendas,
    extract_json_object,
    keyword_rank,
    llm_rank,
    load_agendas,
    parse_ranking,
    render_cot_prompt,
    render_direct_prompt,
    tfidf_fit,
    tfidf_similarity,
    tokenize,
)

from conftest import make_docs


def _cand(i: int, title: str, weight: float = 0.5) -> RankCandidate:
    return RankCandidate(index=i, doc_id=f"doc-{i}", title=title, weight=weight)


FULL_REQUEST = RankRequest(
    agenda="Protests are growing across the country",
    context_titles=["March begins downtown", "Crowds swell by nightfall"],
    current_title="Police deploy barricades",
    target_title="National strike announced",
    candidates=[
        _cand(1, "Union leaders call for action"),
        _cand(2, "Mayor urges calm"),
        _cand(3, "Second city joins protests"),
    ],
)

START_REQUEST = RankRequest(
    agenda="Protests are growing across the country",
    context_titles=[],
    current_title="March begins downtown",
    target_title="National strike announced",
    candidates=[
        _cand(1, "Crowds swell by nightfall"),
        _cand(2, "Mayor urges calm"),
    ],
)


# ---------------------------------------------------------------------------
# prompt rendering against golden files


def test_direct_prompt_matches_golden(golden_dir):
    want = (golden_dir / "direct_prompt_3cand.txt").read_text(encoding="utf-8")
    assert render_direct_prompt(FULL_REQUEST) == want


def test_direct_prompt_empty_context_matches_golden(golden_dir):
    want = (golden_dir / "direct_prompt_empty_context.txt").read_text(encoding="utf-8")
    assert render_direct_prompt(START_REQUEST) == want


def test_cot_prompt_matches_golden(golden_dir):
    want = (golden_dir / "cot_prompt_3cand.txt").read_text(encoding="utf-8")
    assert render_cot_prompt(FULL_REQUEST) == want


def test_direct_prompt_keeps_literal_example():
    rendered = render_direct_prompt(FULL_REQUEST)
    assert '{"ranking": [3, 1, 2]}' in rendered
    assert "from 1 to 3 in order" in rendered


def test_cot_prompt_scaffold_and_verbatim_agenda():
    rendered = render_cot_prompt(FULL_REQUEST)
    assert "STEP 1 - PERSPECTIVE ALIGNMENT" in rendered
    assert "STEP 2 - PATH TO DESTINATION" in rendered
    assert "STEP 3 - RANKING" in rendered
    assert (
        'THE PERSPECTIVE: "Protests are growing across the country"' in rendered
    )
    assert '{"reasoning": "your step-by-step analysis here", "ranking": [3, 1, 2]}' in rendered


def test_prompts_injective_in_candidates():
    variants = [
        ["Alpha", "Beta"],
        ["Beta", "Alpha"],
        ["Alpha", "Gamma"],
        ["Alpha", "Beta", "Gamma"],
    ]
    rendered = set()
    for titles in variants:
        request = RankRequest(
            agenda="a",
            context_titles=[],
            current_title="c",
            target_title="t",
            candidates=[_cand(i + 1, title) for i, title in enumerate(titles)],
        )
        rendered.add(render_direct_prompt(request))
        rendered.add(render_cot_prompt(request))
    assert len(rendered) == 2 * len(variants)


# ---------------------------------------------------------------------------
# request validation


def test_rank_request_requires_candidates():
    with pytest.raises(SteeringError, match="at least one"):
        RankRequest(
            agenda="a", context_titles=[], current_title="c",
            target_title="t", candidates=[],
        )


def test_rank_request_requires_contiguous_indices():
    with pytest.raises(SteeringError, match="contiguous"):
        RankRequest(
            agenda="a", context_titles=[], current_title="c", target_title="t",
            candidates=[_cand(1, "x"), _cand(3, "y")],
        )
    with pytest.raises(SteeringError, match="contiguous"):
        RankRequest(
            agenda="a", context_titles=[], current_title="c", target_title="t",
            candidates=[_cand(2, "x"), _cand(1, "y")],
        )


# ---------------------------------------------------------------------------
# JSON extraction


def test_extract_plain_object():
    assert extract_json_object('{"a": 1}') == {"a": 1}


def test_extract_prose_wrapped():
    raw = 'Here you go: {"reasoning":"ok","ranking":[2,1]} hope that helps!'
    assert extract_json_object(raw) == {"reasoning": "ok", "ranking": [2, 1]}


def test_extract_braces_inside_strings():
    raw = '{"text": "a } b { c", "n": 1}'
    assert extract_json_object(raw) == {"text": "a } b { c", "n": 1}


def test_extract_escaped_quotes_inside_strings():
    raw = '{"text": "she said \\"}{\\" loudly", "n": 2}'
    assert extract_json_object(raw) == {"text": 'she said "}{" loudly', "n": 2}


def test_extract_nested_objects():
    raw = 'prefix {"outer": {"inner": [1, {"deep": true}]}} suffix'
    assert extract_json_object(raw) == {"outer": {"inner": [1, {"deep": True}]}}


def test_extract_skips_malformed_then_finds_valid():
    raw = '{broken} and later {"ranking": [1]}'
    assert extract_json_object(raw) == {"ranking": [1]}


def test_extract_rejects_no_object():
    for raw in ("no json here", "[1, 2, 3]", "{never closed", ""):
        with pytest.raises(RankingParseError, match="no JSON object"):
            extract_json_object(raw)


def test_extract_empty_object():
    assert extract_json_object("{}") == {}


# ---------------------------------------------------------------------------
# ranking parsing


def test_parse_paper_example():
    response = parse_ranking('{"ranking":[3,1,2]}', 3)
    assert response.ranking == [3, 1, 2]
    assert response.source == "llm"
    assert response.reasoning is None


def test_parse_with_reasoning():
    response = parse_ranking('{"reasoning": "because", "ranking": [2, 1]}', 2)
    assert response.ranking == [2, 1]
    assert response.reasoning == "because"


def test_parse_non_string_reasoning_dropped():
    response = parse_ranking('{"reasoning": 42, "ranking": [1]}', 1)
    assert response.reasoning is None


def test_parse_error_messages_are_distinct():
    cases = {
        "nothing to see": "no JSON object",
        '{"other": 1}': "no 'ranking' field",
        '{"ranking": "132"}': "array of integers",
        '{"ranking": [true, 2, 3]}': "array of integers",
        '{"ranking": [1.0, 2.0]}': "array of integers",
        '{"ranking": [1, 2]}': "expected 3",
        '{"ranking": [1, 2, 4]}': "out of range",
        '{"ranking": [1, 1, 2]}': "duplicate",
        '{"ranking": [0, 1, 2]}': "out of range",
    }
    for raw, message in cases.items():
        with pytest.raises(RankingParseError, match=message):
            parse_ranking(raw, 3)


def test_parse_rejects_n_below_one():
    with pytest.raises(SteeringError):
        parse_ranking('{"ranking": []}', 0)


@given(st.integers(1, 8), st.integers(0, 2**32 - 1))
@settings(max_examples=300, deadline=None)
def test_parse_accepts_exactly_permutations(n, seed):
    rng = random.Random(seed)
    perm = list(range(1, n + 1))
    rng.shuffle(perm)
    assert parse_ranking(json.dumps({"ranking": perm}), n).ranking == perm

    mutated = list(perm)
    mutation = rng.choice(["dup", "drop", "shift", "negate", "extend"])
    if mutation == "dup" and n >= 2:
        mutated[rng.randrange(n)] = mutated[rng.randrange(n) - 1]
        if sorted(mutated) == list(range(1, n + 1)):
            return
    elif mutation == "drop":
        mutated.pop()
    elif mutation == "shift":
        mutated = [v + 1 for v in mutated]
    elif mutation == "negate":
        mutated[0] = -mutated[0]
    else:
        mutated.append(n + 1)
    if sorted(mutated) == list(range(1, n + 1)):
        return
    with pytest.raises(RankingParseError):
        parse_ranking(json.dumps({"ranking": mutated}), n)


# ---------------------------------------------------------------------------
# llm_rank with a scripted fake client


class FakeChatClient:
    def __init__(self, replies):
        self.replies = list(replies)
        self.calls: list[list[dict]] = []

    def complete(self, messages):
        self.calls.append(copy.deepcopy(messages))
        reply = self.replies.pop(0)
        if isinstance(reply, Exception):
            raise reply
        return reply


def test_llm_rank_first_try():
    client = FakeChatClient(['{"ranking": [2, 1, 3], "reasoning": "r"}'])
    response = llm_rank(FULL_REQUEST, "direct", client)
    assert response.ranking == [2, 1, 3]
    assert response.source == "llm"
    assert response.reasoning == "r"
    assert len(client.calls) == 1
    assert client.calls[0][0]["content"] == render_direct_prompt(FULL_REQUEST)


def test_llm_rank_cot_mode_uses_cot_prompt():
    client = FakeChatClient(['{"ranking": [1, 2, 3]}'])
    llm_rank(FULL_REQUEST, "cot", client)
    assert client.calls[0][0]["content"] == render_cot_prompt(FULL_REQUEST)


def test_llm_rank_corrective_retry_then_success():
    client = FakeChatClient(["not json at all", '{"ranking": [3, 2, 1]}'])
    response = llm_rank(FULL_REQUEST, "direct", client)
    assert response.ranking == [3, 2, 1]
    assert response.source == "llm"
    assert len(client.calls) == 2
    # the retry conversation carries the bad reply and a corrective user turn
    second = client.calls[1]
    assert second[1] == {"role": "assistant", "content": "not json at all"}
    assert second[2]["role"] == "user"
    assert "Your previous response was invalid" in second[2]["content"]
    assert "ALL numbers from 1 to 3" in second[2]["content"]


def test_llm_rank_exhausts_retries_to_identity_fallback():
    client = FakeChatClient(["junk", "more junk", '{"ranking": [1, 1, 1]}'])
    response = llm_rank(FULL_REQUEST, "direct", client)
    assert response.ranking == [1, 2, 3]
    assert response.source == "fallback_coherence"
    assert len(client.calls) == 3


def test_llm_rank_transport_failure_falls_back():
    client = FakeChatClient([TransportError("endpoint busy")])
    response = llm_rank(FULL_REQUEST, "direct", client)
    assert response.ranking == [1, 2, 3]
    assert response.source == "fallback_coherence"
    assert len(client.calls) == 1


def test_llm_rank_unknown_mode():
    with pytest.raises(SteeringError, match="mode"):
        llm_rank(FULL_REQUEST, "telepathy", FakeChatClient([]))


# ---------------------------------------------------------------------------
# tokenization


def test_tokenize_rules():
    assert tokenize("Tax-free ZONES open; costs $12, I say") == [
        "tax",
        "free",
        "zones",
        "open",
        "costs",
        "12",
        "say",
    ]
    assert tokenize("a I . !") == []
    assert tokenize("covid19 spreads") == ["covid19", "spreads"]


# ---------------------------------------------------------------------------
# TF-IDF model against a hand-computed table


@pytest.fixture
def small_corpus() -> Corpus:
    return make_docs(
        [
            ("A", "ta", "freedom march", 0),
            ("B", "tb", "march police", 1),
            ("C", "tc", "economy", 2),
            ("D", "td", "freedom freedom march", 3),
        ]
    )


def test_tfidf_hand_computed_table(small_corpus):
    model = tfidf_fit(small_corpus)

    # idf from the definition: ln((1+N)/(1+df)) + 1 with N=4
    idf_freedom = math.log(5.0 / 3.0) + 1.0  # df 2
    idf_march = math.log(5.0 / 4.0) + 1.0  # df 3
    idf_police = math.log(5.0 / 2.0) + 1.0  # df 1
    idf_economy = math.log(5.0 / 2.0) + 1.0  # df 1
    assert model.idf["freedom"] == pytest.approx(idf_freedom, abs=1e-12)
    assert model.idf["march"] == pytest.approx(idf_march, abs=1e-12)
    assert model.idf["police"] == pytest.approx(idf_police, abs=1e-12)
    assert model.idf["economy"] == pytest.approx(idf_economy, abs=1e-12)

    agenda = "freedom march"
    norm_q = math.sqrt(idf_freedom**2 + idf_march**2)
    norm_b = math.sqrt(idf_march**2 + idf_police**2)
    norm_d = math.sqrt((2 * idf_freedom) ** 2 + idf_march**2)
    want = {
        "A": 1.0,  # doc equals the agenda text verbatim
        "B": (idf_march**2) / (norm_b * norm_q),
        "C": 0.0,
        "D": (2 * idf_freedom**2 + idf_march**2) / (norm_d * norm_q),
    }
    for doc_id, sim in want.items():
        got = tfidf_similarity(model, agenda, small_corpus[doc_id])
        assert got == pytest.approx(sim, abs=1e-9), doc_id


def test_tfidf_idf_dominance(small_corpus):
    model = tfidf_fit(small_corpus)
    # "police" appears only in B
    sims = {
        doc_id: tfidf_similarity(model, "police", small_corpus[doc_id])
        for doc_id in small_corpus.ids
    }
    assert sims["B"] > max(sims[d] for d in ("A", "C", "D"))


def test_tfidf_empty_agenda_is_zero(small_corpus):
    model = tfidf_fit(small_corpus)
    for doc_id in small_corpus.ids:
        assert tfidf_similarity(model, "a ! .", small_corpus[doc_id]) == 0.0
        assert tfidf_similarity(model, "unseen vocabulary", small_corpus[doc_id]) == 0.0


def test_tfidf_range_and_fit_errors(small_corpus):
    model = tfidf_fit(small_corpus)
    for doc_id in small_corpus.ids:
        for agenda in ("freedom", "march police economy", "freedom march"):
            sim = tfidf_similarity(model, agenda, small_corpus[doc_id])
            assert 0.0 <= sim <= 1.0
    with pytest.raises(SteeringError, match="empty"):
        tfidf_fit(Corpus([]))


def test_tfidf_model_immutable_after_fit(small_corpus):
    model = tfidf_fit(small_corpus)
    before = dict(model.doc_vectors["A"])
    tfidf_similarity(model, "freedom march", small_corpus["A"])
    assert model.doc_vectors["A"] == before


# ---------------------------------------------------------------------------
# keyword blending


def test_keyword_blend_formula_and_tie_break(small_corpus):
    # an injected model gives exact tf-idf values, making scores exact:
    # cand1: 0.5*0.8 + 0.5*0.4 = 0.6; cand2: 0.5*1.0 + 0.5*0.0 = 0.5;
    # cand3: 0.5*0.2 + 0.5*1.0 = 0.6 ties cand1, loses on index
    model = TfidfModel(
        idf={"xx": 1.0},
        doc_vectors={"A": {"xx": 0.4}, "B": {}, "C": {"xx": 1.0}},
    )
    docs = {doc.id: doc for doc in small_corpus}
    request = RankRequest(
        agenda="xx",
        context_titles=[],
        current_title="c",
        target_title="t",
        candidates=[
            RankCandidate(index=1, doc_id="A", title="a", weight=0.8),
            RankCandidate(index=2, doc_id="B", title="b", weight=1.0),
            RankCandidate(index=3, doc_id="C", title="c", weight=0.2),
        ],
    )
    response = keyword_rank(request, [0.8, 1.0, 0.2], model, docs, alpha=0.5)
    assert response.ranking == [1, 3, 2]
    assert response.source == "keyword"


def test_keyword_alpha_extremes(small_corpus):
    model = tfidf_fit(small_corpus)
    request = RankRequest(
        agenda="freedom march",
        context_titles=[],
        current_title="c",
        target_title="t",
        candidates=[
            RankCandidate(index=1, doc_id="C", title="c", weight=0.9),
            RankCandidate(index=2, doc_id="A", title="a", weight=0.1),
        ],
    )
    # alpha=0: pure coherence, C first; alpha=1: pure tf-idf, A first
    by_coherence = keyword_rank(request, [0.9, 0.1], model, small_corpus, alpha=0.0)
    assert by_coherence.ranking == [1, 2]
    by_tfidf = keyword_rank(request, [0.9, 0.1], model, small_corpus, alpha=1.0)
    assert by_tfidf.ranking == [2, 1]


def test_keyword_rank_weight_count_mismatch(small_corpus):
    model = tfidf_fit(small_corpus)
    request = RankRequest(
        agenda="freedom",
        context_titles=[],
        current_title="c",
        target_title="t",
        candidates=[RankCandidate(index=1, doc_id="A", title="a", weight=0.5)],
    )
    with pytest.raises(SteeringError, match="one coherence weight"):
        keyword_rank(request, [0.5, 0.5], model, small_corpus)


def test_keyword_oracle_uses_candidate_weights(small_corpus):
    model = tfidf_fit(small_corpus)
    oracle = KeywordOracle(model, small_corpus, alpha=0.5)
    request = RankRequest(
        agenda="nonexistent vocabulary",
        context_titles=[],
        current_title="c",
        target_title="t",
        candidates=[
            RankCandidate(index=1, doc_id="A", title="a", weight=0.2),
            RankCandidate(index=2, doc_id="B", title="b", weight=0.9),
        ],
    )
    # tf-idf contributes 0 for every candidate, so weights decide
    assert oracle.rank(request).ranking == [2, 1]


def test_keyword_rank_depends_only_on_blended_order(small_corpus):
    model = tfidf_fit(small_corpus)
    request = RankRequest(
        agenda="freedom march",
        context_titles=[],
        current_title="c",
        target_title="t",
        candidates=[
            RankCandidate(index=1, doc_id="A", title="a", weight=0.3),
            RankCandidate(index=2, doc_id="B", title="b", weight=0.6),
            RankCandidate(index=3, doc_id="C", title="c", weight=0.9),
        ],
    )
    response = keyword_rank(request, [0.3, 0.6, 0.9], model, small_corpus, alpha=0.5)
    sims = [
        tfidf_similarity(model, "freedom march", small_corpus[d])
        for d in ("A", "B", "C")
    ]
    scores = [0.5 * w + 0.5 * s for w, s in zip((0.3, 0.6, 0.9), sims)]
    want = [i + 1 for i in sorted(range(3), key=lambda i: (-scores[i], i))]
    assert response.ranking == want


# ---------------------------------------------------------------------------
# mock oracle


def _tiny_request(n: int = 2) -> RankRequest:
    return RankRequest(
        agenda="watch the crackdown unfold",
        context_titles=[],
        current_title="now",
        target_title="later",
        candidates=[_cand(i + 1, f"title {i + 1}") for i in range(n)],
    )


def test_mock_script_consumed_in_order():
    oracle = MockOracle(script=[[2, 1], [1, 2]])
    assert oracle.rank(_tiny_request()).ranking == [2, 1]
    assert oracle.rank(_tiny_request()).ranking == [1, 2]
    with pytest.raises(MockScriptExhausted):
        oracle.rank(_tiny_request())
    assert len(oracle.requests) == 3


def test_mock_requires_exactly_one_driver():
    with pytest.raises(SteeringError):
        MockOracle()
    with pytest.raises(SteeringError):
        MockOracle(script=[[1]], rule=lambda r: [1])


def test_mock_rejects_non_permutation_script():
    oracle = MockOracle(script=[[1, 1]])
    with pytest.raises(SteeringError, match="non-permutation"):
        oracle.rank(_tiny_request())


def test_mock_response_source_is_mock():
    assert MockOracle.identity().rank(_tiny_request()).source == "mock"


def test_mock_prefer_titles_rule():
    oracle = MockOracle.prefer_titles_containing("crackdown")
    request = RankRequest(
        agenda="any",
        context_titles=[],
        current_title="now",
        target_title="later",
        candidates=[
            _cand(1, "Sunny day in the park"),
            _cand(2, "CRACKDOWN intensifies"),
            _cand(3, "Markets steady"),
            _cand(4, "New crackdown ordered"),
        ],
    )
    assert oracle.rank(request).ranking == [2, 4, 1, 3]


def test_mock_agenda_overlap_rule():
    oracle = MockOracle.agenda_overlap()
    request = RankRequest(
        agenda="freedom movement grows",
        context_titles=[],
        current_title="now",
        target_title="later",
        candidates=[
            _cand(1, "Taxes rise again"),
            _cand(2, "Freedom movement rally"),
            _cand(3, "Movement leaders speak"),
        ],
    )
    # overlaps: 0, 2, 1 -> [2, 3, 1]
    assert oracle.rank(request).ranking == [2, 3, 1]


# ---------------------------------------------------------------------------
# agendas


def test_agenda_validation():
    with pytest.raises(SteeringError, match="non-empty"):
        Agenda(id="x", text="", category="literal")
    with pytest.raises(SteeringError, match="category"):
        Agenda(id="x", text="t", category="sideways")


def test_builtin_agendas_shape():
    agendas = builtin_agendas()
    assert len(agendas) == 6
    ids = [a.id for a in agendas]
    assert len(set(ids)) == 6
    by_category: dict[str, int] = {}
    for agenda in agendas:
        by_category[agenda.category] = by_category.get(agenda.category, 0) + 1
        assert agenda.text
    assert by_category == {"literal": 2, "semantic": 2, "counter": 2}


def test_load_agendas_round_trip(tmp_path):
    agendas = builtin_agendas()
    path = tmp_path / "agendas.json"
    path.write_text(
        json.dumps([a.to_dict() for a in agendas]), encoding="utf-8"
    )
    assert load_agendas(path) == agendas
