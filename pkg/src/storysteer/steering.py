"""Steering oracles: LLM direct and chain-of-thought ranking, TF-IDF keyword
blending, and a deterministic mock — all behind one ranking contract."""

from __future__ import annotations

import json
import math
import re
from dataclasses import dataclass, field
from importlib import resources
from pathlib import Path
from typing import Callable, Iterable, Protocol, Sequence

from .corpus import Corpus, Document
from .llm import ChatClient, ChatEndpointConfig, TransportError

AGENDA_CATEGORIES = ("literal", "semantic", "counter")

PARSE_RETRIES = 2


class SteeringError(ValueError):
    """Invalid steering request or oracle misuse."""


class RankingParseError(ValueError):
    """The model response does not contain a valid ranking."""


@dataclass(frozen=True)
class Agenda:
    """A natural-language perspective to steer extraction toward."""

    id: str
    text: str
    category: str

    def __post_init__(self) -> None:
        if not self.text:
            raise SteeringError(f"agenda {self.id!r}: text must be non-empty")
        if self.category not in AGENDA_CATEGORIES:
            raise SteeringError(
                f"agenda {self.id!r}: category {self.category!r} not in "
                f"{AGENDA_CATEGORIES}"
            )

    def to_dict(self) -> dict:
        return {"id": self.id, "text": self.text, "category": self.category}


def load_agendas(path: str | Path) -> list[Agenda]:
    with Path(path).open("r", encoding="utf-8") as handle:
        raw = json.load(handle)
    return [Agenda(id=a["id"], text=a["text"], category=a["category"]) for a in raw]


def builtin_agendas() -> list[Agenda]:
    """The six bundled agendas (two per category)."""
    raw = json.loads(
        resources.files("storysteer.data").joinpath("agendas.json").read_text("utf-8")
    )
    return [Agenda(id=a["id"], text=a["text"], category=a["category"]) for a in raw]


# ---------------------------------------------------------------------------
# ranking contract


@dataclass(frozen=True)
class RankCandidate:
    index: int  # 1-based, contiguous
    doc_id: str
    title: str
    weight: float  # coherence of the edge into this candidate


@dataclass(frozen=True)
class RankRequest:
    agenda: str
    context_titles: tuple[str, ...]
    current_title: str
    target_title: str
    candidates: tuple[RankCandidate, ...]

    def __init__(
        self,
        agenda: str,
        context_titles: Sequence[str],
        current_title: str,
        target_title: str,
        candidates: Sequence[RankCandidate],
    ):
        object.__setattr__(self, "agenda", agenda)
        object.__setattr__(self, "context_titles", tuple(context_titles))
        object.__setattr__(self, "current_title", current_title)
        object.__setattr__(self, "target_title", target_title)
        object.__setattr__(self, "candidates", tuple(candidates))
        if not self.candidates:
            raise SteeringError("rank request needs at least one candidate")
        indices = [c.index for c in self.candidates]
        if indices != list(range(1, len(indices) + 1)):
            raise SteeringError(f"candidate indices must be 1..n contiguous, got {indices}")


@dataclass
class RankResponse:
    ranking: list[int]  # permutation of 1..n, best first
    reasoning: str | None = None
    source: str = "llm"  # llm | fallback_coherence | keyword | mock


class SteeringOracle(Protocol):
    def rank(self, request: RankRequest) -> RankResponse: ...


# ---------------------------------------------------------------------------
# prompt templates

DIRECT_RANKING_TEMPLATE = """You are helping build a narrative that aligns with this agenda: {agenda}
Current narrative context:
{context_titles}
Current article: {current_article}
Target article: {target_article}
Rank ALL of the following articles from BEST to WORST based on how well they advance the agenda while helping reach the target article.
Options:
{numbered_candidates}
You MUST respond with a JSON object containing your ranking. Example format:
{"ranking": [3, 1, 2]}
The "ranking" field must be an array containing ALL numbers from 1 to {len(candidates)} in order from best to worst."""

COT_RANKING_TEMPLATE = """You are building a news narrative that supports a specific perspective.
THE PERSPECTIVE: "{agenda}"
An article "fits" if it provides evidence, examples, or context that reinforces this perspective. An article "doesn't fit" if it contradicts, undermines, or is irrelevant to this perspective.
STORY SO FAR:
{path_context}
CURRENT: {current_article}
DESTINATION: {target_article}
OPTIONS:
{numbered_candidates}
Think step by step before ranking:
STEP 1 - PERSPECTIVE ALIGNMENT: For each option, briefly explain whether it supports, contradicts, or is neutral to the perspective.
STEP 2 - PATH TO DESTINATION: Which options help us eventually reach the destination article?
STEP 3 - RANKING: Based on the above, rank ALL options from BEST to WORST for advancing the perspective while reaching the destination.
You MUST respond with a JSON object containing your reasoning and ranking. Example format:
{"reasoning": "your step-by-step analysis here", "ranking": [3, 1, 2]}"""

EMPTY_CONTEXT_PLACEHOLDER = "(narrative start)"


def _render_context(titles: Sequence[str]) -> str:
    if not titles:
        return EMPTY_CONTEXT_PLACEHOLDER
    return "\n".join(f"- {title}" for title in titles)


def _render_candidates(candidates: Sequence[RankCandidate]) -> str:
    return "\n".join(f"{c.index}. {c.title}" for c in candidates)


def render_direct_prompt(request: RankRequest) -> str:
    # .replace, not .format: the template contains literal JSON braces
    return (
        DIRECT_RANKING_TEMPLATE.replace("{agenda}", request.agenda)
        .replace("{context_titles}", _render_context(request.context_titles))
        .replace("{current_article}", request.current_title)
        .replace("{target_article}", request.target_title)
        .replace("{numbered_candidates}", _render_candidates(request.candidates))
        .replace("{len(candidates)}", str(len(request.candidates)))
    )


def render_cot_prompt(request: RankRequest) -> str:
    return (
        COT_RANKING_TEMPLATE.replace("{agenda}", request.agenda)
        .replace("{path_context}", _render_context(request.context_titles))
        .replace("{current_article}", request.current_title)
        .replace("{target_article}", request.target_title)
        .replace("{numbered_candidates}", _render_candidates(request.candidates))
    )


# ---------------------------------------------------------------------------
# response parsing


def extract_json_object(raw: str) -> dict:
    """First balanced JSON object in the text, tolerating surrounding prose."""
    for start, char in enumerate(raw):
        if char != "{":
            continue
        depth = 0
        in_string = False
        escaped = False
        for end in range(start, len(raw)):
            c = raw[end]
            if in_string:
                if escaped:
                    escaped = False
                elif c == "\\":
                    escaped = True
                elif c == '"':
                    in_string = False
                continue
            if c == '"':
                in_string = True
            elif c == "{":
                depth += 1
            elif c == "}":
                depth -= 1
                if depth == 0:
                    try:
                        obj = json.loads(raw[start : end + 1])
                    except json.JSONDecodeError:
                        break
                    if isinstance(obj, dict):
                        return obj
                    break
    raise RankingParseError("no JSON object found in response")


def parse_ranking(raw: str, n: int) -> RankResponse:
    """Parse a ranking response; accepts exactly permutations of 1..n."""
    if n < 1:
        raise SteeringError("n must be >= 1")
    obj = extract_json_object(raw)
    if "ranking" not in obj:
        raise RankingParseError("response JSON has no 'ranking' field")
    ranking = obj["ranking"]
    if not isinstance(ranking, list) or not all(
        isinstance(v, int) and not isinstance(v, bool) for v in ranking
    ):
        raise RankingParseError("'ranking' must be an array of integers")
    if len(ranking) != n:
        raise RankingParseError(f"'ranking' has {len(ranking)} entries, expected {n}")
    out_of_range = [v for v in ranking if not 1 <= v <= n]
    if out_of_range:
        raise RankingParseError(f"'ranking' entries out of range 1..{n}: {out_of_range}")
    if len(set(ranking)) != n:
        raise RankingParseError("'ranking' contains duplicate entries")
    reasoning = obj.get("reasoning")
    return RankResponse(
        ranking=list(ranking),
        reasoning=reasoning if isinstance(reasoning, str) else None,
        source="llm",
    )


# ---------------------------------------------------------------------------
# LLM oracle


def _corrective_turn(error: RankingParseError, n: int) -> str:
    return (
        f"Your previous response was invalid: {error}. "
        f'Respond with only a JSON object whose "ranking" field is an array '
        f"containing ALL numbers from 1 to {n} in order from best to worst."
    )


def llm_rank(request: RankRequest, mode: str, client: ChatClient) -> RankResponse:
    """Render, query, parse; parse failures get a corrective retry turn.

    After the retries are exhausted (or the transport gives up) the identity
    ranking is returned with source=fallback_coherence — the candidates are
    already in coherence-descending order, so this degrades to the baseline.
    """
    if mode == "direct":
        prompt = render_direct_prompt(request)
    elif mode == "cot":
        prompt = render_cot_prompt(request)
    else:
        raise SteeringError(f"unknown ranking mode {mode!r}")
    n = len(request.candidates)
    messages = [{"role": "user", "content": prompt}]
    for _ in range(PARSE_RETRIES + 1):
        try:
            raw = client.complete(messages)
        except TransportError:
            break
        try:
            return parse_ranking(raw, n)
        except RankingParseError as exc:
            messages.append({"role": "assistant", "content": raw})
            messages.append({"role": "user", "content": _corrective_turn(exc, n)})
    return RankResponse(
        ranking=list(range(1, n + 1)), reasoning=None, source="fallback_coherence"
    )


class LlmOracle:
    """Steering oracle backed by a chat endpoint; concurrent calls are capped
    by the client's in-flight limit."""

    def __init__(self, config: ChatEndpointConfig, mode: str = "direct"):
        if mode not in ("direct", "cot"):
            raise SteeringError(f"unknown ranking mode {mode!r}")
        self.mode = mode
        self.client = ChatClient(config)

    def rank(self, request: RankRequest) -> RankResponse:
        return llm_rank(request, self.mode, self.client)


# ---------------------------------------------------------------------------
# TF-IDF keyword baseline

_TOKEN_SPLIT = re.compile(r"[^a-z0-9]+")


def tokenize(text: str) -> list[str]:
    """Lowercase, split on non-alphanumeric, drop tokens shorter than 2."""
    return [tok for tok in _TOKEN_SPLIT.split(text.lower()) if len(tok) >= 2]


class TfidfModel:
    """TF-IDF over a corpus: raw counts, smoothed log idf, L2-normalized.

    idf(t) = ln((1 + N) / (1 + df(t))) + 1. Document vectors are cached per
    doc id at fit time; the model is immutable afterwards.
    """

    def __init__(self, idf: dict[str, float], doc_vectors: dict[str, dict[str, float]]):
        self.idf = idf
        self.doc_vectors = doc_vectors

    def vectorize(self, text: str) -> dict[str, float]:
        counts: dict[str, int] = {}
        for token in tokenize(text):
            if token in self.idf:
                counts[token] = counts.get(token, 0) + 1
        vec = {tok: count * self.idf[tok] for tok, count in counts.items()}
        norm = math.sqrt(sum(v * v for v in vec.values()))
        if norm == 0.0:
            return {}
        return {tok: v / norm for tok, v in vec.items()}


def tfidf_fit(corpus: Corpus) -> TfidfModel:
    if len(corpus) == 0:
        raise SteeringError("cannot fit TF-IDF on an empty corpus")
    df: dict[str, int] = {}
    token_lists: dict[str, list[str]] = {}
    for doc in corpus:
        tokens = tokenize(doc.text)
        token_lists[doc.id] = tokens
        for token in set(tokens):
            df[token] = df.get(token, 0) + 1
    n_docs = len(corpus)
    idf = {
        token: math.log((1 + n_docs) / (1 + count)) + 1.0
        for token, count in df.items()
    }
    model = TfidfModel(idf=idf, doc_vectors={})
    for doc in corpus:
        counts: dict[str, int] = {}
        for token in token_lists[doc.id]:
            counts[token] = counts.get(token, 0) + 1
        vec = {tok: count * idf[tok] for tok, count in counts.items()}
        norm = math.sqrt(sum(v * v for v in vec.values()))
        model.doc_vectors[doc.id] = (
            {tok: v / norm for tok, v in vec.items()} if norm > 0.0 else {}
        )
    return model


def tfidf_similarity(model: TfidfModel, agenda_text: str, doc: Document) -> float:
    """Cosine similarity in [0, 1] between the agenda text and a document."""
    query = model.vectorize(agenda_text)
    if not query:
        return 0.0
    doc_vec = model.doc_vectors.get(doc.id)
    if doc_vec is None:
        doc_vec = model.vectorize(doc.text)
    if not doc_vec:
        return 0.0
    if len(query) > len(doc_vec):
        query, doc_vec = doc_vec, query
    sim = sum(value * doc_vec.get(tok, 0.0) for tok, value in query.items())
    return max(0.0, min(1.0, sim))


def keyword_rank(
    request: RankRequest,
    coherence_weights: Sequence[float],
    model: TfidfModel,
    documents: Corpus | dict[str, Document],
    alpha: float = 0.5,
) -> RankResponse:
    """Blend coherence with agenda keyword overlap:
    score = (1 - alpha) * coherence + alpha * tfidf_sim, ranked descending,
    ties by candidate index ascending."""
    if len(coherence_weights) != len(request.candidates):
        raise SteeringError("one coherence weight per candidate required")
    scores = []
    for candidate, weight in zip(request.candidates, coherence_weights):
        doc = documents[candidate.doc_id]
        sim = tfidf_similarity(model, request.agenda, doc)
        scores.append((1.0 - alpha) * weight + alpha * sim)
    order = sorted(range(len(scores)), key=lambda i: (-scores[i], i))
    return RankResponse(ranking=[i + 1 for i in order], reasoning=None, source="keyword")


class KeywordOracle:
    """TF-IDF blend oracle; stateless per call, safe for concurrent searches."""

    def __init__(self, model: TfidfModel, corpus: Corpus, alpha: float = 0.5):
        self.model = model
        self.corpus = corpus
        self.alpha = alpha

    def rank(self, request: RankRequest) -> RankResponse:
        weights = [c.weight for c in request.candidates]
        return keyword_rank(request, weights, self.model, self.corpus, self.alpha)


# ---------------------------------------------------------------------------
# mock oracle


class MockScriptExhausted(RuntimeError):
    pass


class MockOracle:
    """Deterministic oracle for tests and offline runs.

    Driven either by a script (an explicit list of rankings, consumed one per
    call) or by a rule mapping a request to a ranking. Records every request
    it sees. Scripted mocks are single-searcher: one search consumes the
    script in step order.
    """

    def __init__(
        self,
        script: Iterable[Sequence[int]] | None = None,
        rule: Callable[[RankRequest], Sequence[int]] | None = None,
    ):
        if (script is None) == (rule is None):
            raise SteeringError("provide exactly one of script or rule")
        self._script = [list(r) for r in script] if script is not None else None
        self._rule = rule
        self._cursor = 0
        self.requests: list[RankRequest] = []

    @staticmethod
    def identity() -> "MockOracle":
        return MockOracle(rule=lambda req: list(range(1, len(req.candidates) + 1)))

    @staticmethod
    def prefer_titles_containing(needle: str) -> "MockOracle":
        """Candidates whose title contains the needle rank first, stable otherwise."""

        def rule(request: RankRequest) -> list[int]:
            hits = [c.index for c in request.candidates if needle.lower() in c.title.lower()]
            misses = [c.index for c in request.candidates if c.index not in hits]
            return hits + misses

        return MockOracle(rule=rule)

    @staticmethod
    def agenda_overlap() -> "MockOracle":
        """Rank by token overlap between candidate title and the agenda text."""

        def rule(request: RankRequest) -> list[int]:
            agenda_tokens = set(tokenize(request.agenda))
            overlaps = [
                (len(agenda_tokens & set(tokenize(c.title))), c.index)
                for c in request.candidates
            ]
            return [idx for _, idx in sorted(overlaps, key=lambda t: (-t[0], t[1]))]

        return MockOracle(rule=rule)

    def rank(self, request: RankRequest) -> RankResponse:
        self.requests.append(request)
        if self._script is not None:
            if self._cursor >= len(self._script):
                raise MockScriptExhausted(
                    f"mock script exhausted after {self._cursor} calls"
                )
            ranking = self._script[self._cursor]
            self._cursor += 1
        else:
            assert self._rule is not None
            ranking = list(self._rule(request))
        n = len(request.candidates)
        if sorted(ranking) != list(range(1, n + 1)):
            raise SteeringError(f"mock produced a non-permutation {ranking} for n={n}")
        return RankResponse(ranking=list(ranking), reasoning=None, source="mock")
