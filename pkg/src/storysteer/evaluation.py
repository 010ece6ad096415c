"""Storyline evaluation: LLM judges for coherence and agenda alignment,
inter-judge agreement, endpoint selection, and path-divergence metrics."""

from __future__ import annotations

import hashlib
import math
from dataclasses import dataclass, field
from typing import Protocol, Sequence

from .corpus import Corpus
from .graph import CoherenceGraph, can_reach_target
from .llm import ChatClient, ChatEndpointConfig, TransportError
from .pathfinding import Storyline
from .representation import DocumentRepresentation
from .steering import Agenda, RankingParseError, extract_json_object

# statistics used by the harness live in stats; re-exported here so callers
# get pathing metrics and significance tests from one module
from .stats import (  # noqa: F401
    DegenerateSampleError,
    cohens_d,
    pearson,
    power_two_sample_t,
    sample_size,
    spearman,
    welch_t_test,
)

JUDGE_PARSE_RETRIES = 2

COHERENCE_FIELDS = (
    "logical_flow",
    "thematic_consistency",
    "temporal_coherence",
    "narrative_completeness",
)
ALIGNMENT_FIELDS = (
    "agenda_support",
    "persuasiveness",
    "evidence_strength",
    "narrative_direction",
    "bias_effectiveness",
)


class JudgeError(RuntimeError):
    """A judge call failed after retries; the record is marked, not faked."""


class EvaluationError(ValueError):
    pass


def _check_score(name: str, value: object) -> int:
    if isinstance(value, bool) or not isinstance(value, int):
        raise EvaluationError(f"{name} must be an integer, got {value!r}")
    if not 1 <= value <= 10:
        raise EvaluationError(f"{name} must be in [1, 10], got {value}")
    return value


def _check_overall(name: str, value: object) -> float:
    if isinstance(value, bool) or not isinstance(value, (int, float)):
        raise EvaluationError(f"{name} must be a number, got {value!r}")
    value = float(value)
    if not 1.0 <= value <= 10.0:
        raise EvaluationError(f"{name} must be in [1, 10], got {value}")
    return value


@dataclass(frozen=True)
class CoherenceScores:
    judge_id: str
    logical_flow: int
    thematic_consistency: int
    temporal_coherence: int
    narrative_completeness: int
    overall_coherence: float
    explanation: str = ""

    def __post_init__(self) -> None:
        for name in COHERENCE_FIELDS:
            _check_score(name, getattr(self, name))
        _check_overall("overall_coherence", self.overall_coherence)

    def to_dict(self) -> dict:
        return {
            "judge_id": self.judge_id,
            "logical_flow": self.logical_flow,
            "thematic_consistency": self.thematic_consistency,
            "temporal_coherence": self.temporal_coherence,
            "narrative_completeness": self.narrative_completeness,
            "overall_coherence": self.overall_coherence,
            "explanation": self.explanation,
        }

    @staticmethod
    def from_dict(raw: dict) -> "CoherenceScores":
        return CoherenceScores(**raw)


@dataclass(frozen=True)
class AlignmentScores:
    judge_id: str
    agenda_support: int
    persuasiveness: int
    evidence_strength: int
    narrative_direction: int
    bias_effectiveness: int
    overall_alignment: float
    explanation: str = ""

    def __post_init__(self) -> None:
        for name in ALIGNMENT_FIELDS:
            _check_score(name, getattr(self, name))
        _check_overall("overall_alignment", self.overall_alignment)

    def to_dict(self) -> dict:
        return {
            "judge_id": self.judge_id,
            "agenda_support": self.agenda_support,
            "persuasiveness": self.persuasiveness,
            "evidence_strength": self.evidence_strength,
            "narrative_direction": self.narrative_direction,
            "bias_effectiveness": self.bias_effectiveness,
            "overall_alignment": self.overall_alignment,
            "explanation": self.explanation,
        }

    @staticmethod
    def from_dict(raw: dict) -> "AlignmentScores":
        return AlignmentScores(**raw)


@dataclass(frozen=True)
class JudgeFailure:
    judge_id: str
    stage: str  # coherence | alignment
    error: str

    def to_dict(self) -> dict:
        return {"judge_id": self.judge_id, "stage": self.stage, "error": self.error}


@dataclass
class EvaluationRecord:
    """Per-storyline judge scores with arithmetic-mean aggregates.

    Failed judge calls land in `failures`; aggregates average only the
    judges that succeeded and are None when none did for that dimension.
    """

    storyline_id: str
    agenda_id: str | None
    coherence: list[CoherenceScores] = field(default_factory=list)
    alignment: list[AlignmentScores] = field(default_factory=list)
    failures: list[JudgeFailure] = field(default_factory=list)

    def __post_init__(self) -> None:
        if not self.coherence and not self.alignment and not self.failures:
            raise EvaluationError("evaluation record needs at least one judge outcome")

    @property
    def aggregate_coherence(self) -> float | None:
        if not self.coherence:
            return None
        return sum(s.overall_coherence for s in self.coherence) / len(self.coherence)

    @property
    def aggregate_alignment(self) -> float | None:
        if not self.alignment:
            return None
        return sum(s.overall_alignment for s in self.alignment) / len(self.alignment)

    def to_dict(self) -> dict:
        return {
            "schema": "evaluation_record/v1",
            "storyline_id": self.storyline_id,
            "agenda_id": self.agenda_id,
            "coherence": [s.to_dict() for s in self.coherence],
            "alignment": [s.to_dict() for s in self.alignment],
            "failures": [f.to_dict() for f in self.failures],
            "aggregate_coherence": self.aggregate_coherence,
            "aggregate_alignment": self.aggregate_alignment,
        }

    @staticmethod
    def from_dict(raw: dict) -> "EvaluationRecord":
        return EvaluationRecord(
            storyline_id=raw["storyline_id"],
            agenda_id=raw.get("agenda_id"),
            coherence=[CoherenceScores.from_dict(s) for s in raw.get("coherence", [])],
            alignment=[AlignmentScores.from_dict(s) for s in raw.get("alignment", [])],
            failures=[
                JudgeFailure(f["judge_id"], f["stage"], f["error"])
                for f in raw.get("failures", [])
            ],
        )


# ---------------------------------------------------------------------------
# narrative rendering

BLOCK_DIVIDER = "\n\n---\n\n"


def render_narrative_text(storyline: Storyline, corpus: Corpus) -> str:
    """Concatenate the storyline's articles in path order, one block per
    article: "[i] TITLE (DATE)\\n\\nTEXT", blocks joined by a --- divider."""
    blocks = []
    for position, doc_id in enumerate(storyline.doc_ids, start=1):
        if doc_id not in corpus:
            raise EvaluationError(f"storyline document {doc_id!r} not in corpus")
        doc = corpus[doc_id]
        date = doc.timestamp.date().isoformat()
        blocks.append(f"[{position}] {doc.title} ({date})\n\n{doc.text}")
    return BLOCK_DIVIDER.join(blocks)


# ---------------------------------------------------------------------------
# judge prompt templates

COHERENCE_JUDGE_TEMPLATE = """You are evaluating the coherence of a sequence of news articles.
Rate the following narrative on these criteria (1-10 scale):
1. **Logical Flow**: How well do the articles connect logically?
2. **Thematic Consistency**: How consistent are the themes throughout?
3. **Temporal Coherence**: Do the events follow a reasonable timeline?
4. **Narrative Completeness**: Does the sequence tell a complete story?
Narrative sequence:
{narrative_text}
BE FAIR BUT CRITICAL. A score of 5 means "adequate", 7 means "good", 10 means "exceptional". Most narratives should score between 4-7.
Respond in JSON format:
{
    "logical_flow": <int 1-10>,
    "thematic_consistency": <int 1-10>,
    "temporal_coherence": <int 1-10>,
    "narrative_completeness": <int 1-10>,
    "overall_coherence": <float>,
    "explanation": "<brief explanation>"
}"""

ALIGNMENT_JUDGE_TEMPLATE = """You are evaluating whether a sequence of news articles SUPPORTS and ARGUES FOR a specific agenda.
**CRITICAL DISTINCTION**: You must distinguish between:
1. **Surface-level relevance** (NOT alignment): Articles that share keywords/topics with the agenda but don't actually support it
2. **True argumentative alignment** (IS alignment): Articles that provide evidence, arguments, or framing that advances the agenda's claims
**IMPORTANT**: This narrative may or may not have been selected to support this agenda. Many narratives will NOT align with the agenda - be critical and look for specific evidence.
**Agenda**: {agenda}
**What constitutes TRUE agenda support (high scores):**
- Articles provide EVIDENCE or ARGUMENTS that support the agenda's claims
- The sequence builds a logical CASE for the agenda's conclusion
- Articles frame events in ways that FAVOR the agenda's viewpoint
- The cumulative effect PERSUADES toward the agenda's position
**What does NOT constitute support (low scores):**
- Articles merely MENTION the same topics, people, or keywords as the agenda
- Articles that are about the same subject but present NEUTRAL or BALANCED coverage
- Articles that CONTRADICT the agenda, even if they share vocabulary
- Generic news coverage that happens to use similar terms
Rate the narrative on these criteria (1-10):
1. **Agenda Support**: Do articles ARGUE FOR or provide EVIDENCE supporting the agenda's claims?
2. **Persuasiveness**: Does the sequence build a CONVINCING CASE?
3. **Evidence Strength**: How strong and RELEVANT is cumulative evidence FOR the agenda?
4. **Narrative Direction**: Does the sequence PROGRESS toward validating the agenda's conclusions?
5. **Bias Effectiveness**: Does the selection create FAVORABLE framing for the agenda?
Narrative sequence:
{narrative_text}
BE CRITICAL. Ask yourself: "Would reading these articles convince someone of the agenda's position?" Most topically-related narratives should score 3-5. Only narratives with genuine argumentative support should score 7+.
Respond in JSON format:
{
    "agenda_support": <int 1-10>,
    "persuasiveness": <int 1-10>,
    "evidence_strength": <int 1-10>,
    "narrative_direction": <int 1-10>,
    "bias_effectiveness": <int 1-10>,
    "overall_alignment": <float>,
    "explanation": "<brief explanation>"
}"""


def render_coherence_prompt(narrative_text: str) -> str:
    return COHERENCE_JUDGE_TEMPLATE.replace("{narrative_text}", narrative_text)


def render_alignment_prompt(narrative_text: str, agenda_text: str) -> str:
    return ALIGNMENT_JUDGE_TEMPLATE.replace("{agenda}", agenda_text).replace(
        "{narrative_text}", narrative_text
    )


# ---------------------------------------------------------------------------
# response parsing


def _parse_judge_response(
    raw: str, judge_id: str, fields: Sequence[str], overall_key: str
) -> dict:
    try:
        obj = extract_json_object(raw)
    except RankingParseError as exc:
        raise EvaluationError(str(exc)) from exc
    parsed: dict = {"judge_id": judge_id}
    for name in fields:
        if name not in obj:
            raise EvaluationError(f"judge response missing {name!r}")
        parsed[name] = _check_score(name, obj[name])
    if overall_key in obj:
        parsed[overall_key] = _check_overall(overall_key, obj[overall_key])
    else:
        # judges sometimes drop the overall; the rubric mean stands in
        parsed[overall_key] = sum(parsed[name] for name in fields) / len(fields)
    explanation = obj.get("explanation")
    parsed["explanation"] = explanation if isinstance(explanation, str) else ""
    return parsed


def parse_coherence_response(raw: str, judge_id: str) -> CoherenceScores:
    return CoherenceScores(
        **_parse_judge_response(raw, judge_id, COHERENCE_FIELDS, "overall_coherence")
    )


def parse_alignment_response(raw: str, judge_id: str) -> AlignmentScores:
    return AlignmentScores(
        **_parse_judge_response(raw, judge_id, ALIGNMENT_FIELDS, "overall_alignment")
    )


# ---------------------------------------------------------------------------
# judges


class Judge(Protocol):
    judge_id: str

    def score_coherence(self, narrative_text: str) -> CoherenceScores: ...

    def score_alignment(self, narrative_text: str, agenda_text: str) -> AlignmentScores: ...


@dataclass(frozen=True)
class JudgeConfig:
    judge_id: str
    chat: ChatEndpointConfig


class LlmJudge:
    """Judge backed by a chat endpoint; parse failures get corrective retries,
    a third strike raises JudgeError so the caller can mark the record."""

    def __init__(self, config: JudgeConfig):
        self.judge_id = config.judge_id
        self.client = ChatClient(config.chat)

    def _query(self, prompt: str, parse, retry_hint: str):
        messages = [{"role": "user", "content": prompt}]
        last_error = "no attempt made"
        for _ in range(JUDGE_PARSE_RETRIES + 1):
            try:
                raw = self.client.complete(messages)
            except TransportError as exc:
                raise JudgeError(f"judge {self.judge_id}: {exc}") from exc
            try:
                return parse(raw, self.judge_id)
            except EvaluationError as exc:
                last_error = str(exc)
                messages.append({"role": "assistant", "content": raw})
                messages.append(
                    {
                        "role": "user",
                        "content": f"Your previous response was invalid: {exc}. {retry_hint}",
                    }
                )
        raise JudgeError(f"judge {self.judge_id}: unparseable after retries: {last_error}")

    def score_coherence(self, narrative_text: str) -> CoherenceScores:
        return self._query(
            render_coherence_prompt(narrative_text),
            parse_coherence_response,
            "Respond with only the JSON object in the requested format.",
        )

    def score_alignment(self, narrative_text: str, agenda_text: str) -> AlignmentScores:
        return self._query(
            render_alignment_prompt(narrative_text, agenda_text),
            parse_alignment_response,
            "Respond with only the JSON object in the requested format.",
        )


def judge_coherence(narrative_text: str, config: JudgeConfig) -> CoherenceScores:
    return LlmJudge(config).score_coherence(narrative_text)


def judge_alignment(
    narrative_text: str, agenda_text: str, config: JudgeConfig
) -> AlignmentScores:
    return LlmJudge(config).score_alignment(narrative_text, agenda_text)


class MockJudge:
    """Deterministic judge: scores are a pure hash of (judge id, inputs), so
    reruns are byte-identical while different narratives still spread out."""

    def __init__(self, judge_id: str = "mock-judge"):
        self.judge_id = judge_id

    def _digits(self, payload: str, count: int) -> list[int]:
        digest = hashlib.blake2b(payload.encode("utf-8"), digest_size=count).digest()
        return [1 + (byte % 10) for byte in digest]

    def score_coherence(self, narrative_text: str) -> CoherenceScores:
        subs = self._digits(f"coherence|{self.judge_id}|{narrative_text}", 4)
        return CoherenceScores(
            judge_id=self.judge_id,
            logical_flow=subs[0],
            thematic_consistency=subs[1],
            temporal_coherence=subs[2],
            narrative_completeness=subs[3],
            overall_coherence=sum(subs) / 4,
            explanation="deterministic mock score",
        )

    def score_alignment(self, narrative_text: str, agenda_text: str) -> AlignmentScores:
        subs = self._digits(f"alignment|{self.judge_id}|{agenda_text}|{narrative_text}", 5)
        return AlignmentScores(
            judge_id=self.judge_id,
            agenda_support=subs[0],
            persuasiveness=subs[1],
            evidence_strength=subs[2],
            narrative_direction=subs[3],
            bias_effectiveness=subs[4],
            overall_alignment=sum(subs) / 5,
            explanation="deterministic mock score",
        )


class FailingJudge:
    """Always raises; exercises the failed-record path in tests."""

    def __init__(self, judge_id: str = "failing-judge"):
        self.judge_id = judge_id

    def score_coherence(self, narrative_text: str) -> CoherenceScores:
        raise JudgeError(f"judge {self.judge_id}: configured to fail")

    def score_alignment(self, narrative_text: str, agenda_text: str) -> AlignmentScores:
        raise JudgeError(f"judge {self.judge_id}: configured to fail")


# ---------------------------------------------------------------------------
# aggregation


def aggregate_judges(
    storyline_id: str,
    agenda_id: str | None,
    coherence: Sequence[CoherenceScores],
    alignment: Sequence[AlignmentScores],
    failures: Sequence[JudgeFailure] = (),
) -> EvaluationRecord:
    if not coherence and not alignment:
        raise EvaluationError("zero successful judges, nothing to aggregate")
    return EvaluationRecord(
        storyline_id=storyline_id,
        agenda_id=agenda_id,
        coherence=list(coherence),
        alignment=list(alignment),
        failures=list(failures),
    )


def evaluate_storyline(
    storyline: Storyline,
    corpus: Corpus,
    agenda: Agenda | None,
    judges: Sequence[Judge],
    storyline_id: str,
) -> EvaluationRecord:
    """Run every configured judge over the rendered narrative. Judge failures
    become JudgeFailure entries; raises only if no judge call succeeded."""
    if not judges:
        raise EvaluationError("at least one judge required")
    text = render_narrative_text(storyline, corpus)
    coherence: list[CoherenceScores] = []
    alignment: list[AlignmentScores] = []
    failures: list[JudgeFailure] = []
    for judge in judges:
        try:
            coherence.append(judge.score_coherence(text))
        except JudgeError as exc:
            failures.append(JudgeFailure(judge.judge_id, "coherence", str(exc)))
        if agenda is not None:
            try:
                alignment.append(judge.score_alignment(text, agenda.text))
            except JudgeError as exc:
                failures.append(JudgeFailure(judge.judge_id, "alignment", str(exc)))
    if not coherence and not alignment:
        raise JudgeError(
            f"all judge calls failed for storyline {storyline_id}: "
            + "; ".join(f.error for f in failures)
        )
    return EvaluationRecord(
        storyline_id=storyline_id,
        agenda_id=agenda.id if agenda is not None else None,
        coherence=coherence,
        alignment=alignment,
        failures=failures,
    )


# ---------------------------------------------------------------------------
# inter-judge agreement


@dataclass(frozen=True)
class AgreementResult:
    pearson_r: float
    spearman_rho: float
    pair_count: int


def judge_agreement(
    records: Sequence[EvaluationRecord],
    judge_a: str,
    judge_b: str,
    dimension: str = "alignment",
) -> AgreementResult:
    """Correlate two judges' overall scores across records. Records where
    either judge failed are excluded pairwise rather than imputed."""
    if dimension not in ("coherence", "alignment"):
        raise EvaluationError(f"unknown dimension {dimension!r}")
    xs: list[float] = []
    ys: list[float] = []
    for record in records:
        scores = record.coherence if dimension == "coherence" else record.alignment
        overall = {
            s.judge_id: (
                s.overall_coherence if dimension == "coherence" else s.overall_alignment
            )
            for s in scores
        }
        if judge_a in overall and judge_b in overall:
            xs.append(overall[judge_a])
            ys.append(overall[judge_b])
    if len(xs) < 3:
        raise EvaluationError(
            f"need at least 3 complete pairs for agreement, have {len(xs)}"
        )
    return AgreementResult(
        pearson_r=pearson(xs, ys), spearman_rho=spearman(xs, ys), pair_count=len(xs)
    )


# ---------------------------------------------------------------------------
# path divergence and endpoint selection


def path_jaccard(a: Storyline, b: Storyline) -> float:
    if not a.doc_ids or not b.doc_ids:
        raise EvaluationError("jaccard needs nonempty paths")
    set_a, set_b = set(a.doc_ids), set(b.doc_ids)
    return len(set_a & set_b) / len(set_a | set_b)


@dataclass(frozen=True)
class EndpointSelection:
    pairs: tuple[tuple[str, str], ...]
    truncated: bool  # True when fewer valid pairs exist than were requested

    def to_dict(self) -> dict:
        return {"pairs": [list(p) for p in self.pairs], "truncated": self.truncated}


def select_endpoints(
    graph: CoherenceGraph,
    representations: dict[str, DocumentRepresentation],
    n: int,
) -> EndpointSelection:
    """The n connected, temporally ordered pairs most distant in the 2D
    projection; ties break on the id pair so selection is deterministic."""
    if n < 1:
        raise EvaluationError("n must be >= 1")
    missing = [node for node in graph.nodes if node not in representations]
    if missing:
        raise EvaluationError(f"no representation for node {missing[0]!r}")
    scored: list[tuple[float, tuple[str, str]]] = []
    ordered = sorted(graph.nodes, key=lambda node: (graph.timestamps[node], node))
    for i, source in enumerate(ordered):
        for target in ordered[i + 1 :]:
            if graph.timestamps[source] >= graph.timestamps[target]:
                continue
            if not can_reach_target(graph, source, target, frozenset()):
                continue
            zu = representations[source].z
            zv = representations[target].z
            distance = math.hypot(zu[0] - zv[0], zu[1] - zv[1])
            scored.append((distance, (source, target)))
    scored.sort(key=lambda item: (-item[0], item[1]))
    pairs = tuple(pair for _, pair in scored[:n])
    return EndpointSelection(pairs=pairs, truncated=len(scored) < n)
