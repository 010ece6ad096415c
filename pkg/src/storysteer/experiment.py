"""Experiment orchestration: run the (endpoints x agendas x methods) grid,
persist per-cell results resumably, and summarize in a run manifest."""

from __future__ import annotations

import dataclasses
import json
import os
import re
import sys
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from datetime import datetime, timezone
from pathlib import Path
from typing import Callable, Sequence

if sys.version_info >= (3, 11):
    import tomllib
else:
    import tomli as tomllib

from .corpus import Corpus, load_corpus
from .evaluation import (
    EvaluationRecord,
    JudgeConfig,
    LlmJudge,
    MockJudge,
    evaluate_storyline,
    select_endpoints,
)
from .graph import CoherenceGraph, SparsificationReport, build_graph, sparsify
from .llm import ChatEndpointConfig, EmbeddingEndpointConfig
from .pathfinding import SearchTrace, Storyline, agenda_path, max_capacity_path
from .representation import (
    DocumentRepresentation,
    compute_representations,
    ingest_representations,
)
from .steering import (
    Agenda,
    KeywordOracle,
    LlmOracle,
    MockOracle,
    builtin_agendas,
    load_agendas,
    tfidf_fit,
)

KNOWN_METHODS = ("max_capacity", "keyword", "llm_direct", "llm_cot")

DEFAULT_K = 5
DEFAULT_TAU = 1.0
DEFAULT_ALPHA = 0.5


class ConfigError(ValueError):
    pass


def _resolve_env_key(section: dict, context: str) -> str:
    name = section.get("api_key_env", "")
    if not name:
        return ""
    value = os.environ.get(name)
    if value is None:
        raise ConfigError(f"{context}: environment variable {name!r} is not set")
    return value


@dataclass(frozen=True)
class ExperimentConfig:
    """Parsed experiment configuration. Endpoint sections are kept as raw
    dicts carrying `api_key_env` names; secrets are resolved only when a
    client is built and never appear in the manifest snapshot."""

    corpus_path: str
    output_dir: str
    corpus_format: str = "jsonl"
    representation_source: str = "compute"  # compute | ingest
    representations_path: str | None = None
    topic_count: int = 4
    embedding: dict = field(default_factory=dict)
    tau: float = DEFAULT_TAU
    k: int = DEFAULT_K
    alpha: float = DEFAULT_ALPHA
    methods: tuple[str, ...] = ("max_capacity", "keyword", "llm_direct")
    agendas_path: str | None = None
    endpoint_count: int | None = None
    endpoint_pairs: tuple[tuple[str, str], ...] | None = None
    oracle: dict = field(default_factory=dict)
    judges: tuple[dict, ...] = ()
    seed: int = 0
    workers: int = 4
    mock_llm: bool = False

    def __post_init__(self) -> None:
        if self.k < 1:
            raise ConfigError(f"k must be >= 1, got {self.k}")
        if self.tau < 0:
            raise ConfigError(f"tau must be >= 0, got {self.tau}")
        if not 0.0 <= self.alpha <= 1.0:
            raise ConfigError(f"alpha must be in [0, 1], got {self.alpha}")
        if not self.methods:
            raise ConfigError("methods must be nonempty")
        unknown = [m for m in self.methods if m not in KNOWN_METHODS]
        if unknown:
            raise ConfigError(f"unknown methods {unknown}; known: {list(KNOWN_METHODS)}")
        if self.representation_source not in ("compute", "ingest"):
            raise ConfigError(
                f"representation source must be compute or ingest, "
                f"got {self.representation_source!r}"
            )
        if self.representation_source == "ingest" and not self.representations_path:
            raise ConfigError("representation source 'ingest' needs a path")
        if self.endpoint_count is None and self.endpoint_pairs is None:
            raise ConfigError("specify endpoint count or explicit pairs")
        if self.endpoint_count is not None and self.endpoint_count < 1:
            raise ConfigError("endpoint count must be >= 1")
        if self.topic_count < 1:
            raise ConfigError("topic count must be >= 1")
        if self.workers < 1:
            raise ConfigError("workers must be >= 1")

    # -- client builders (resolve secrets lazily) --

    def embedding_config(self) -> EmbeddingEndpointConfig:
        section = dict(self.embedding)
        provider = "stub" if self.mock_llm else section.get("provider", "stub")
        return EmbeddingEndpointConfig(
            provider=provider,
            base_url=section.get("base_url", ""),
            model=section.get("model", ""),
            api_key=_resolve_env_key(section, "embedding") if provider == "openai" else "",
            batch_size=section.get("batch_size", 64),
            stub_dim=section.get("stub_dim", 32),
        )

    def oracle_config(self) -> ChatEndpointConfig:
        if not self.oracle.get("base_url") or not self.oracle.get("model"):
            raise ConfigError("oracle endpoint needs base_url and model")
        return ChatEndpointConfig(
            base_url=self.oracle["base_url"],
            model=self.oracle["model"],
            api_key=_resolve_env_key(self.oracle, "oracle"),
            temperature=self.oracle.get("temperature", 0.3),
            top_p=self.oracle.get("top_p", 0.9),
        )

    def judge_configs(self) -> list[JudgeConfig]:
        configs = []
        for i, section in enumerate(self.judges):
            if not section.get("base_url") or not section.get("model"):
                raise ConfigError(f"judge {i}: needs base_url and model")
            configs.append(
                JudgeConfig(
                    judge_id=section.get("judge_id", f"judge-{i}"),
                    chat=ChatEndpointConfig(
                        base_url=section["base_url"],
                        model=section["model"],
                        api_key=_resolve_env_key(section, f"judge {i}"),
                        temperature=section.get("temperature", 0.3),
                        top_p=section.get("top_p", 0.9),
                    ),
                )
            )
        return configs

    def snapshot(self) -> dict:
        """Manifest-safe dict: everything except resolved secrets."""

        def strip(section: dict) -> dict:
            return {key: value for key, value in section.items() if key != "api_key"}

        raw = dataclasses.asdict(self)
        raw["embedding"] = strip(raw["embedding"])
        raw["oracle"] = strip(raw["oracle"])
        raw["judges"] = [strip(j) for j in raw["judges"]]
        raw["methods"] = list(self.methods)
        if self.endpoint_pairs is not None:
            raw["endpoint_pairs"] = [list(p) for p in self.endpoint_pairs]
        return raw


def load_config(
    path: str | Path,
    seed: int | None = None,
    mock_llm: bool | None = None,
) -> ExperimentConfig:
    """Load a TOML experiment config; relative paths resolve against the
    config file's directory. CLI overrides win over file values."""
    path = Path(path)
    with path.open("rb") as handle:
        raw = tomllib.load(handle)
    base = path.parent

    def resolve(p: str | None) -> str | None:
        if p is None or p == "":
            return None
        candidate = Path(p)
        return str(candidate if candidate.is_absolute() else base / candidate)

    corpus = raw.get("corpus", {})
    representation = raw.get("representation", {})
    graph = raw.get("graph", {})
    extract = raw.get("extract", {})
    agendas = raw.get("agendas", {})
    endpoints = raw.get("endpoints", {})
    run = raw.get("run", {})

    corpus_path = resolve(corpus.get("path"))
    if corpus_path is None:
        raise ConfigError(f"{path}: corpus.path is required")
    output_dir = resolve(run.get("output_dir", "out"))
    pairs = endpoints.get("pairs")
    return ExperimentConfig(
        corpus_path=corpus_path,
        corpus_format=corpus.get("format", "jsonl"),
        representation_source=representation.get("source", "compute"),
        representations_path=resolve(representation.get("path")),
        topic_count=representation.get("topic_count", 4),
        embedding=raw.get("embedding", {}),
        tau=float(graph.get("tau", DEFAULT_TAU)),
        k=extract.get("k", DEFAULT_K),
        alpha=float(extract.get("alpha", DEFAULT_ALPHA)),
        methods=tuple(extract.get("methods", ["max_capacity", "keyword", "llm_direct"])),
        agendas_path=resolve(agendas.get("path")),
        endpoint_count=endpoints.get("count"),
        endpoint_pairs=(
            tuple((p[0], p[1]) for p in pairs) if pairs is not None else None
        ),
        oracle=raw.get("oracle", {}),
        judges=tuple(raw.get("judges", [])),
        seed=seed if seed is not None else run.get("seed", 0),
        workers=run.get("workers", 4),
        mock_llm=mock_llm if mock_llm is not None else run.get("mock_llm", False),
        output_dir=output_dir,
    )


# ---------------------------------------------------------------------------
# grid planning

_SAFE_PART = re.compile(r"[^A-Za-z0-9._-]")


def _safe(part: str) -> str:
    return _SAFE_PART.sub("-", part)


@dataclass(frozen=True)
class Cell:
    source: str
    target: str
    agenda: Agenda
    method: str

    @property
    def key(self) -> str:
        return "__".join(
            _safe(p) for p in (self.source, self.target, self.agenda.id, self.method)
        )


def plan_cells(
    pairs: Sequence[tuple[str, str]],
    agendas: Sequence[Agenda],
    methods: Sequence[str],
) -> list[Cell]:
    """Full cross product in configuration order: endpoints, then agendas,
    then methods. The unsteered baseline still crosses with every agenda —
    its path ignores the agenda but its alignment evaluation does not."""
    cells = [
        Cell(source=s, target=t, agenda=agenda, method=method)
        for (s, t) in pairs
        for agenda in agendas
        for method in methods
    ]
    keys = [c.key for c in cells]
    if len(set(keys)) != len(keys):
        raise ConfigError("cell keys collide; use filename-safe document/agenda ids")
    return cells


# ---------------------------------------------------------------------------
# persistence helpers


def dumps_stable(obj: object) -> str:
    return json.dumps(obj, sort_keys=True, ensure_ascii=False, indent=2) + "\n"


def dumps_line(obj: object) -> str:
    return json.dumps(obj, sort_keys=True, ensure_ascii=False, separators=(",", ":"))


def atomic_write_text(path: Path, text: str) -> None:
    tmp = path.with_name(f"{path.name}.tmp{os.getpid()}")
    tmp.write_text(text, encoding="utf-8")
    os.replace(tmp, path)


# ---------------------------------------------------------------------------
# manifest


@dataclass
class CellResult:
    key: str
    source: str
    target: str
    agenda_id: str
    method: str
    status: str  # ok | no_path | failed
    resumed: bool = False
    oracle_calls: int = 0
    fallback_count: int = 0
    elapsed_seconds: float = 0.0
    error: str | None = None

    def to_dict(self) -> dict:
        return {
            "source": self.source,
            "target": self.target,
            "agenda_id": self.agenda_id,
            "method": self.method,
            "status": self.status,
            "resumed": self.resumed,
            "oracle_calls": self.oracle_calls,
            "fallback_count": self.fallback_count,
            "elapsed_seconds": self.elapsed_seconds,
            "error": self.error,
            "files": {
                "storyline": f"storylines/{self.key}.json",
                "trace": f"traces/{self.key}.json",
                "evaluation": f"evals/{self.key}.json",
            },
        }


@dataclass
class RunManifest:
    created: str
    finished: str
    elapsed_seconds: float
    seed: int
    mock_llm: bool
    config: dict
    sparsification: dict
    endpoints: dict
    cells: dict[str, CellResult]
    counts: dict

    def __post_init__(self) -> None:
        for key, cell in self.cells.items():
            if cell.status not in ("ok", "no_path", "failed"):
                raise ConfigError(f"cell {key}: unknown status {cell.status!r}")
            if cell.status == "failed" and not cell.error:
                raise ConfigError(f"cell {key}: failure without an explanation")

    def to_dict(self) -> dict:
        return {
            "schema": "run_manifest/v1",
            "created": self.created,
            "finished": self.finished,
            "elapsed_seconds": self.elapsed_seconds,
            "seed": self.seed,
            "mock_llm": self.mock_llm,
            "config": self.config,
            "sparsification": self.sparsification,
            "endpoints": self.endpoints,
            "cells": {key: cell.to_dict() for key, cell in sorted(self.cells.items())},
            "counts": self.counts,
        }


# ---------------------------------------------------------------------------
# pipeline assembly (shared with the CLI and the service)


@dataclass
class Pipeline:
    """Loaded corpus, representations, and sparsified graph: everything the
    extract/evaluate stages need, built once per run."""

    config: ExperimentConfig
    corpus: Corpus
    representations: dict[str, DocumentRepresentation]
    graph: CoherenceGraph
    sparsification: SparsificationReport
    agendas: list[Agenda]

    def agenda_by_id(self, agenda_id: str) -> Agenda:
        for agenda in self.agendas:
            if agenda.id == agenda_id:
                return agenda
        raise ConfigError(f"unknown agenda id {agenda_id!r}")


def build_pipeline(config: ExperimentConfig) -> Pipeline:
    corpus = load_corpus(config.corpus_path, config.corpus_format)
    if config.representation_source == "ingest":
        representations = ingest_representations(config.representations_path, corpus)
    else:
        representations = compute_representations(
            corpus,
            config.embedding_config(),
            topic_count=config.topic_count,
            seed=config.seed,
        )
    dense = build_graph(representations, corpus)
    graph, report = sparsify(dense, config.tau)
    if config.agendas_path is not None:
        agendas = load_agendas(config.agendas_path)
    else:
        agendas = builtin_agendas()
    return Pipeline(
        config=config,
        corpus=corpus,
        representations=representations,
        graph=graph,
        sparsification=report,
        agendas=agendas,
    )


@dataclass
class OracleFactory:
    """Builds the per-cell steering oracle and the judge list. LLM oracles
    share one client config; mock oracles are fresh per cell so request
    recording never crosses threads."""

    config: ExperimentConfig
    pipeline: Pipeline

    def __post_init__(self) -> None:
        self._tfidf = (
            tfidf_fit(self.pipeline.corpus) if "keyword" in self.config.methods else None
        )
        # fail fast on missing oracle config instead of mid-grid
        self._oracle_config = None
        wants_llm = any(m.startswith("llm_") for m in self.config.methods)
        if wants_llm and not self.config.mock_llm:
            self._oracle_config = self.config.oracle_config()

    def steering_oracle(self, method: str):
        if method == "keyword":
            if self._tfidf is None:
                self._tfidf = tfidf_fit(self.pipeline.corpus)
            return KeywordOracle(self._tfidf, self.pipeline.corpus, self.config.alpha)
        if method in ("llm_direct", "llm_cot"):
            if self.config.mock_llm:
                return MockOracle.agenda_overlap()
            mode = "direct" if method == "llm_direct" else "cot"
            return LlmOracle(self._oracle_config or self.config.oracle_config(), mode)
        raise ConfigError(f"method {method!r} takes no steering oracle")

    def judges(self):
        if self.config.mock_llm:
            return [MockJudge("mock-judge-a"), MockJudge("mock-judge-b")]
        return [LlmJudge(cfg) for cfg in self.config.judge_configs()]


def extract_cell(
    pipeline: Pipeline,
    factory: OracleFactory,
    cell: Cell,
    on_step=None,
) -> tuple[Storyline | None, SearchTrace]:
    """One grid cell's pathfinding. No-path is a normal outcome."""
    if cell.method == "max_capacity":
        storyline = max_capacity_path(pipeline.graph, cell.source, cell.target)
        if storyline is not None:
            storyline = dataclasses.replace(storyline, agenda_id=cell.agenda.id)
        return storyline, SearchTrace(steps=[])
    oracle = factory.steering_oracle(cell.method)
    return agenda_path(
        pipeline.graph,
        cell.source,
        cell.target,
        cell.agenda,
        k=pipeline.config.k,
        oracle=oracle,
        method=cell.method,
        on_step=on_step,
    )


# ---------------------------------------------------------------------------
# the run


def _utcnow() -> str:
    return datetime.now(timezone.utc).isoformat()


def _cell_paths(out: Path, key: str) -> tuple[Path, Path, Path]:
    return (
        out / "storylines" / f"{key}.json",
        out / "traces" / f"{key}.json",
        out / "evals" / f"{key}.json",
    )


def _fallback_count(trace: SearchTrace) -> int:
    return sum(1 for step in trace.steps if step.source == "fallback_coherence")


def _run_cell(
    pipeline: Pipeline, factory: OracleFactory, cell: Cell, out: Path
) -> CellResult:
    t0 = time.perf_counter()
    storyline_path, trace_path, eval_path = _cell_paths(out, cell.key)
    result = CellResult(
        key=cell.key,
        source=cell.source,
        target=cell.target,
        agenda_id=cell.agenda.id,
        method=cell.method,
        status="ok",
    )
    try:
        storyline, trace = extract_cell(pipeline, factory, cell)
        result.oracle_calls = (
            storyline.oracle_call_count if storyline is not None else len(trace.steps)
        )
        result.fallback_count = _fallback_count(trace)
        record: EvaluationRecord | None = None
        if storyline is None:
            result.status = "no_path"
        else:
            record = evaluate_storyline(
                storyline,
                pipeline.corpus,
                cell.agenda,
                factory.judges(),
                storyline_id=cell.key,
            )
        atomic_write_text(
            storyline_path,
            dumps_stable(
                {
                    "schema": "storyline_cell/v1",
                    "cell": cell.key,
                    "source": cell.source,
                    "target": cell.target,
                    "agenda_id": cell.agenda.id,
                    "method": cell.method,
                    "status": result.status,
                    "storyline": (
                        storyline.to_dict(include_elapsed=False)
                        if storyline is not None
                        else None
                    ),
                }
            ),
        )
        atomic_write_text(
            trace_path,
            dumps_stable(
                {
                    "schema": "trace_cell/v1",
                    "cell": cell.key,
                    "oracle_calls": result.oracle_calls,
                    "fallback_count": result.fallback_count,
                    "steps": trace.to_dict()["steps"],
                }
            ),
        )
        atomic_write_text(
            eval_path,
            dumps_stable(
                {
                    "schema": "evaluation_cell/v1",
                    "cell": cell.key,
                    "status": result.status,
                    "error": None,
                    "record": record.to_dict() if record is not None else None,
                }
            ),
        )
    except Exception as exc:  # noqa: BLE001 - cell isolation is the point
        result.status = "failed"
        result.error = f"{type(exc).__name__}: {exc}"
        # leave no cell files behind so a resume retries this cell
        for path in (storyline_path, trace_path, eval_path):
            path.unlink(missing_ok=True)
    result.elapsed_seconds = time.perf_counter() - t0
    return result


def _resume_cell(cell: Cell, out: Path) -> CellResult | None:
    storyline_path, trace_path, eval_path = _cell_paths(out, cell.key)
    if not (storyline_path.exists() and trace_path.exists() and eval_path.exists()):
        return None
    stored = json.loads(storyline_path.read_text("utf-8"))
    trace = json.loads(trace_path.read_text("utf-8"))
    return CellResult(
        key=cell.key,
        source=cell.source,
        target=cell.target,
        agenda_id=cell.agenda.id,
        method=cell.method,
        status=stored.get("status", "ok"),
        resumed=True,
        oracle_calls=trace.get("oracle_calls", 0),
        fallback_count=trace.get("fallback_count", 0),
    )


def _aggregate_outputs(out: Path, cells: Sequence[Cell]) -> None:
    storyline_lines = []
    eval_lines = []
    for cell in sorted(cells, key=lambda c: c.key):
        storyline_path, _, eval_path = _cell_paths(out, cell.key)
        if storyline_path.exists():
            storyline_lines.append(dumps_line(json.loads(storyline_path.read_text("utf-8"))))
        if eval_path.exists():
            stored = json.loads(eval_path.read_text("utf-8"))
            if stored.get("record") is not None:
                eval_lines.append(dumps_line(stored["record"]))
    atomic_write_text(out / "storylines.jsonl", "".join(line + "\n" for line in storyline_lines))
    atomic_write_text(out / "evals.jsonl", "".join(line + "\n" for line in eval_lines))


def resolve_endpoints(pipeline: Pipeline) -> tuple[list[tuple[str, str]], dict]:
    config = pipeline.config
    if config.endpoint_pairs is not None:
        pairs = list(config.endpoint_pairs)
        for s, t in pairs:
            if s not in pipeline.corpus or t not in pipeline.corpus:
                raise ConfigError(f"endpoint pair ({s!r}, {t!r}) not in corpus")
        meta = {"mode": "explicit", "requested": len(pairs), "truncated": False}
    else:
        selection = select_endpoints(
            pipeline.graph, pipeline.representations, config.endpoint_count
        )
        pairs = [tuple(p) for p in selection.pairs]
        meta = {
            "mode": "selected",
            "requested": config.endpoint_count,
            "truncated": selection.truncated,
        }
    meta["pairs"] = [list(p) for p in pairs]
    return pairs, meta


def run_experiment(
    config: ExperimentConfig,
    on_cell: Callable[[CellResult], None] | None = None,
) -> RunManifest:
    """Execute the full grid. Cells whose three output files already exist
    are skipped (resume); failures are recorded and the run continues."""
    created = _utcnow()
    t0 = time.perf_counter()
    pipeline = build_pipeline(config)
    pairs, endpoint_meta = resolve_endpoints(pipeline)
    cells = plan_cells(pairs, pipeline.agendas, config.methods)
    factory = OracleFactory(config, pipeline)

    out = Path(config.output_dir)
    for sub in ("storylines", "traces", "evals", "exports"):
        (out / sub).mkdir(parents=True, exist_ok=True)

    results: dict[str, CellResult] = {}
    pending: list[Cell] = []
    for cell in cells:
        resumed = _resume_cell(cell, out)
        if resumed is not None:
            results[cell.key] = resumed
            if on_cell is not None:
                on_cell(resumed)
        else:
            pending.append(cell)

    if pending:
        with ThreadPoolExecutor(max_workers=config.workers) as pool:
            futures = {
                pool.submit(_run_cell, pipeline, factory, cell, out): cell
                for cell in pending
            }
            for future, cell in futures.items():
                result = future.result()
                results[cell.key] = result
                if on_cell is not None:
                    on_cell(result)

    _aggregate_outputs(out, cells)

    counts = {
        "planned": len(cells),
        "ok": sum(1 for r in results.values() if r.status == "ok"),
        "no_path": sum(1 for r in results.values() if r.status == "no_path"),
        "failed": sum(1 for r in results.values() if r.status == "failed"),
        "resumed": sum(1 for r in results.values() if r.resumed),
    }
    manifest = RunManifest(
        created=created,
        finished=_utcnow(),
        elapsed_seconds=time.perf_counter() - t0,
        seed=config.seed,
        mock_llm=config.mock_llm,
        config=config.snapshot(),
        sparsification=pipeline.sparsification.to_dict(),
        endpoints=endpoint_meta,
        cells=results,
        counts=counts,
    )
    atomic_write_text(out / "manifest.json", dumps_stable(manifest.to_dict()))
    return manifest


# ---------------------------------------------------------------------------
# output schemas (for validation in tests and by consumers)

_SCORE = {"type": "integer", "minimum": 1, "maximum": 10}
_OVERALL = {"type": "number", "minimum": 1, "maximum": 10}

STORYLINE_SCHEMA = {
    "type": "object",
    "required": ["doc_ids", "capacity", "method", "agenda_id", "oracle_call_count"],
    "properties": {
        "doc_ids": {"type": "array", "items": {"type": "string"}, "minItems": 1},
        "capacity": {"type": "number", "minimum": 0, "maximum": 1},
        "method": {"enum": list(KNOWN_METHODS)},
        "agenda_id": {"type": ["string", "null"]},
        "oracle_call_count": {"type": "integer", "minimum": 0},
    },
}

STORYLINE_CELL_SCHEMA = {
    "type": "object",
    "required": ["schema", "cell", "source", "target", "agenda_id", "method", "status", "storyline"],
    "properties": {
        "schema": {"const": "storyline_cell/v1"},
        "cell": {"type": "string"},
        "source": {"type": "string"},
        "target": {"type": "string"},
        "agenda_id": {"type": "string"},
        "method": {"enum": list(KNOWN_METHODS)},
        "status": {"enum": ["ok", "no_path"]},
        "storyline": {"anyOf": [STORYLINE_SCHEMA, {"type": "null"}]},
    },
}

TRACE_STEP_SCHEMA = {
    "type": "object",
    "required": ["step", "node", "candidates", "ranking", "source"],
    "properties": {
        "step": {"type": "integer", "minimum": 0},
        "node": {"type": "string"},
        "candidates": {
            "type": "array",
            "items": {
                "type": "object",
                "required": ["index", "doc_id", "title", "weight", "capacity"],
            },
            "minItems": 2,
        },
        "ranking": {"type": "array", "items": {"type": "integer"}},
        "source": {"enum": ["llm", "fallback_coherence", "keyword", "mock"]},
    },
}

TRACE_CELL_SCHEMA = {
    "type": "object",
    "required": ["schema", "cell", "oracle_calls", "fallback_count", "steps"],
    "properties": {
        "schema": {"const": "trace_cell/v1"},
        "oracle_calls": {"type": "integer", "minimum": 0},
        "fallback_count": {"type": "integer", "minimum": 0},
        "steps": {"type": "array", "items": TRACE_STEP_SCHEMA},
    },
}

EVALUATION_RECORD_SCHEMA = {
    "type": "object",
    "required": [
        "schema",
        "storyline_id",
        "agenda_id",
        "coherence",
        "alignment",
        "failures",
        "aggregate_coherence",
        "aggregate_alignment",
    ],
    "properties": {
        "schema": {"const": "evaluation_record/v1"},
        "storyline_id": {"type": "string"},
        "agenda_id": {"type": ["string", "null"]},
        "coherence": {
            "type": "array",
            "items": {
                "type": "object",
                "required": [
                    "judge_id",
                    "logical_flow",
                    "thematic_consistency",
                    "temporal_coherence",
                    "narrative_completeness",
                    "overall_coherence",
                ],
                "properties": {
                    "logical_flow": _SCORE,
                    "thematic_consistency": _SCORE,
                    "temporal_coherence": _SCORE,
                    "narrative_completeness": _SCORE,
                    "overall_coherence": _OVERALL,
                },
            },
        },
        "alignment": {
            "type": "array",
            "items": {
                "type": "object",
                "required": [
                    "judge_id",
                    "agenda_support",
                    "persuasiveness",
                    "evidence_strength",
                    "narrative_direction",
                    "bias_effectiveness",
                    "overall_alignment",
                ],
                "properties": {
                    "agenda_support": _SCORE,
                    "persuasiveness": _SCORE,
                    "evidence_strength": _SCORE,
                    "narrative_direction": _SCORE,
                    "bias_effectiveness": _SCORE,
                    "overall_alignment": _OVERALL,
                },
            },
        },
        "failures": {"type": "array"},
        "aggregate_coherence": {"type": ["number", "null"]},
        "aggregate_alignment": {"type": ["number", "null"]},
    },
}

EVALUATION_CELL_SCHEMA = {
    "type": "object",
    "required": ["schema", "cell", "status", "error", "record"],
    "properties": {
        "schema": {"const": "evaluation_cell/v1"},
        "status": {"enum": ["ok", "no_path"]},
        "error": {"type": "null"},
        "record": {"anyOf": [EVALUATION_RECORD_SCHEMA, {"type": "null"}]},
    },
}

MANIFEST_SCHEMA = {
    "type": "object",
    "required": [
        "schema",
        "created",
        "finished",
        "elapsed_seconds",
        "seed",
        "mock_llm",
        "config",
        "sparsification",
        "endpoints",
        "cells",
        "counts",
    ],
    "properties": {
        "schema": {"const": "run_manifest/v1"},
        "cells": {
            "type": "object",
            "additionalProperties": {
                "type": "object",
                "required": ["status", "oracle_calls", "fallback_count", "files"],
                "properties": {"status": {"enum": ["ok", "no_path", "failed"]}},
            },
        },
        "counts": {
            "type": "object",
            "required": ["planned", "ok", "no_path", "failed", "resumed"],
        },
    },
}
