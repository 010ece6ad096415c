"""storysteer: agenda-steered narrative extraction over coherence graphs.

Build a temporal coherence graph from a timestamped corpus, extract
maximum-capacity storylines between endpoints, and steer extraction toward
natural-language agendas through a pluggable ranking oracle, with an
LLM-judge evaluation harness and an HTTP workbench service on top.
"""

from .corpus import Corpus, CorpusError, Document, load_corpus, save_corpus, temporal_order
from .evaluation import (
    AlignmentScores,
    CoherenceScores,
    EvaluationRecord,
    JudgeConfig,
    LlmJudge,
    MockJudge,
    aggregate_judges,
    evaluate_storyline,
    judge_agreement,
    path_jaccard,
    render_narrative_text,
    select_endpoints,
)
from .experiment import (
    ExperimentConfig,
    RunManifest,
    build_pipeline,
    load_config,
    plan_cells,
    run_experiment,
)
from .exports import export_map, export_trails
from .graph import CoherenceGraph, GraphError, build_graph, coherence, sparsify
from .llm import ChatEndpointConfig, EmbeddingEndpointConfig, TransportError
from .pathfinding import (
    PathError,
    SearchTrace,
    Storyline,
    agenda_path,
    max_capacity_path,
)
from .representation import (
    DocumentRepresentation,
    angular_similarity,
    compute_representations,
    ingest_representations,
    jensen_shannon_divergence,
    project_2d,
    soft_cluster,
)
from .stats import cohens_d, pearson, sample_size, spearman, welch_t_test
from .steering import (
    Agenda,
    KeywordOracle,
    LlmOracle,
    MockOracle,
    RankRequest,
    RankResponse,
    SteeringOracle,
    builtin_agendas,
    keyword_rank,
    llm_rank,
    load_agendas,
    parse_ranking,
    render_cot_prompt,
    render_direct_prompt,
    tfidf_fit,
    tfidf_similarity,
)

__version__ = "0.1.0"

__all__ = [
    "Agenda",
    "AlignmentScores",
    "ChatEndpointConfig",
    "CoherenceGraph",
    "CoherenceScores",
    "Corpus",
    "CorpusError",
    "Document",
    "DocumentRepresentation",
    "EmbeddingEndpointConfig",
    "EvaluationRecord",
    "ExperimentConfig",
    "GraphError",
    "JudgeConfig",
    "KeywordOracle",
    "LlmJudge",
    "LlmOracle",
    "MockJudge",
    "MockOracle",
    "PathError",
    "RankRequest",
    "RankResponse",
    "RunManifest",
    "SearchTrace",
    "SteeringOracle",
    "Storyline",
    "TransportError",
    "agenda_path",
    "aggregate_judges",
    "angular_similarity",
    "build_graph",
    "build_pipeline",
    "builtin_agendas",
    "cohens_d",
    "coherence",
    "compute_representations",
    "evaluate_storyline",
    "export_map",
    "export_trails",
    "ingest_representations",
    "jensen_shannon_divergence",
    "judge_agreement",
    "keyword_rank",
    "llm_rank",
    "load_agendas",
    "load_config",
    "load_corpus",
    "max_capacity_path",
    "parse_ranking",
    "path_jaccard",
    "pearson",
    "plan_cells",
    "project_2d",
    "render_cot_prompt",
    "render_direct_prompt",
    "render_narrative_text",
    "run_experiment",
    "sample_size",
    "save_corpus",
    "select_endpoints",
    "soft_cluster",
    "sparsify",
    "spearman",
    "temporal_order",
    "tfidf_fit",
    "tfidf_similarity",
    "welch_t_test",
]
