"""Command-line interface. Exit codes: 0 success, 1 usage error, 2 runtime
failure."""

from __future__ import annotations

import argparse
import json
import os
import sys
from pathlib import Path

from .corpus import CorpusError, load_corpus, save_corpus
from .evaluation import EvaluationError, JudgeError, evaluate_storyline
from .experiment import (
    Cell,
    ConfigError,
    ExperimentConfig,
    OracleFactory,
    build_pipeline,
    dumps_stable,
    extract_cell,
    load_config,
    plan_cells,
    resolve_endpoints,
    run_experiment,
)
from .exports import ExportError, export_map, export_trails
from .graph import GraphError
from .llm import TransportError
from .pathfinding import PathError, Storyline
from .representation import RepresentationError, compute_representations, save_representations
from .steering import Agenda, SteeringError

USAGE_ERRORS = (ConfigError, FileNotFoundError)
RUNTIME_ERRORS = (
    CorpusError,
    RepresentationError,
    GraphError,
    PathError,
    SteeringError,
    EvaluationError,
    JudgeError,
    TransportError,
    ExportError,
    OSError,
    ValueError,
)


class _Parser(argparse.ArgumentParser):
    """argparse exits 2 on usage errors by default; the contract says 1."""

    def error(self, message: str):
        self.print_usage(sys.stderr)
        self.exit(1, f"{self.prog}: error: {message}\n")


def _add_common(parser: argparse.ArgumentParser, config_required: bool = True) -> None:
    parser.add_argument("--config", required=config_required, help="experiment TOML")
    parser.add_argument("--seed", type=int, default=None, help="override config seed")
    parser.add_argument(
        "--mock-llm",
        action="store_true",
        help="replace all remote calls with deterministic mocks",
    )


def _load(args: argparse.Namespace) -> ExperimentConfig:
    return load_config(
        args.config,
        seed=args.seed,
        mock_llm=True if args.mock_llm else None,
    )


def build_parser() -> _Parser:
    parser = _Parser(prog="storysteer", description=__doc__)
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    p = sub.add_parser("ingest", help="validate and normalize a corpus file")
    p.add_argument("--corpus", required=True)
    p.add_argument("--format", choices=["jsonl", "csv"], default="jsonl")
    p.add_argument("--out", default=None, help="write normalized JSONL here")

    p = sub.add_parser("represent", help="embed, project, and cluster the corpus")
    _add_common(p)
    p.add_argument("--out", default=None, help="representations JSONL path")

    p = sub.add_parser("graph", help="build and sparsify the coherence graph")
    _add_common(p)
    p.add_argument("--export", default=None, help="write graph JSON here")

    p = sub.add_parser("extract", help="extract one storyline")
    _add_common(p)
    p.add_argument("--source", required=True)
    p.add_argument("--target", required=True)
    p.add_argument("--agenda-id", default=None)
    p.add_argument("--agenda-text", default=None)
    p.add_argument(
        "--method",
        choices=["max_capacity", "keyword", "llm_direct", "llm_cot"],
        default="llm_direct",
    )
    p.add_argument("--k", type=int, default=None)
    p.add_argument("--trace-out", default=None, help="write the search trace here")
    p.add_argument("--dry-run", action="store_true", help="validate and print the plan")

    p = sub.add_parser("judge", help="evaluate a stored storyline")
    _add_common(p)
    p.add_argument("--storyline", required=True, help="storyline JSON file")
    p.add_argument("--agenda-id", default=None)

    p = sub.add_parser("experiment", help="run the full grid")
    _add_common(p)
    p.add_argument("--dry-run", action="store_true", help="print the cell plan only")

    p = sub.add_parser("export", help="write visualization exports from a finished run")
    _add_common(p)
    p.add_argument("--what", choices=["trails", "map"], required=True)
    p.add_argument("--out", default=None, help="output path (default under out/exports)")

    p = sub.add_parser("serve", help="start the workbench HTTP service")
    _add_common(p)
    p.add_argument("--host", default="127.0.0.1")
    p.add_argument("--port", type=int, default=8000)
    p.add_argument("--token-env", default=None, help="env var holding the bearer token")
    p.add_argument("--workers", type=int, default=2)

    return parser


# ---------------------------------------------------------------------------
# subcommand bodies


def _cmd_ingest(args) -> int:
    corpus = load_corpus(args.corpus, args.format)
    first = min(doc.timestamp for doc in corpus)
    last = max(doc.timestamp for doc in corpus)
    print(f"{len(corpus)} documents, {first.date()} .. {last.date()}")
    if args.out:
        save_corpus(corpus, args.out)
        print(f"normalized corpus written to {args.out}")
    return 0


def _cmd_represent(args) -> int:
    config = _load(args)
    corpus = load_corpus(config.corpus_path, config.corpus_format)
    representations = compute_representations(
        corpus,
        config.embedding_config(),
        topic_count=config.topic_count,
        seed=config.seed,
    )
    out = args.out or str(Path(config.output_dir) / "representations.jsonl")
    Path(out).parent.mkdir(parents=True, exist_ok=True)
    save_representations(representations, out)
    print(f"{len(representations)} representations written to {out}")
    return 0


def _cmd_graph(args) -> int:
    config = _load(args)
    pipeline = build_pipeline(config)
    report = pipeline.sparsification
    print(
        f"{len(pipeline.graph.nodes)} nodes, {pipeline.graph.edge_count} edges "
        f"(tau={config.tau}, threshold={report.threshold:.6f}, "
        f"kept {report.edges_after}/{report.edges_before})"
    )
    if args.export:
        Path(args.export).parent.mkdir(parents=True, exist_ok=True)
        Path(args.export).write_text(
            dumps_stable(pipeline.graph.to_json_dict()), encoding="utf-8"
        )
        print(f"graph JSON written to {args.export}")
    return 0


def _cmd_extract(args) -> int:
    config = _load(args)
    pipeline = build_pipeline(config)
    if args.agenda_id is not None:
        agenda = pipeline.agenda_by_id(args.agenda_id)
    elif args.agenda_text is not None:
        agenda = Agenda(id="adhoc", text=args.agenda_text, category="literal")
    elif args.method != "max_capacity":
        raise ConfigError(f"method {args.method!r} needs --agenda-id or --agenda-text")
    else:
        agenda = Agenda(id="none", text="(baseline)", category="literal")
    if args.k is not None and args.k < 1:
        raise ConfigError("--k must be >= 1")
    cell = Cell(source=args.source, target=args.target, agenda=agenda, method=args.method)
    if args.source not in pipeline.corpus or args.target not in pipeline.corpus:
        missing = args.source if args.source not in pipeline.corpus else args.target
        raise ConfigError(f"unknown document {missing!r}")
    if args.dry_run:
        print(
            json.dumps(
                {
                    "source": args.source,
                    "target": args.target,
                    "agenda_id": agenda.id,
                    "method": args.method,
                    "k": args.k or config.k,
                },
                indent=2,
            )
        )
        return 0
    if args.k is not None:
        import dataclasses as _dc

        pipeline = _dc.replace(pipeline, config=_dc.replace(config, k=args.k))
    factory = OracleFactory(pipeline.config, pipeline)
    storyline, trace = extract_cell(pipeline, factory, cell)
    payload = {
        "source": args.source,
        "target": args.target,
        "agenda_id": agenda.id,
        "method": args.method,
        "storyline": storyline.to_dict() if storyline is not None else None,
    }
    print(json.dumps(payload, indent=2, sort_keys=True))
    if args.trace_out:
        Path(args.trace_out).parent.mkdir(parents=True, exist_ok=True)
        Path(args.trace_out).write_text(dumps_stable(trace.to_dict()), encoding="utf-8")
    return 0


def _cmd_judge(args) -> int:
    config = _load(args)
    pipeline = build_pipeline(config)
    raw = json.loads(Path(args.storyline).read_text("utf-8"))
    if "storyline" in raw:  # cell file wrapper
        if raw["storyline"] is None:
            raise ConfigError(f"{args.storyline}: cell has no storyline (no_path)")
        storyline = Storyline.from_dict(raw["storyline"])
    else:
        storyline = Storyline.from_dict(raw)
    agenda = None
    agenda_id = args.agenda_id or storyline.agenda_id
    if agenda_id is not None and agenda_id != "none":
        agenda = pipeline.agenda_by_id(agenda_id)
    factory = OracleFactory(config, pipeline)
    record = evaluate_storyline(
        storyline,
        pipeline.corpus,
        agenda,
        factory.judges(),
        storyline_id=Path(args.storyline).stem,
    )
    print(json.dumps(record.to_dict(), indent=2, sort_keys=True))
    return 0


def _cmd_experiment(args) -> int:
    config = _load(args)
    if args.dry_run:
        pipeline = build_pipeline(config)
        pairs, meta = resolve_endpoints(pipeline)
        cells = plan_cells(pairs, pipeline.agendas, config.methods)
        print(f"{len(cells)} cells ({meta['mode']} endpoints):")
        for cell in cells:
            print(f"  {cell.key}")
        return 0

    def on_cell(result):
        print(f"  [{result.status}] {result.key} ({result.elapsed_seconds:.2f}s)")

    manifest = run_experiment(config, on_cell=on_cell)
    counts = manifest.counts
    print(
        f"done: {counts['ok']} ok, {counts['no_path']} no_path, "
        f"{counts['failed']} failed, {counts['resumed']} resumed "
        f"({manifest.elapsed_seconds:.1f}s) -> {config.output_dir}/manifest.json"
    )
    if counts["planned"] > 0 and counts["failed"] == counts["planned"]:
        print("error: every cell failed", file=sys.stderr)
        return 2
    return 0


def _load_run_storylines(config: ExperimentConfig) -> list[Storyline]:
    cells_dir = Path(config.output_dir) / "storylines"
    storylines = []
    for path in sorted(cells_dir.glob("*.json")):
        stored = json.loads(path.read_text("utf-8"))
        if stored.get("storyline") is not None:
            storylines.append(Storyline.from_dict(stored["storyline"]))
    if not storylines:
        raise ConfigError(f"no completed storylines under {cells_dir}")
    return storylines


def _cmd_export(args) -> int:
    config = _load(args)
    pipeline = build_pipeline(config)
    storylines = _load_run_storylines(config)
    exports_dir = Path(config.output_dir) / "exports"
    exports_dir.mkdir(parents=True, exist_ok=True)
    if args.what == "trails":
        payload = export_trails(storylines, pipeline.representations)
        out = Path(args.out) if args.out else exports_dir / "trails.json"
        out.parent.mkdir(parents=True, exist_ok=True)
        out.write_text(dumps_stable(payload), encoding="utf-8")
        print(f"trails export written to {out}")
    else:
        narrative_map = export_map(storylines, pipeline.corpus)
        dot_out = Path(args.out) if args.out else exports_dir / "map.dot"
        dot_out.parent.mkdir(parents=True, exist_ok=True)
        dot_out.write_text(narrative_map.dot, encoding="utf-8")
        json_out = dot_out.with_suffix(".json")
        json_out.write_text(dumps_stable(narrative_map.data), encoding="utf-8")
        print(f"map exports written to {dot_out} and {json_out}")
    return 0


def _cmd_serve(args) -> int:
    import uvicorn

    from .service import create_app

    config = _load(args)
    token = os.environ.get(args.token_env) if args.token_env else None
    if args.token_env and token is None:
        raise ConfigError(f"environment variable {args.token_env!r} is not set")
    app = create_app(config, token=token, workers=args.workers)
    uvicorn.run(app, host=args.host, port=args.port, log_level="info")
    return 0


_COMMANDS = {
    "ingest": _cmd_ingest,
    "represent": _cmd_represent,
    "graph": _cmd_graph,
    "extract": _cmd_extract,
    "judge": _cmd_judge,
    "experiment": _cmd_experiment,
    "export": _cmd_export,
    "serve": _cmd_serve,
}


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return _COMMANDS[args.command](args)
    except USAGE_ERRORS as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except RUNTIME_ERRORS as exc:
        print(f"error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
