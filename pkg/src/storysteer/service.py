"""HTTP service for the workbench UI: corpus and graph inspection, async
extraction jobs with SSE progress, storyline storage, evaluation, agendas."""

from __future__ import annotations

import dataclasses
import json
import threading
from concurrent.futures import ThreadPoolExecutor
from contextlib import asynccontextmanager

from fastapi import FastAPI, HTTPException, Request
from fastapi.exceptions import RequestValidationError
from fastapi.middleware.cors import CORSMiddleware
from fastapi.responses import JSONResponse, StreamingResponse
from pydantic import BaseModel, Field

from .evaluation import JudgeError, evaluate_storyline, path_jaccard
from .experiment import ExperimentConfig, OracleFactory, Pipeline, build_pipeline
from .exports import density_grid, export_map, export_trails
from .llm import TransportError
from .pathfinding import SearchTrace, Storyline, agenda_path, max_capacity_path
from .steering import Agenda, SteeringError

TERMINAL_STATES = ("done", "failed", "no_path")


class ExtractRequest(BaseModel):
    source: str
    target: str
    method: str = "llm_direct"
    agenda_id: str | None = None
    agenda_text: str | None = None
    agenda_category: str = "literal"
    k: int | None = Field(default=None, ge=1, le=50)


class AgendaRequest(BaseModel):
    id: str
    text: str
    category: str = "literal"


class EvaluateRequest(BaseModel):
    # body optional; present only to override the stored agenda
    agenda_id: str | None = None


class _Job:
    def __init__(self, job_id: str, request: dict):
        self.job_id = job_id
        self.request = request
        self.state = "queued"
        self.events: list[dict] = []
        self.progress = 0
        self.storyline_id: str | None = None
        self.error: str | None = None
        self.condition = threading.Condition()

    def to_dict(self) -> dict:
        return {
            "job_id": self.job_id,
            "request": self.request,
            "state": self.state,
            "progress": self.progress,
            "storyline_id": self.storyline_id,
            "error": self.error,
        }


class ServiceState:
    """All mutable service state; jobs are linearizable per id through each
    job's own condition, the maps through one store lock."""

    def __init__(self, config: ExperimentConfig, workers: int = 2):
        self.config = config
        self.pipeline: Pipeline = build_pipeline(config)
        self.factory = OracleFactory(config, self.pipeline)
        self.pool = ThreadPoolExecutor(max_workers=workers)
        self.lock = threading.Lock()
        self.jobs: dict[str, _Job] = {}
        self.storylines: dict[str, dict] = {}
        self.agendas: dict[str, Agenda] = {a.id: a for a in self.pipeline.agendas}
        self._job_counter = 0
        self._storyline_counter = 0

    def next_job_id(self) -> str:
        with self.lock:
            self._job_counter += 1
            return f"job-{self._job_counter:04d}"

    def next_storyline_id(self) -> str:
        with self.lock:
            self._storyline_counter += 1
            return f"sl-{self._storyline_counter:04d}"


def _run_extraction(state: ServiceState, job: _Job, request: ExtractRequest, agenda: Agenda | None):
    pipeline = state.pipeline
    with job.condition:
        job.state = "running"
        job.condition.notify_all()
    try:
        if request.method == "max_capacity":
            storyline = max_capacity_path(pipeline.graph, request.source, request.target)
            trace = SearchTrace(steps=[])
            if storyline is not None and agenda is not None:
                storyline = dataclasses.replace(storyline, agenda_id=agenda.id)
        else:
            def on_step(step):
                with job.condition:
                    job.events.append(step.to_dict())
                    job.progress += 1
                    job.condition.notify_all()

            oracle = state.factory.steering_oracle(request.method)
            storyline, trace = agenda_path(
                pipeline.graph,
                request.source,
                request.target,
                agenda if agenda is not None else "",
                k=request.k or state.config.k,
                oracle=oracle,
                method=request.method,
                on_step=on_step,
            )
        if storyline is None:
            with job.condition:
                job.state = "no_path"
                job.condition.notify_all()
            return
        storyline_id = state.next_storyline_id()
        with state.lock:
            state.storylines[storyline_id] = {
                "storyline": storyline,
                "trace": trace,
                "job_id": job.job_id,
            }
        with job.condition:
            job.storyline_id = storyline_id
            job.state = "done"
            job.condition.notify_all()
    except Exception as exc:  # noqa: BLE001 - job must reach a terminal state
        with job.condition:
            job.error = f"{type(exc).__name__}: {exc}"
            job.state = "failed"
            job.condition.notify_all()


def _sse(event: str, data: dict) -> str:
    return f"event: {event}\ndata: {json.dumps(data, sort_keys=True)}\n\n"


def create_app(
    config: ExperimentConfig,
    token: str | None = None,
    workers: int = 2,
) -> FastAPI:
    state = ServiceState(config, workers=workers)

    @asynccontextmanager
    async def lifespan(app: FastAPI):
        yield
        state.pool.shutdown(wait=False, cancel_futures=True)

    app = FastAPI(title="storysteer service", openapi_url="/api/spec", lifespan=lifespan)
    app.state.service = state
    app.add_middleware(
        CORSMiddleware,
        allow_origins=["*"],
        allow_methods=["*"],
        allow_headers=["*"],
    )

    @app.exception_handler(RequestValidationError)
    async def validation_handler(request: Request, exc: RequestValidationError):
        return JSONResponse(status_code=400, content={"detail": exc.errors()})

    if token is not None:

        @app.middleware("http")
        async def check_token(request: Request, call_next):
            if request.url.path.startswith("/api"):
                header = request.headers.get("authorization", "")
                if header != f"Bearer {token}":
                    return JSONResponse(status_code=401, content={"detail": "unauthorized"})
            return await call_next(request)

    # -- corpus and graph --

    @app.get("/api/corpus")
    def get_corpus(full: int = 0):
        docs = []
        for doc in state.pipeline.corpus:
            row = {
                "id": doc.id,
                "title": doc.title,
                "date": doc.timestamp.date().isoformat(),
            }
            if full:
                row["text"] = doc.text
                row["timestamp"] = doc.timestamp.isoformat()
            docs.append(row)
        return {"documents": docs, "count": len(docs)}

    @app.get("/api/graph/summary")
    def graph_summary():
        graph = state.pipeline.graph
        return {
            "nodes": len(graph.nodes),
            "edges": graph.edge_count,
            "tau": state.config.tau,
            "sparsification": state.pipeline.sparsification.to_dict(),
        }

    @app.get("/api/projection")
    def projection():
        reps = state.pipeline.representations
        corpus = state.pipeline.corpus
        points = [
            {
                "doc_id": doc.id,
                "title": doc.title,
                "date": doc.timestamp.date().isoformat(),
                "x": reps[doc.id].z[0],
                "y": reps[doc.id].z[1],
            }
            for doc in corpus
        ]
        grid = density_grid([(reps[doc.id].z[0], reps[doc.id].z[1]) for doc in corpus])
        return {"points": points, "density": grid}

    # -- extraction jobs --

    @app.post("/api/extract", status_code=202)
    def extract(request: ExtractRequest):
        pipeline = state.pipeline
        if request.method not in ("max_capacity", "keyword", "llm_direct", "llm_cot"):
            raise HTTPException(status_code=400, detail=f"unknown method {request.method!r}")
        for doc_id in (request.source, request.target):
            if doc_id not in pipeline.corpus:
                raise HTTPException(status_code=404, detail=f"unknown document {doc_id!r}")
        ts = pipeline.graph.timestamps
        if ts[request.source] >= ts[request.target]:
            raise HTTPException(
                status_code=409,
                detail="source must strictly precede target in time",
            )
        agenda: Agenda | None = None
        if request.agenda_id is not None:
            with state.lock:
                agenda = state.agendas.get(request.agenda_id)
            if agenda is None:
                raise HTTPException(
                    status_code=404, detail=f"unknown agenda {request.agenda_id!r}"
                )
        elif request.agenda_text is not None:
            try:
                agenda = Agenda(
                    id="adhoc", text=request.agenda_text, category=request.agenda_category
                )
            except SteeringError as exc:
                raise HTTPException(status_code=400, detail=str(exc)) from exc
        elif request.method not in ("max_capacity",):
            raise HTTPException(
                status_code=400,
                detail=f"method {request.method!r} needs agenda_id or agenda_text",
            )
        job = _Job(state.next_job_id(), request.model_dump())
        with state.lock:
            state.jobs[job.job_id] = job
        state.pool.submit(_run_extraction, state, job, request, agenda)
        return {"job_id": job.job_id, "state": job.state}

    def _get_job(job_id: str) -> _Job:
        with state.lock:
            job = state.jobs.get(job_id)
        if job is None:
            raise HTTPException(status_code=404, detail=f"unknown job {job_id!r}")
        return job

    @app.get("/api/jobs")
    def list_jobs():
        with state.lock:
            jobs = sorted(state.jobs.items())
        return {"jobs": [job.to_dict() for _, job in jobs]}

    @app.get("/api/jobs/{job_id}")
    def job_state(job_id: str, events: int = 0):
        # events=1 backs the degraded polling path: clients that cannot hold
        # an event-stream connection diff this list against a local cursor
        job = _get_job(job_id)
        with job.condition:
            out = job.to_dict()
            if events:
                out["events"] = list(job.events)
        return out

    @app.get("/api/jobs/{job_id}/events")
    def job_events(job_id: str):
        job = _get_job(job_id)

        def stream():
            cursor = 0
            while True:
                with job.condition:
                    while cursor >= len(job.events) and job.state not in TERMINAL_STATES:
                        job.condition.wait(timeout=0.5)
                    pending = job.events[cursor:]
                    terminal = job.state in TERMINAL_STATES
                    snapshot = job.to_dict()
                for event in pending:
                    yield _sse("step", event)
                cursor += len(pending)
                if terminal and cursor >= snapshot["progress"]:
                    yield _sse(
                        "end",
                        {
                            "state": snapshot["state"],
                            "storyline_id": snapshot["storyline_id"],
                            "error": snapshot["error"],
                        },
                    )
                    return

        return StreamingResponse(stream(), media_type="text/event-stream")

    # -- storylines --

    def _get_stored(storyline_id: str) -> dict:
        with state.lock:
            stored = state.storylines.get(storyline_id)
        if stored is None:
            raise HTTPException(
                status_code=404, detail=f"unknown storyline {storyline_id!r}"
            )
        return stored

    @app.get("/api/storylines")
    def list_storylines():
        with state.lock:
            items = sorted(state.storylines.items())
        return {
            "storylines": [
                {
                    "id": sid,
                    "job_id": stored["job_id"],
                    **stored["storyline"].to_dict(include_elapsed=False),
                }
                for sid, stored in items
            ]
        }

    @app.get("/api/storylines/{storyline_id}")
    def get_storyline(storyline_id: str):
        stored = _get_stored(storyline_id)
        storyline: Storyline = stored["storyline"]
        trace: SearchTrace = stored["trace"]
        narrative_map = export_map([storyline], state.pipeline.corpus)
        return {
            "id": storyline_id,
            "job_id": stored["job_id"],
            "storyline": storyline.to_dict(include_elapsed=False),
            "trace": trace.to_dict(),
            "trails": export_trails([storyline], state.pipeline.representations),
            "map": {"dot": narrative_map.dot, "data": narrative_map.data},
        }

    @app.get("/api/jaccard")
    def jaccard(a: str, b: str):
        sa = _get_stored(a)["storyline"]
        sb = _get_stored(b)["storyline"]
        return {"a": a, "b": b, "jaccard": path_jaccard(sa, sb)}

    @app.get("/api/map")
    def union_map(ids: str):
        # comma-separated storyline ids; the comparison view renders the union
        wanted = [part for part in ids.split(",") if part]
        if not wanted:
            raise HTTPException(status_code=400, detail="ids query parameter is empty")
        storylines = [_get_stored(sid)["storyline"] for sid in wanted]
        narrative_map = export_map(storylines, state.pipeline.corpus)
        return {
            "ids": wanted,
            "map": {"dot": narrative_map.dot, "data": narrative_map.data},
            "trails": export_trails(storylines, state.pipeline.representations),
        }

    @app.post("/api/evaluate/{storyline_id}")
    def evaluate(storyline_id: str, request: EvaluateRequest | None = None):
        stored = _get_stored(storyline_id)
        storyline: Storyline = stored["storyline"]
        agenda: Agenda | None = None
        agenda_id = (
            request.agenda_id if request is not None and request.agenda_id else storyline.agenda_id
        )
        if agenda_id is not None:
            with state.lock:
                agenda = state.agendas.get(agenda_id)
            if agenda is None:
                raise HTTPException(status_code=404, detail=f"unknown agenda {agenda_id!r}")
        if not state.config.mock_llm and not state.config.judges:
            raise HTTPException(status_code=503, detail="no judge endpoints configured")
        try:
            record = evaluate_storyline(
                storyline,
                state.pipeline.corpus,
                agenda,
                state.factory.judges(),
                storyline_id=storyline_id,
            )
        except (JudgeError, TransportError) as exc:
            raise HTTPException(status_code=503, detail=str(exc)) from exc
        return record.to_dict()

    # -- agendas --

    @app.get("/api/agendas")
    def list_agendas():
        with state.lock:
            agendas = sorted(state.agendas.values(), key=lambda a: a.id)
        return {"agendas": [a.to_dict() for a in agendas]}

    @app.post("/api/agendas", status_code=201)
    def add_agenda(request: AgendaRequest):
        try:
            agenda = Agenda(id=request.id, text=request.text, category=request.category)
        except SteeringError as exc:
            raise HTTPException(status_code=400, detail=str(exc)) from exc
        with state.lock:
            if agenda.id in state.agendas:
                raise HTTPException(
                    status_code=409, detail=f"agenda {agenda.id!r} already exists"
                )
            state.agendas[agenda.id] = agenda
        return agenda.to_dict()

    return app
