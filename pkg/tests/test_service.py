"""Workbench HTTP API: corpus/graph/projection reads, extraction jobs with
SSE progress, storyline storage, evaluation, jaccard, agendas, and auth."""

from __future__ import annotations

import json
import time

import pytest
from fastapi.testclient import TestClient

from storysteer.experiment import load_config
from storysteer.service import create_app

from conftest import write_experiment_toml

# endpoints with known behavior on the fixture corpus: the long pair routes
# through two multi-candidate pools, the short pair has no surviving route
REACHABLE = ("ar-001", "ar-040")
UNREACHABLE = ("ar-001", "ar-039")


@pytest.fixture(scope="module")
def client(tmp_path_factory):
    config = load_config(write_experiment_toml(tmp_path_factory.mktemp("svc")))
    app = create_app(config)
    with TestClient(app) as c:
        yield c


def _wait_terminal(client: TestClient, job_id: str, timeout: float = 15.0) -> dict:
    deadline = time.monotonic() + timeout
    while time.monotonic() < deadline:
        job = client.get(f"/api/jobs/{job_id}").json()
        if job["state"] in ("done", "failed", "no_path"):
            return job
        time.sleep(0.02)
    raise AssertionError(f"job {job_id} still {job['state']} after {timeout}s")


def _extract(client: TestClient, **body) -> dict:
    response = client.post("/api/extract", json=body)
    assert response.status_code == 202, response.text
    started = response.json()
    assert started["state"] in ("queued", "running", "done")
    return _wait_terminal(client, started["job_id"])


def _parse_sse(text: str) -> list[tuple[str, dict]]:
    events = []
    for chunk in text.split("\n\n"):
        if not chunk.strip():
            continue
        lines = chunk.split("\n")
        assert lines[0].startswith("event: ")
        assert lines[1].startswith("data: ")
        events.append((lines[0][7:], json.loads(lines[1][6:])))
    return events


# ---------------------------------------------------------------------------
# read-only endpoints


def test_corpus_listing(client):
    body = client.get("/api/corpus").json()
    assert body["count"] == 40
    row = body["documents"][0]
    assert set(row) == {"id", "title", "date"}
    full = client.get("/api/corpus", params={"full": 1}).json()
    assert "text" in full["documents"][0]
    assert "timestamp" in full["documents"][0]


def test_graph_summary(client):
    body = client.get("/api/graph/summary").json()
    assert body["nodes"] == 40
    assert body["edges"] > 0
    assert body["tau"] == 1.0
    assert body["sparsification"]["edges_after"] == body["edges"]


def test_projection_points_and_density(client):
    body = client.get("/api/projection").json()
    assert len(body["points"]) == 40
    point = body["points"][0]
    assert {"doc_id", "title", "date", "x", "y"} <= set(point)
    assert len(body["density"]["values"]) == 40


# ---------------------------------------------------------------------------
# agendas


def test_agendas_listing_and_create(client):
    body = client.get("/api/agendas").json()
    ids = [a["id"] for a in body["agendas"]]
    assert ids == sorted(ids)
    assert "freedom_movement" in ids

    created = client.post(
        "/api/agendas",
        json={"id": "test_new", "text": "a fresh angle", "category": "semantic"},
    )
    assert created.status_code == 201
    assert created.json()["id"] == "test_new"
    assert "test_new" in [
        a["id"] for a in client.get("/api/agendas").json()["agendas"]
    ]

    duplicate = client.post(
        "/api/agendas", json={"id": "test_new", "text": "again", "category": "literal"}
    )
    assert duplicate.status_code == 409

    invalid = client.post(
        "/api/agendas", json={"id": "bad", "text": "", "category": "literal"}
    )
    assert invalid.status_code == 400
    sideways = client.post(
        "/api/agendas", json={"id": "bad2", "text": "t", "category": "sideways"}
    )
    assert sideways.status_code == 400


# ---------------------------------------------------------------------------
# extraction jobs


def test_extract_max_capacity_job(client):
    job = _extract(
        client, source=REACHABLE[0], target=REACHABLE[1], method="max_capacity"
    )
    assert job["state"] == "done"
    assert job["storyline_id"]
    stored = client.get(f"/api/storylines/{job['storyline_id']}").json()
    doc_ids = stored["storyline"]["doc_ids"]
    assert doc_ids[0] == REACHABLE[0] and doc_ids[-1] == REACHABLE[1]
    assert stored["trace"]["steps"] == []
    assert stored["trails"]["schema"] == "trails/v1"
    assert stored["map"]["dot"].startswith("digraph narrative_map {")
    assert stored["map"]["data"]["schema"] == "map/v1"


def test_extract_llm_job_and_sse_feed_matches_trace(client):
    job = _extract(
        client,
        source=REACHABLE[0],
        target=REACHABLE[1],
        method="llm_direct",
        agenda_id="freedom_movement",
    )
    assert job["state"] == "done"
    stored = client.get(f"/api/storylines/{job['storyline_id']}").json()
    steps = stored["trace"]["steps"]
    assert len(steps) > 0
    assert stored["storyline"]["oracle_call_count"] == len(steps)

    response = client.get(f"/api/jobs/{job['job_id']}/events")
    assert response.status_code == 200
    assert response.headers["content-type"].startswith("text/event-stream")
    events = _parse_sse(response.text)
    step_events = [data for name, data in events if name == "step"]
    assert len(step_events) == len(steps)
    assert step_events == steps
    end_events = [data for name, data in events if name == "end"]
    assert end_events == [
        {"state": "done", "storyline_id": job["storyline_id"], "error": None}
    ]


def test_extract_no_path_job(client):
    job = _extract(
        client, source=UNREACHABLE[0], target=UNREACHABLE[1], method="max_capacity"
    )
    assert job["state"] == "no_path"
    assert job["storyline_id"] is None
    events = _parse_sse(client.get(f"/api/jobs/{job['job_id']}/events").text)
    assert events[-1][0] == "end"
    assert events[-1][1]["state"] == "no_path"


def test_extract_adhoc_agenda_text(client):
    job = _extract(
        client,
        source=REACHABLE[0],
        target=REACHABLE[1],
        method="keyword",
        agenda_text="crowds fill the streets",
    )
    assert job["state"] == "done"
    stored = client.get(f"/api/storylines/{job['storyline_id']}").json()
    assert stored["storyline"]["agenda_id"] == "adhoc"


def test_extract_validation_errors(client):
    ok = {"source": REACHABLE[0], "target": REACHABLE[1]}
    assert (
        client.post("/api/extract", json={**ok, "method": "divination"}).status_code
        == 400
    )
    assert (
        client.post(
            "/api/extract", json={"source": "ghost", "target": REACHABLE[1]}
        ).status_code
        == 404
    )
    reversed_pair = client.post(
        "/api/extract",
        json={
            "source": REACHABLE[1],
            "target": REACHABLE[0],
            "method": "max_capacity",
        },
    )
    assert reversed_pair.status_code == 409
    no_agenda = client.post("/api/extract", json={**ok, "method": "llm_direct"})
    assert no_agenda.status_code == 400
    unknown_agenda = client.post(
        "/api/extract", json={**ok, "method": "llm_direct", "agenda_id": "nope"}
    )
    assert unknown_agenda.status_code == 404
    empty_agenda = client.post(
        "/api/extract", json={**ok, "method": "llm_direct", "agenda_text": ""}
    )
    assert empty_agenda.status_code == 400
    bad_k = client.post(
        "/api/extract",
        json={**ok, "method": "max_capacity", "k": 0},
    )
    assert bad_k.status_code == 400
    missing_fields = client.post("/api/extract", json={"source": REACHABLE[0]})
    assert missing_fields.status_code == 400


def test_unknown_job_and_storyline(client):
    assert client.get("/api/jobs/job-9999").status_code == 404
    assert client.get("/api/storylines/sl-9999").status_code == 404


# ---------------------------------------------------------------------------
# storyline listing, jaccard, evaluation


def test_storyline_listing_accumulates(client):
    job = _extract(
        client, source=REACHABLE[0], target=REACHABLE[1], method="max_capacity"
    )
    listing = client.get("/api/storylines").json()["storylines"]
    ids = [s["id"] for s in listing]
    assert job["storyline_id"] in ids
    assert ids == sorted(ids)
    entry = next(s for s in listing if s["id"] == job["storyline_id"])
    assert entry["doc_ids"][0] == REACHABLE[0]
    assert "elapsed" not in entry


def test_jaccard_between_runs(client):
    job_a = _extract(
        client, source=REACHABLE[0], target=REACHABLE[1], method="max_capacity"
    )
    job_b = _extract(
        client,
        source=REACHABLE[0],
        target=REACHABLE[1],
        method="llm_direct",
        agenda_id="state_crackdown",
    )
    a, b = job_a["storyline_id"], job_b["storyline_id"]
    same = client.get("/api/jaccard", params={"a": a, "b": a}).json()
    assert same["jaccard"] == 1.0
    cross = client.get("/api/jaccard", params={"a": a, "b": b}).json()
    assert 0.0 < cross["jaccard"] <= 1.0
    assert client.get("/api/jaccard", params={"a": a, "b": "sl-9999"}).status_code == 404


def test_evaluate_storyline_endpoint(client):
    job = _extract(
        client,
        source=REACHABLE[0],
        target=REACHABLE[1],
        method="llm_direct",
        agenda_id="freedom_movement",
    )
    record = client.post(f"/api/evaluate/{job['storyline_id']}")
    assert record.status_code == 200
    body = record.json()
    assert body["schema"] == "evaluation_record/v1"
    assert body["agenda_id"] == "freedom_movement"
    assert len(body["coherence"]) == 2
    assert len(body["alignment"]) == 2
    assert body["aggregate_alignment"] is not None

    # explicit agenda override
    override = client.post(
        f"/api/evaluate/{job['storyline_id']}", json={"agenda_id": "state_crackdown"}
    )
    assert override.json()["agenda_id"] == "state_crackdown"
    assert (
        client.post(
            f"/api/evaluate/{job['storyline_id']}", json={"agenda_id": "nope"}
        ).status_code
        == 404
    )
    assert client.post("/api/evaluate/sl-9999").status_code == 404


def test_evaluate_without_judges_is_503(tmp_path):
    config = load_config(
        write_experiment_toml(
            tmp_path, mock_llm=False, methods=["max_capacity", "keyword"]
        )
    )
    app = create_app(config)
    with TestClient(app) as bare:
        job_response = bare.post(
            "/api/extract",
            json={
                "source": REACHABLE[0],
                "target": REACHABLE[1],
                "method": "max_capacity",
            },
        )
        assert job_response.status_code == 202
        job = _wait_terminal(bare, job_response.json()["job_id"])
        response = bare.post(f"/api/evaluate/{job['storyline_id']}")
        assert response.status_code == 503
        assert "no judge endpoints" in response.json()["detail"]


# ---------------------------------------------------------------------------
# bearer token


def test_token_guard(tmp_path):
    config = load_config(write_experiment_toml(tmp_path))
    app = create_app(config, token="sekrit")
    with TestClient(app) as guarded:
        assert guarded.get("/api/corpus").status_code == 401
        assert (
            guarded.get(
                "/api/corpus", headers={"Authorization": "Bearer wrong"}
            ).status_code
            == 401
        )
        ok = guarded.get("/api/corpus", headers={"Authorization": "Bearer sekrit"})
        assert ok.status_code == 200
        assert ok.json()["count"] == 40


def test_union_map_for_pinned_storylines(client):
    job_a = _extract(
        client, source=REACHABLE[0], target=REACHABLE[1], method="max_capacity"
    )
    job_b = _extract(
        client,
        source=REACHABLE[0],
        target=REACHABLE[1],
        method="llm_direct",
        agenda_id="freedom_movement",
    )
    a, b = job_a["storyline_id"], job_b["storyline_id"]
    resp = client.get("/api/map", params={"ids": f"{a},{b}"})
    assert resp.status_code == 200
    body = resp.json()
    assert body["ids"] == [a, b]
    assert body["map"]["dot"].startswith("digraph narrative_map {")
    data = body["map"]["data"]
    edge_count = len(data["edges"])
    assert edge_count >= 3
    node_ids = {node["id"] for node in data["nodes"]}
    assert {REACHABLE[0], REACHABLE[1]} <= node_ids
    # trails carry one polyline per pinned storyline
    assert len(body["trails"]["paths"]) == 2

    assert client.get("/api/map", params={"ids": ""}).status_code == 400
    assert client.get("/api/map", params={"ids": "sl-9999"}).status_code == 404


def test_job_listing_and_polling_events(client):
    job = _extract(
        client,
        source=REACHABLE[0],
        target=REACHABLE[1],
        method="llm_direct",
        agenda_id="freedom_movement",
    )
    listing = client.get("/api/jobs").json()["jobs"]
    assert any(row["job_id"] == job["job_id"] for row in listing)
    assert all("events" not in row for row in listing)

    bare = client.get(f"/api/jobs/{job['job_id']}").json()
    assert "events" not in bare
    polled = client.get(f"/api/jobs/{job['job_id']}", params={"events": 1}).json()
    detail = client.get(f"/api/storylines/{job['storyline_id']}").json()
    assert polled["events"] == detail["trace"]["steps"]
