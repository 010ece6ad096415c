#!/usr/bin/env python3
"""Record live service payloads for the workbench test fixtures.

Drives the fixture corpus service in mock mode through the full analyst loop
(inspect, extract twice, compare) and captures every response verbatim into
frontend/tests/fixtures/recorded.json. Mock mode is deterministic, so ids and
payloads are stable across recordings.
"""

from __future__ import annotations

import argparse
import json
import sys
import tempfile
import time
from pathlib import Path

from fastapi.testclient import TestClient

ROOT = Path(__file__).resolve().parents[1]
sys.path.insert(0, str(ROOT / "src"))

from storysteer.experiment import load_config  # noqa: E402
from storysteer.service import create_app  # noqa: E402

# this endpoint pair diverges under different agendas in mock mode, so the
# recorded comparison shows a jaccard strictly between 0 and 1
REACHABLE = ("ar-003", "ar-040")
UNREACHABLE = ("ar-001", "ar-039")
AGENDA_A = "freedom_uprising"
AGENDA_B = "government_censorship"


def _config(workdir: Path):
    text = f"""
[corpus]
path = "{ROOT / 'fixtures' / 'corpus.jsonl'}"
format = "jsonl"

[representation]
source = "compute"
topic_count = 3

[embedding]
provider = "stub"
stub_dim = 32

[graph]
tau = 1.0

[extract]
k = 3
alpha = 0.5
methods = ["max_capacity", "keyword", "llm_direct"]

[agendas]
path = "{ROOT / 'src' / 'storysteer' / 'data' / 'agendas.json'}"

[endpoints]
count = 2

[run]
seed = 0
output_dir = "{workdir / 'out'}"
workers = 2
mock_llm = true
"""
    path = workdir / "experiment.toml"
    path.write_text(text, encoding="utf-8")
    return load_config(path)


def _wait_done(client: TestClient, job_id: str) -> dict:
    deadline = time.time() + 30
    while time.time() < deadline:
        job = client.get(f"/api/jobs/{job_id}").json()
        if job["state"] in ("done", "failed", "no_path"):
            return job
        time.sleep(0.02)
    raise RuntimeError(f"job {job_id} never finished")


def _sse_events(client: TestClient, job_id: str) -> list[dict]:
    raw = client.get(f"/api/jobs/{job_id}/events").text
    events = []
    for chunk in raw.split("\n\n"):
        if not chunk.strip():
            continue
        name = data = None
        for line in chunk.splitlines():
            if line.startswith("event: "):
                name = line[len("event: "):]
            elif line.startswith("data: "):
                data = json.loads(line[len("data: "):])
        events.append({"event": name, "data": data})
    return events


def record() -> dict:
    recorded: dict = {}
    with tempfile.TemporaryDirectory() as tmp:
        config = _config(Path(tmp))
        with TestClient(create_app(config)) as client:
            recorded["corpus"] = client.get("/api/corpus").json()
            recorded["graph_summary"] = client.get("/api/graph/summary").json()
            recorded["projection"] = client.get("/api/projection").json()
            recorded["agendas"] = client.get("/api/agendas").json()

            jobs = {}
            for label, agenda in (("a", AGENDA_A), ("b", AGENDA_B)):
                accepted = client.post(
                    "/api/extract",
                    json={
                        "source": REACHABLE[0],
                        "target": REACHABLE[1],
                        "method": "llm_direct",
                        "agenda_id": agenda,
                        "k": 3,
                    },
                ).json()
                job = _wait_done(client, accepted["job_id"])
                jobs[label] = {
                    "accepted": accepted,
                    "final": job,
                    "polled": client.get(
                        f"/api/jobs/{accepted['job_id']}", params={"events": 1}
                    ).json(),
                    "sse": _sse_events(client, accepted["job_id"]),
                    "storyline": client.get(
                        f"/api/storylines/{job['storyline_id']}"
                    ).json(),
                }
            recorded["jobs"] = jobs

            accepted = client.post(
                "/api/extract",
                json={
                    "source": UNREACHABLE[0],
                    "target": UNREACHABLE[1],
                    "method": "llm_direct",
                    "agenda_id": AGENDA_A,
                    "k": 3,
                },
            ).json()
            no_path = _wait_done(client, accepted["job_id"])
            recorded["no_path_job"] = {
                "accepted": accepted,
                "final": no_path,
                "sse": _sse_events(client, accepted["job_id"]),
            }

            a = jobs["a"]["final"]["storyline_id"]
            b = jobs["b"]["final"]["storyline_id"]
            recorded["storyline_list"] = client.get("/api/storylines").json()
            recorded["job_list"] = client.get("/api/jobs").json()
            recorded["jaccard_ab"] = client.get(
                "/api/jaccard", params={"a": a, "b": b}
            ).json()
            recorded["jaccard_aa"] = client.get(
                "/api/jaccard", params={"a": a, "b": a}
            ).json()
            recorded["union_map"] = client.get(
                "/api/map", params={"ids": f"{a},{b}"}
            ).json()
    return recorded


def main() -> int:
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument(
        "--out",
        default=str(ROOT / "frontend" / "tests" / "fixtures" / "recorded.json"),
        help="where to write the recorded payloads",
    )
    args = parser.parse_args()
    recorded = record()
    out = Path(args.out)
    out.parent.mkdir(parents=True, exist_ok=True)
    out.write_text(
        json.dumps(recorded, indent=2, sort_keys=True) + "\n", encoding="utf-8"
    )
    steps_a = len(recorded["jobs"]["a"]["storyline"]["trace"]["steps"])
    steps_b = len(recorded["jobs"]["b"]["storyline"]["trace"]["steps"])
    print(f"recorded {out} (trace steps: a={steps_a}, b={steps_b}, "
          f"jaccard={recorded['jaccard_ab']['jaccard']:.4f})")
    return 0


if __name__ == "__main__":
    raise SystemExit(main())
