#!/usr/bin/env python3
"""Generate the bundled 40-document synthetic news corpus.

The corpus covers a fictional protest movement in the invented country of
Arvenia. Four thematic strands (street protests, diaspora rallies, police
crackdown, internet censorship) plus neutral noise give the steering
baselines real signal to separate. Output is deterministic for a fixed SEED;
the committed fixtures were produced by exactly this script.

Run from the repository root:
    python3 scripts/make_fixture_corpus.py
"""

from __future__ import annotations

import json
import random
import sys
from datetime import date, timedelta
from pathlib import Path

ROOT = Path(__file__).resolve().parent.parent
FIXTURES = ROOT / "fixtures"
SEED = 7
START = date(2024, 3, 1)

# (title, text) templates per strand; {city}/{n} slots filled deterministically
STRANDS = {
    "protest": [
        (
            "Thousands March in {city} Demanding Free Elections",
            "Crowds filled the streets of {city} on {weekday}, chanting for freedom "
            "and an end to ruling party control. Organizers said the protest was the "
            "largest in years, with students and workers marching side by side. "
            "Demonstrators carried banners demanding free elections and the release "
            "of jailed activists.",
        ),
        (
            "Protesters Rally Outside Parliament for Third Straight Day",
            "Protesters returned to the square outside parliament in {city}, defying "
            "warnings from the interior ministry. Chants of freedom echoed as the "
            "crowd swelled through the afternoon. Opposition figures addressed the "
            "rally, urging Arvenians to keep demanding change from the ruling party.",
        ),
        (
            "Student Groups Call Nationwide Strike Over Political Repression",
            "Student unions in {city} announced a nationwide strike, saying Arvenians "
            "deserve freedom from one-party rule. Classes emptied by midday as "
            "marchers joined columns moving toward the city center. Strike leaders "
            "demanded constitutional reform and open elections.",
        ),
        (
            "Dockworkers Join Growing Protest Movement in {city}",
            "Dockworkers walked off the job in {city} to join the protest movement, "
            "linking wage grievances to wider demands for freedom. Union spokespeople "
            "said the ruling party had ignored workers for a decade. The port slowed "
            "to a crawl as pickets formed at the gates.",
        ),
    ],
    "diaspora": [
        (
            "Arvenian Expatriates Rally in {city} to Support Protesters",
            "Hundreds of Arvenian expatriates gathered in {city} waving flags and "
            "banners in solidarity with protesters back home. Community leaders "
            "collected donations for families of detained demonstrators. Speakers "
            "urged host governments to press Arvenia over its treatment of dissent.",
        ),
        (
            "Diaspora Fundraiser Sends Aid to Families of Detained Marchers",
            "An Arvenian diaspora association in {city} raised funds for families of "
            "arrested protesters, organizers announced {weekday}. Volunteers packed "
            "medicine and letters of support for relatives at home. The association "
            "said solidarity events are planned in three more cities.",
        ),
        (
            "Expatriate Networks Coordinate Global Day of Solidarity",
            "Arvenian expatriate networks announced a coordinated day of solidarity, "
            "with rallies planned in {city} and a dozen capitals. Organizers said the "
            "diaspora would amplify the voices of protesters facing pressure at home. "
            "Embassies were urged to accept petitions signed by thousands abroad.",
        ),
    ],
    "crackdown": [
        (
            "Police Detain Dozens in Night Raids Across {city}",
            "Security forces carried out night raids across {city}, detaining dozens "
            "of activists in their homes. Witnesses described officers breaking down "
            "doors and seizing phones. Rights monitors said the arrests mark a sharp "
            "escalation against the protest movement.",
        ),
        (
            "Riot Units Disperse March With Batons and Tear Gas",
            "Riot units moved against marchers in {city} on {weekday}, swinging "
            "batons and firing tear gas into the crowd. Medics reported treating "
            "dozens for injuries, including several beaten while restrained. The "
            "interior ministry called the operation a restoration of public order.",
        ),
        (
            "Courts Hand Down Fast-Track Sentences to Arrested Activists",
            "Courts in {city} issued fast-track sentences to activists arrested at "
            "recent marches, with hearings lasting minutes. Defense lawyers said "
            "detainees showed bruises consistent with beatings in custody. Several "
            "organizers received multi-year terms on public disorder charges.",
        ),
        (
            "Prominent Organizer Seized at Border Checkpoint",
            "A prominent protest organizer was seized by plainclothes officers at a "
            "border checkpoint near {city}, colleagues said. Her whereabouts remained "
            "unknown for two days before officials confirmed her detention. Rights "
            "groups called the arrest part of a widening crackdown.",
        ),
    ],
    "censorship": [
        (
            "Internet Blackout Enters Another Day as Outages Spread",
            "Network monitors reported that the internet blackout around {city} had "
            "spread to new provinces. Residents said messaging apps remained blocked "
            "and mobile data crawled. The government cited technical maintenance, an "
            "explanation analysts dismissed as cover for information control.",
        ),
        (
            "Regulator Orders Providers to Block Social Platforms",
            "The state telecom regulator ordered providers around {city} to block "
            "major social platforms, leaked directives showed. Engineers said the "
            "restrictions target the tools protesters use to organize. Circumvention "
            "software downloads surged within hours of the order.",
        ),
        (
            "State Broadcaster Dominates Airwaves as Independent Sites Go Dark",
            "Independent news sites covering {city} went dark after hosting "
            "providers received takedown notices. The state broadcaster filled the "
            "airwaves with official statements and cultural programming. Media "
            "freedom groups said the blackout leaves citizens reliant on government "
            "information.",
        ),
    ],
    "noise": [
        (
            "Grain Harvest Beats Forecast in {city} Region",
            "Farm cooperatives around {city} reported a grain harvest well above "
            "forecast, crediting mild weather and new irrigation. Grain prices at "
            "regional markets eased for the second week. Agriculture officials said "
            "export quotas would be reviewed next month.",
        ),
        (
            "{city} Football Club Advances to Continental Semifinal",
            "The football club of {city} advanced to the continental semifinal after "
            "a late winning goal. Supporters filled cafes to watch the broadcast and "
            "celebrated into the night. The club last reached this stage sixteen "
            "years ago.",
        ),
        (
            "Railway Modernization Project Reaches Halfway Mark",
            "Engineers marked the halfway point of the railway modernization project "
            "linking {city} to the coast. Officials toured a refurbished depot and "
            "praised the pace of track replacement. Passenger services are expected "
            "to resume on the upgraded line next spring.",
        ),
        (
            "Museum in {city} Reopens After Decade-Long Restoration",
            "The national museum in {city} reopened after a decade-long restoration "
            "of its galleries. Curators unveiled a new wing devoted to maritime "
            "history. Visitors queued around the block for the opening weekend.",
        ),
    ],
}

CITIES = ["Doruma", "Kelvast", "Port Senara", "Virelle", "Ostenbrook"]
WEEKDAYS = ["Monday", "Tuesday", "Wednesday", "Thursday", "Friday", "Saturday", "Sunday"]

# strand sequence: interleaved so every era of the timeline mixes themes
SEQUENCE = (
    ["protest", "noise", "protest", "diaspora", "crackdown", "censorship", "protest", "noise"]
    + ["diaspora", "crackdown", "protest", "censorship", "noise", "diaspora", "crackdown", "protest"]
    + ["censorship", "noise", "protest", "diaspora", "crackdown", "censorship", "noise", "protest"]
    + ["diaspora", "crackdown", "protest", "censorship", "noise", "diaspora", "crackdown", "noise"]
    + ["protest", "censorship", "diaspora", "crackdown", "noise", "protest", "censorship", "noise"]
)

FIXTURE_AGENDAS = [
    {
        "id": "freedom_movement",
        "text": "Arvenians demanding freedom from the ruling party",
        "category": "literal",
    },
    {
        "id": "diaspora_support",
        "text": "Arvenian expatriates rallying in solidarity with protesters at home",
        "category": "literal",
    },
    {
        "id": "state_crackdown",
        "text": "Arvenian authorities violently suppressing protesters",
        "category": "semantic",
    },
    {
        "id": "protests_fading",
        "text": "Arvenian protests losing momentum",
        "category": "counter",
    },
]

# the 2-agenda subset the bundled experiment grid runs on
GRID_AGENDA_IDS = ["freedom_movement", "state_crackdown"]

EXPERIMENT_TOML = """\
# Bundled experiment configuration: 2 endpoint pairs x 2 agendas x 3 methods
# on the synthetic Arvenia corpus, fully offline (stub embeddings + mocks).

[corpus]
path = "corpus.jsonl"
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
path = "agendas_grid.json"

[endpoints]
count = 2

[run]
seed = 0
output_dir = "../out"
workers = 4
mock_llm = true
"""


def build_documents() -> list[dict]:
    rng = random.Random(SEED)
    counters = {strand: 0 for strand in STRANDS}
    documents = []
    current = START
    assert len(SEQUENCE) == 40
    for i, strand in enumerate(SEQUENCE):
        templates = STRANDS[strand]
        slot = counters[strand] % len(templates)
        cycle = counters[strand] // len(templates)
        title_tpl, text_tpl = templates[slot]
        counters[strand] += 1
        city = CITIES[rng.randrange(len(CITIES))]
        weekday = WEEKDAYS[current.weekday()]
        title = title_tpl.format(city=city, weekday=weekday)
        if cycle > 0:
            # template reuse: a suffix keeps every title unique
            title = f"{title}, Week {cycle + 1}"
        text = text_tpl.format(city=city, weekday=weekday)
        documents.append(
            {
                "id": f"ar-{i + 1:03d}",
                "title": title,
                "text": text,
                "date": current.isoformat(),
            }
        )
        current += timedelta(days=rng.choice([1, 1, 2]))
    return documents


def main() -> int:
    FIXTURES.mkdir(exist_ok=True)
    documents = build_documents()
    titles = [d["title"] for d in documents]
    if len(set(titles)) != len(titles):
        raise SystemExit("duplicate titles generated; adjust templates")

    corpus_path = FIXTURES / "corpus.jsonl"
    with corpus_path.open("w", encoding="utf-8") as handle:
        for doc in documents:
            handle.write(json.dumps(doc, ensure_ascii=False) + "\n")

    manifest = {
        "count": len(documents),
        "seed": SEED,
        "first_date": documents[0]["date"],
        "last_date": documents[-1]["date"],
        "ids_in_temporal_order": [d["id"] for d in documents],
        "strand_sequence": SEQUENCE,
    }
    (FIXTURES / "manifest.json").write_text(
        json.dumps(manifest, indent=2, ensure_ascii=False) + "\n", encoding="utf-8"
    )

    (FIXTURES / "agendas.json").write_text(
        json.dumps(FIXTURE_AGENDAS, indent=2, ensure_ascii=False) + "\n", encoding="utf-8"
    )
    grid = [a for a in FIXTURE_AGENDAS if a["id"] in GRID_AGENDA_IDS]
    (FIXTURES / "agendas_grid.json").write_text(
        json.dumps(grid, indent=2, ensure_ascii=False) + "\n", encoding="utf-8"
    )
    (FIXTURES / "experiment.toml").write_text(EXPERIMENT_TOML, encoding="utf-8")

    # frozen representations for ingest-path tests, computed by the package
    sys.path.insert(0, str(ROOT / "src"))
    from storysteer.corpus import load_corpus
    from storysteer.llm import EmbeddingEndpointConfig
    from storysteer.representation import compute_representations, save_representations

    corpus = load_corpus(corpus_path)
    representations = compute_representations(
        corpus,
        EmbeddingEndpointConfig(provider="stub", stub_dim=32),
        topic_count=3,
        seed=0,
    )
    save_representations(representations, FIXTURES / "representations.jsonl")

    print(f"wrote {len(documents)} documents to {corpus_path}")
    print(f"date span {manifest['first_date']} .. {manifest['last_date']}")
    return 0


if __name__ == "__main__":
    raise SystemExit(main())
