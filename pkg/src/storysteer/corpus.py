"""Timestamped document corpora: loading, validation, and temporal ordering."""

from __future__ import annotations

import csv
import json
from dataclasses import dataclass
from datetime import datetime, timezone
from pathlib import Path
from typing import Iterable, Iterator

MIN_YEAR = 1900
MAX_YEAR = 2100

_FIELDS = ("id", "title", "text", "date")


class CorpusError(ValueError):
    """Malformed corpus file or invalid document."""


def parse_timestamp(raw: str) -> datetime:
    """Parse an ISO-8601 date or datetime, normalized to UTC.

    Date-only values get time 00:00:00 so strict timestamp comparisons have a
    total order. Naive datetimes are taken as UTC.
    """
    text = raw.strip()
    if text.endswith(("Z", "z")):
        text = text[:-1] + "+00:00"
    try:
        dt = datetime.fromisoformat(text)
    except ValueError as exc:
        raise CorpusError(f"unparseable date {raw!r}") from exc
    if dt.tzinfo is None:
        dt = dt.replace(tzinfo=timezone.utc)
    dt = dt.astimezone(timezone.utc)
    if not MIN_YEAR <= dt.year <= MAX_YEAR:
        raise CorpusError(f"date {raw!r} outside sane range {MIN_YEAR}-{MAX_YEAR}")
    return dt


@dataclass(frozen=True)
class Document:
    """A single document-level event."""

    id: str
    title: str
    text: str
    timestamp: datetime

    def __post_init__(self) -> None:
        if not self.id:
            raise CorpusError("document id must be non-empty")
        if not self.title:
            raise CorpusError(f"document {self.id!r}: title must be non-empty")
        if not MIN_YEAR <= self.timestamp.year <= MAX_YEAR:
            raise CorpusError(
                f"document {self.id!r}: timestamp outside {MIN_YEAR}-{MAX_YEAR}"
            )


class Corpus:
    """An ordered, id-indexed collection of documents.

    Immutable after construction; iteration preserves input order.
    """

    def __init__(self, documents: Iterable[Document]):
        self._documents: list[Document] = list(documents)
        self._index: dict[str, int] = {}
        for pos, doc in enumerate(self._documents):
            if doc.id in self._index:
                raise CorpusError(f"duplicate document id {doc.id!r}")
            self._index[doc.id] = pos

    def __len__(self) -> int:
        return len(self._documents)

    def __iter__(self) -> Iterator[Document]:
        return iter(self._documents)

    def __contains__(self, doc_id: str) -> bool:
        return doc_id in self._index

    def __getitem__(self, doc_id: str) -> Document:
        try:
            return self._documents[self._index[doc_id]]
        except KeyError:
            raise KeyError(f"unknown document id {doc_id!r}") from None

    @property
    def ids(self) -> list[str]:
        return [doc.id for doc in self._documents]


def _document_from_record(record: dict, where: str) -> Document:
    for key in _FIELDS:
        if key not in record:
            raise CorpusError(f"{where}: missing field {key!r}")
        if not isinstance(record[key], str):
            raise CorpusError(f"{where}: field {key!r} must be a string")
    try:
        timestamp = parse_timestamp(record["date"])
        return Document(
            id=record["id"],
            title=record["title"],
            text=record["text"],
            timestamp=timestamp,
        )
    except CorpusError as exc:
        raise CorpusError(f"{where}: {exc}") from None


def _infer_format(path: Path) -> str:
    if path.suffix.lower() == ".csv":
        return "csv"
    return "jsonl"


def load_corpus(path: str | Path, format: str | None = None) -> Corpus:
    """Load a corpus from a JSONL or CSV file.

    JSONL: one object per line with keys id, title, text, date (ISO-8601).
    CSV: same fields as header. Input order is preserved; errors name the
    offending line and field.
    """
    path = Path(path)
    fmt = format or _infer_format(path)
    if fmt not in ("jsonl", "csv"):
        raise CorpusError(f"unsupported corpus format {fmt!r}")

    documents: list[Document] = []
    seen: set[str] = set()
    if fmt == "jsonl":
        with path.open("r", encoding="utf-8") as handle:
            for lineno, line in enumerate(handle, start=1):
                if not line.strip():
                    continue
                where = f"{path.name}:{lineno}"
                try:
                    record = json.loads(line)
                except json.JSONDecodeError as exc:
                    raise CorpusError(f"{where}: invalid JSON ({exc.msg})") from None
                if not isinstance(record, dict):
                    raise CorpusError(f"{where}: expected a JSON object")
                documents.append(_document_from_record(record, where))
    else:
        with path.open("r", encoding="utf-8", newline="") as handle:
            reader = csv.DictReader(handle)
            missing = [k for k in _FIELDS if k not in (reader.fieldnames or [])]
            if missing:
                raise CorpusError(f"{path.name}: CSV header missing {missing}")
            for lineno, row in enumerate(reader, start=2):
                where = f"{path.name}:{lineno}"
                record = {k: (row.get(k) or "") for k in _FIELDS}
                documents.append(_document_from_record(record, where))

    for doc in documents:
        if doc.id in seen:
            raise CorpusError(f"duplicate document id {doc.id!r}")
        seen.add(doc.id)
    return Corpus(documents)


def save_corpus(corpus: Corpus, path: str | Path) -> None:
    """Write a corpus as JSONL; load(save(c)) is identity on all fields."""
    path = Path(path)
    with path.open("w", encoding="utf-8") as handle:
        for doc in corpus:
            record = {
                "id": doc.id,
                "title": doc.title,
                "text": doc.text,
                "date": doc.timestamp.isoformat(),
            }
            handle.write(json.dumps(record, ensure_ascii=False) + "\n")


def temporal_order(corpus: Corpus) -> list[str]:
    """Document ids sorted by timestamp ascending, ties by id."""
    return [
        doc.id
        for doc in sorted(corpus, key=lambda d: (d.timestamp, d.id))
    ]
