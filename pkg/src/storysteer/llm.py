"""OpenAI-compatible HTTP clients for chat completions and embeddings.

Both clients retry transport failures with exponential backoff and cap
concurrent in-flight requests. The embeddings side also offers a "stub"
provider that derives deterministic vectors from a text hash, for offline
runs and fixtures.
"""

from __future__ import annotations

import hashlib
import struct
import threading
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import requests


class TransportError(RuntimeError):
    """Endpoint unreachable or responding with errors after retries."""


@dataclass
class ChatEndpointConfig:
    base_url: str
    model: str
    api_key: str | None = None
    temperature: float = 0.3
    top_p: float = 0.9
    json_mode: bool = True
    timeout: float = 120.0
    max_retries: int = 2
    retry_backoff: float = 0.2
    max_in_flight: int = 4


@dataclass
class EmbeddingEndpointConfig:
    provider: str = "openai"  # openai | stub
    base_url: str = ""
    model: str = ""
    api_key: str | None = None
    batch_size: int = 64
    timeout: float = 120.0
    max_retries: int = 2
    retry_backoff: float = 0.2
    max_in_flight: int = 4
    stub_dim: int = 32


def _auth_headers(api_key: str | None) -> dict[str, str]:
    headers = {"Content-Type": "application/json"}
    if api_key:
        headers["Authorization"] = f"Bearer {api_key}"
    return headers


def _post_with_retries(
    session: requests.Session,
    url: str,
    body: dict,
    headers: dict[str, str],
    timeout: float,
    max_retries: int,
    backoff: float,
    describe: str,
) -> dict:
    last_error: Exception | None = None
    for attempt in range(max_retries + 1):
        try:
            response = session.post(url, json=body, headers=headers, timeout=timeout)
            if response.status_code >= 500:
                raise TransportError(f"{describe}: server error {response.status_code}")
            if response.status_code >= 400:
                # client errors will not improve on retry
                raise TransportError(
                    f"{describe}: request rejected ({response.status_code}): "
                    f"{response.text[:200]}"
                )
            return response.json()
        except TransportError as exc:
            if "request rejected" in str(exc):
                raise
            last_error = exc
        except (requests.RequestException, ValueError) as exc:
            last_error = exc
        if attempt < max_retries and backoff > 0:
            time.sleep(backoff * (2**attempt))
    raise TransportError(f"{describe}: {last_error}")


class ChatClient:
    """Minimal chat-completions client; thread-safe up to max_in_flight."""

    def __init__(self, config: ChatEndpointConfig, session: requests.Session | None = None):
        self.config = config
        self._session = session or requests.Session()
        self._slots = threading.Semaphore(config.max_in_flight)

    def complete(self, messages: list[dict[str, str]]) -> str:
        body: dict = {
            "model": self.config.model,
            "messages": messages,
            "temperature": self.config.temperature,
            "top_p": self.config.top_p,
        }
        if self.config.json_mode:
            body["response_format"] = {"type": "json_object"}
        url = self.config.base_url.rstrip("/") + "/chat/completions"
        with self._slots:
            payload = _post_with_retries(
                self._session,
                url,
                body,
                _auth_headers(self.config.api_key),
                self.config.timeout,
                self.config.max_retries,
                self.config.retry_backoff,
                f"chat endpoint {self.config.model}",
            )
        try:
            return payload["choices"][0]["message"]["content"]
        except (KeyError, IndexError, TypeError):
            raise TransportError("chat endpoint returned an unexpected schema") from None


def stub_embedding(text: str, dim: int) -> list[float]:
    """Deterministic pseudo-embedding in [-1, 1]^dim derived from the text."""
    out: list[float] = []
    counter = 0
    while len(out) < dim:
        digest = hashlib.blake2b(
            text.encode("utf-8") + counter.to_bytes(4, "big"), digest_size=32
        ).digest()
        for i in range(0, len(digest), 4):
            (value,) = struct.unpack(">I", digest[i : i + 4])
            out.append(value / 2147483647.5 - 1.0)
            if len(out) == dim:
                break
        counter += 1
    return out


class EmbeddingsClient:
    """Batched embeddings against an OpenAI-compatible endpoint or the stub."""

    def __init__(self, config: EmbeddingEndpointConfig, session: requests.Session | None = None):
        if config.provider not in ("openai", "stub"):
            raise ValueError(f"unknown embedding provider {config.provider!r}")
        self.config = config
        self._session = session or requests.Session()

    def _embed_batch_http(self, texts: list[str], ids: list[str]) -> list[list[float]]:
        url = self.config.base_url.rstrip("/") + "/embeddings"
        body = {"model": self.config.model, "input": texts}
        try:
            payload = _post_with_retries(
                self._session,
                url,
                body,
                _auth_headers(self.config.api_key),
                self.config.timeout,
                self.config.max_retries,
                self.config.retry_backoff,
                f"embedding endpoint {self.config.model}",
            )
        except TransportError as exc:
            raise TransportError(f"{exc} (first doc id in batch: {ids[0]!r})") from None
        try:
            rows = sorted(payload["data"], key=lambda item: item["index"])
            vectors = [[float(v) for v in row["embedding"]] for row in rows]
        except (KeyError, TypeError):
            raise TransportError(
                f"embedding endpoint returned an unexpected schema "
                f"(first doc id in batch: {ids[0]!r})"
            ) from None
        if len(vectors) != len(texts):
            raise TransportError(
                f"embedding endpoint returned {len(vectors)} vectors for "
                f"{len(texts)} inputs (first doc id in batch: {ids[0]!r})"
            )
        return vectors

    def embed_all(self, ids: list[str], texts: list[str]) -> dict[str, tuple[float, ...]]:
        if self.config.provider == "stub":
            return {
                doc_id: tuple(stub_embedding(text, self.config.stub_dim))
                for doc_id, text in zip(ids, texts)
            }
        size = max(1, self.config.batch_size)
        batches = [
            (ids[i : i + size], texts[i : i + size]) for i in range(0, len(ids), size)
        ]
        results: dict[str, tuple[float, ...]] = {}
        workers = max(1, min(self.config.max_in_flight, len(batches)))
        with ThreadPoolExecutor(max_workers=workers) as pool:
            futures = [
                pool.submit(self._embed_batch_http, batch_texts, batch_ids)
                for batch_ids, batch_texts in batches
            ]
            for (batch_ids, _), future in zip(batches, futures):
                vectors = future.result()
                for doc_id, vec in zip(batch_ids, vectors):
                    results[doc_id] = tuple(vec)
        return results
