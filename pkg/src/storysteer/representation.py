"""Per-document inputs to the coherence function.

Every document gets a 2D projection and a topic membership distribution,
either computed in-process (embedding endpoint or stub, PCA, soft k-means)
or ingested from a file produced by an external pipeline.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass
from pathlib import Path
from typing import Mapping, Sequence

import numpy as np

from .corpus import Corpus
from .llm import EmbeddingEndpointConfig, EmbeddingsClient

DISTRIBUTION_TOL = 1e-9


class RepresentationError(ValueError):
    """Invalid representation data."""


def validate_distribution(p: Sequence[float], owner: str = "distribution") -> None:
    arr = np.asarray(p, dtype=float)
    if arr.ndim != 1 or arr.size < 1:
        raise RepresentationError(f"{owner}: needs at least one topic")
    if not np.all(np.isfinite(arr)):
        raise RepresentationError(f"{owner}: non-finite entries")
    if np.any(arr < 0.0):
        raise RepresentationError(f"{owner}: negative entries")
    total = float(arr.sum())
    if abs(total - 1.0) > DISTRIBUTION_TOL:
        raise RepresentationError(f"{owner}: entries sum to {total!r}, not 1")


@dataclass(frozen=True)
class DocumentRepresentation:
    """2D projection z and topic distribution p for one document."""

    doc_id: str
    z: tuple[float, float]
    p: tuple[float, ...]
    embedding: tuple[float, ...] | None = None

    def __post_init__(self) -> None:
        if len(self.z) != 2 or not all(math.isfinite(v) for v in self.z):
            raise RepresentationError(f"{self.doc_id}: projection must be 2D finite")
        validate_distribution(self.p, owner=self.doc_id)
        if self.embedding is not None and not all(
            math.isfinite(v) for v in self.embedding
        ):
            raise RepresentationError(f"{self.doc_id}: non-finite embedding")


# ---------------------------------------------------------------------------
# similarity primitives


def angular_similarity(a: Sequence[float], b: Sequence[float]) -> float:
    """1 - arccos(cos(a, b)) / pi, measured between 2D projections; in [0, 1]."""
    av = np.asarray(a, dtype=float)
    bv = np.asarray(b, dtype=float)
    na = float(np.linalg.norm(av))
    nb = float(np.linalg.norm(bv))
    if na == 0.0 or nb == 0.0:
        raise RepresentationError("angular similarity undefined for zero vectors")
    cos = float(np.dot(av, bv)) / (na * nb)
    cos = max(-1.0, min(1.0, cos))
    return 1.0 - math.acos(cos) / math.pi

def jensen_shannon_divergence(p: Sequence[float], q: Sequence[float]) -> float:
    """Base-2 Jensen-Shannon divergence; 0*log0 taken as 0; range [0, 1]."""
    pa = np.asarray(p, dtype=float)
    qa = np.asarray(q, dtype=float)
    if pa.shape != qa.shape:
        raise RepresentationError(
            f"distribution length mismatch: {pa.size} vs {qa.size}"
        )
    m = 0.5 * (pa + qa)

    def _kl(x: np.ndarray) -> float:
        mask = x > 0.0
        return float(np.sum(x[mask] * np.log2(x[mask] / m[mask])))

    jsd = 0.5 * _kl(pa) + 0.5 * _kl(qa)
    return max(0.0, min(1.0, jsd))


# ---------------------------------------------------------------------------
# embedding


def embed_documents(
    corpus: Corpus, config: EmbeddingEndpointConfig
) -> dict[str, tuple[float, ...]]:
    """One embedding vector per document, batched through the endpoint.

    All vectors must share one dimension; a mismatch anywhere is an error.
    """
    client = EmbeddingsClient(config)
    texts = [f"{doc.title}\n\n{doc.text}" for doc in corpus]
    ids = corpus.ids
    vectors = client.embed_all(ids, texts)
    dims = {len(v) for v in vectors.values()}
    if len(dims) > 1:
        raise RepresentationError(f"embedding dimension mismatch across batches: {sorted(dims)}")
    return vectors


# ---------------------------------------------------------------------------
# projection


def project_2d(
    vectors: Mapping[str, Sequence[float]], method: str = "pca"
) -> dict[str, tuple[float, float]]:
    """Reduce embeddings to 2D.

    pca: deterministic principal components; the first nonzero loading of each
    component is made positive so signs are stable across runs.
    external: vectors are already 2D and pass through unchanged.
    """
    if method == "external":
        out = {}
        for doc_id, vec in vectors.items():
            if len(vec) != 2:
                raise RepresentationError(
                    f"{doc_id}: external projection must be 2D, got {len(vec)}"
                )
            out[doc_id] = (float(vec[0]), float(vec[1]))
        return out
    if method != "pca":
        raise RepresentationError(f"unknown projection method {method!r}")

    ids = list(vectors.keys())
    if len(ids) < 3:
        raise RepresentationError("projection needs at least 3 documents")
    matrix = np.asarray([vectors[i] for i in ids], dtype=float)
    centered = matrix - matrix.mean(axis=0)
    if not np.any(np.abs(centered) > 1e-12):
        raise RepresentationError("degenerate input: all vectors identical")

    cov = centered.T @ centered / (len(ids) - 1)
    eigvals, eigvecs = np.linalg.eigh(cov)
    components = eigvecs[:, np.argsort(eigvals)[::-1][:2]].T
    for row in components:
        nonzero = np.nonzero(np.abs(row) > 1e-12)[0]
        if nonzero.size and row[nonzero[0]] < 0:
            row *= -1.0
    projected = centered @ components.T
    return {doc_id: (float(x), float(y)) for doc_id, (x, y) in zip(ids, projected)}


# ---------------------------------------------------------------------------
# soft clustering


def _kmeans_pp_init(points: np.ndarray, k: int, rng: np.random.Generator) -> np.ndarray:
    centroids = [points[rng.integers(len(points))]]
    for _ in range(1, k):
        d2 = np.min(
            [np.sum((points - c) ** 2, axis=1) for c in centroids], axis=0
        )
        total = float(d2.sum())
        if total <= 0.0:
            # all remaining mass on existing centroids; pick uniformly
            centroids.append(points[rng.integers(len(points))])
            continue
        probs = d2 / total
        centroids.append(points[rng.choice(len(points), p=probs)])
    return np.asarray(centroids)


def _kmeans(points: np.ndarray, k: int, seed: int, iters: int = 100) -> np.ndarray:
    rng = np.random.default_rng(seed)
    centroids = _kmeans_pp_init(points, k, rng)
    for _ in range(iters):
        dists = np.linalg.norm(points[:, None, :] - centroids[None, :, :], axis=2)
        labels = np.argmin(dists, axis=1)
        new = np.array(
            [
                points[labels == c].mean(axis=0) if np.any(labels == c) else centroids[c]
                for c in range(k)
            ]
        )
        if np.allclose(new, centroids):
            break
        centroids = new
    return centroids


def soft_cluster(
    projections: Mapping[str, Sequence[float]], topic_count: int, seed: int = 0
) -> dict[str, tuple[float, ...]]:
    """Topic membership distributions over k-means centroids.

    Responsibilities are Gaussian-kernel distances to the centroids,
    p_c proportional to exp(-||z - mu_c||^2 / (2 sigma^2)), with sigma the
    mean nearest-centroid distance; normalized per document.
    """
    if topic_count < 1:
        raise RepresentationError("topic count must be >= 1")
    ids = list(projections.keys())
    if topic_count > len(ids):
        raise RepresentationError(
            f"topic count {topic_count} exceeds document count {len(ids)}"
        )
    if topic_count == 1:
        return {doc_id: (1.0,) for doc_id in ids}

    points = np.asarray([projections[i] for i in ids], dtype=float)
    centroids = _kmeans(points, topic_count, seed)
    dists = np.linalg.norm(points[:, None, :] - centroids[None, :, :], axis=2)
    sigma = float(np.mean(np.min(dists, axis=1)))
    if sigma <= 0.0:
        sigma = 1e-12
    logits = -(dists**2) / (2.0 * sigma**2)
    logits -= logits.max(axis=1, keepdims=True)
    weights = np.exp(logits)
    weights /= weights.sum(axis=1, keepdims=True)
    return {doc_id: tuple(float(v) for v in row) for doc_id, row in zip(ids, weights)}


# ---------------------------------------------------------------------------
# whole-corpus pipelines


def compute_representations(
    corpus: Corpus,
    config: EmbeddingEndpointConfig,
    topic_count: int,
    seed: int = 0,
) -> dict[str, DocumentRepresentation]:
    """Embed, project, and soft-cluster the whole corpus."""
    embeddings = embed_documents(corpus, config)
    projections = project_2d(embeddings, method="pca")
    memberships = soft_cluster(projections, topic_count, seed=seed)
    return {
        doc_id: DocumentRepresentation(
            doc_id=doc_id,
            z=projections[doc_id],
            p=memberships[doc_id],
            embedding=tuple(embeddings[doc_id]),
        )
        for doc_id in corpus.ids
    }


def ingest_representations(
    path: str | Path, corpus: Corpus | None = None
) -> dict[str, DocumentRepresentation]:
    """Read representations from JSONL: {"id", "z": [x, y], "p": [...], "embedding"?}.

    With a corpus, every document must be covered and no extra ids allowed.
    """
    path = Path(path)
    out: dict[str, DocumentRepresentation] = {}
    with path.open("r", encoding="utf-8") as handle:
        for lineno, line in enumerate(handle, start=1):
            if not line.strip():
                continue
            where = f"{path.name}:{lineno}"
            try:
                record = json.loads(line)
            except json.JSONDecodeError as exc:
                raise RepresentationError(f"{where}: invalid JSON ({exc.msg})") from None
            doc_id = record.get("id")
            if not isinstance(doc_id, str) or not doc_id:
                raise RepresentationError(f"{where}: missing id")
            if doc_id in out:
                raise RepresentationError(f"{where}: duplicate id {doc_id!r}")
            try:
                embedding = record.get("embedding")
                out[doc_id] = DocumentRepresentation(
                    doc_id=doc_id,
                    z=tuple(float(v) for v in record["z"]),
                    p=tuple(float(v) for v in record["p"]),
                    embedding=tuple(float(v) for v in embedding) if embedding else None,
                )
            except (KeyError, TypeError):
                raise RepresentationError(f"{where}: malformed z/p fields") from None
            except RepresentationError as exc:
                raise RepresentationError(f"{where}: {exc}") from None
    if corpus is not None:
        missing = [doc_id for doc_id in corpus.ids if doc_id not in out]
        if missing:
            raise RepresentationError(f"missing representation for ids {missing[:5]}")
        extra = [doc_id for doc_id in out if doc_id not in corpus]
        if extra:
            raise RepresentationError(f"representations for unknown ids {extra[:5]}")
    return out


def save_representations(
    representations: Mapping[str, DocumentRepresentation], path: str | Path
) -> None:
    path = Path(path)
    with path.open("w", encoding="utf-8") as handle:
        for doc_id in representations:
            rep = representations[doc_id]
            record: dict = {"id": doc_id, "z": list(rep.z), "p": list(rep.p)}
            if rep.embedding is not None:
                record["embedding"] = list(rep.embedding)
            handle.write(json.dumps(record) + "\n")
