"""Exact cosine-similarity index over knowledge texts and icon phrases."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .backends import BackendError, EmbedBackend
from .kb import IconRecord, Layout


class RetrievalError(ValueError):
    pass


@dataclass(frozen=True)
class RetrievalConfig:
    k: int = 2

    def __post_init__(self):
        if self.k < 1:
            raise ValueError("k must be >= 1")


@dataclass(frozen=True)
class Hit:
    record_id: str
    score: float


@dataclass(frozen=True)
class RetrievalResult:
    hits: tuple[Hit, ...]


class Index:
    """Immutable flat index; exact scan, no approximation."""

    def __init__(self, ids: list[str], matrix: np.ndarray):
        self.ids = list(ids)
        self.matrix = matrix  # (n, dim), rows L2-normalized
        self.dim = matrix.shape[1]

    def __len__(self) -> int:
        return self.matrix.shape[0]


def build_index(texts: list[tuple[str, str]], embedder: EmbedBackend) -> Index:
    seen: set[str] = set()
    ids: list[str] = []
    rows: list[np.ndarray] = []
    for rec_id, text in texts:
        if rec_id in seen:
            raise RetrievalError(f"duplicate id {rec_id!r}")
        seen.add(rec_id)
        try:
            vec = np.asarray(embedder.embed_text(text), dtype=np.float64)
        except Exception as e:
            raise BackendError(f"embedding failed for id {rec_id!r}: {e}") from e
        norm = float(np.linalg.norm(vec))
        if norm == 0.0 or not np.all(np.isfinite(vec)):
            raise RetrievalError(f"bad embedding for id {rec_id!r}")
        ids.append(rec_id)
        rows.append(vec / norm)
    if rows and any(r.shape != rows[0].shape for r in rows):
        raise RetrievalError("embedder dimension not constant")
    matrix = np.vstack(rows) if rows else np.zeros((0, getattr(embedder, "dim", 0)))
    return Index(ids, matrix)


def cosine_similarity(a: np.ndarray, b: np.ndarray) -> float:
    a = np.asarray(a, dtype=np.float64)
    b = np.asarray(b, dtype=np.float64)
    if a.shape != b.shape:
        raise RetrievalError(f"dimension mismatch: {a.shape} vs {b.shape}")
    na, nb = float(np.linalg.norm(a)), float(np.linalg.norm(b))
    if na == 0.0 or nb == 0.0:
        raise RetrievalError("zero-norm vector")
    return float(np.clip(np.dot(a, b) / (na * nb), -1.0, 1.0))


def top_k(index: Index, query: np.ndarray, config: RetrievalConfig = RetrievalConfig()) -> RetrievalResult:
    if len(index) == 0:
        raise RetrievalError("empty index")
    query = np.asarray(query, dtype=np.float64)
    if query.shape[0] != index.dim:
        raise RetrievalError(f"query dim {query.shape[0]} != index dim {index.dim}")
    qnorm = float(np.linalg.norm(query))
    if qnorm == 0.0:
        raise RetrievalError("zero-norm query")
    scores = index.matrix @ (query / qnorm)
    # ties broken by ascending record id for determinism
    order = sorted(range(len(index)), key=lambda i: (-scores[i], index.ids[i]))
    hits = tuple(
        Hit(record_id=index.ids[i], score=float(np.clip(scores[i], -1.0, 1.0)))
        for i in order[: config.k]
    )
    return RetrievalResult(hits=hits)


def query_text(prompt: str, layout: Layout) -> str:
    """Canonical query serialization: prompt followed by layout lines."""
    return "\n".join([prompt, *layout.lines()])


class IconIndex:
    def __init__(self, icons: list[IconRecord], embedder: EmbedBackend):
        self.by_id = {icon.id: icon for icon in icons}
        self.index = build_index([(icon.id, icon.phrase) for icon in icons], embedder)
        self.embedder = embedder

    def __len__(self) -> int:
        return len(self.index)


def retrieve_icon(icons: IconIndex, phrase: str) -> IconRecord:
    if len(icons) == 0:
        raise RetrievalError("empty icon base")
    query = icons.embedder.embed_text(phrase)
    result = top_k(icons.index, query, RetrievalConfig(k=1))
    return icons.by_id[result.hits[0].record_id]
