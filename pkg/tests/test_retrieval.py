import math

import numpy as np
import pytest

from conftest import BASE_PHRASES, make_icons, make_layout
from protoflow.backends import MockEmbedBackend
from protoflow.kb import ComponentType
from protoflow.retrieval import (
    IconIndex,
    Index,
    RetrievalConfig,
    RetrievalError,
    build_index,
    cosine_similarity,
    query_text,
    retrieve_icon,
    top_k,
)


def brute_force_top_k(index, query, k):
    q = query / np.linalg.norm(query)
    scored = [(float(index.matrix[i] @ q), index.ids[i]) for i in range(len(index))]
    scored.sort(key=lambda t: (-t[0], t[1]))
    return [rid for _, rid in scored[:k]]


def random_index(rng, n, dim=16):
    mat = rng.normal(size=(n, dim))
    mat /= np.linalg.norm(mat, axis=1, keepdims=True)
    return Index([f"id-{i:04d}" for i in range(n)], mat)


def test_build_index_size(mock_backends):
    idx = build_index([("a", "x"), ("b", "y"), ("c", "z")], mock_backends.embed)
    assert len(idx) == 3
    assert idx.dim == MockEmbedBackend.dim


def test_build_index_duplicate_id(mock_backends):
    with pytest.raises(RetrievalError, match="duplicate"):
        build_index([("a", "x"), ("a", "y")], mock_backends.embed)


def test_build_index_deterministic(mock_backends):
    texts = [(f"t{i}", f"synthetic text {i}") for i in range(50)]
    a = build_index(texts, mock_backends.embed)
    b = build_index(texts, mock_backends.embed)
    assert np.array_equal(a.matrix, b.matrix)


def test_cosine_identity():
    v = np.array([0.3, -1.2, 4.0])
    assert cosine_similarity(v, v) == pytest.approx(1.0, abs=1e-12)


def test_cosine_orthogonal():
    assert cosine_similarity(np.array([1.0, 0.0]), np.array([0.0, 1.0])) == pytest.approx(0.0, abs=1e-12)


def test_cosine_hand_value():
    # 32 / (sqrt(14) * sqrt(77))
    expected = 32.0 / (math.sqrt(14) * math.sqrt(77))
    got = cosine_similarity(np.array([1.0, 2.0, 3.0]), np.array([4.0, 5.0, 6.0]))
    assert got == pytest.approx(expected, abs=1e-12)
    assert got == pytest.approx(0.974631846, abs=1e-9)


def test_cosine_zero_norm_rejected():
    with pytest.raises(RetrievalError, match="zero-norm"):
        cosine_similarity(np.zeros(3), np.ones(3))


def test_cosine_dim_mismatch():
    with pytest.raises(RetrievalError):
        cosine_similarity(np.ones(3), np.ones(4))


def test_top_k_single_entry(mock_backends):
    idx = build_index([("only", "text")], mock_backends.embed)
    res = top_k(idx, np.ones(idx.dim), RetrievalConfig(k=2))
    assert len(res.hits) == 1
    assert res.hits[0].record_id == "only"


def test_top_k_self_query_scores_one(mock_backends):
    idx = build_index([(f"t{i}", f"text {i}") for i in range(5)], mock_backends.embed)
    res = top_k(idx, idx.matrix[3], RetrievalConfig(k=2))
    assert res.hits[0].record_id == "t3"
    assert res.hits[0].score == pytest.approx(1.0, abs=1e-12)


def test_top_k_matches_brute_force_200():
    rng = np.random.default_rng(7)
    idx = random_index(rng, 200)
    query = rng.normal(size=idx.dim)
    res = top_k(idx, query, RetrievalConfig(k=2))
    assert [h.record_id for h in res.hits] == brute_force_top_k(idx, query, 2)


def test_top_k_scores_non_increasing():
    rng = np.random.default_rng(8)
    idx = random_index(rng, 50)
    res = top_k(idx, rng.normal(size=idx.dim), RetrievalConfig(k=10))
    scores = [h.score for h in res.hits]
    assert scores == sorted(scores, reverse=True)


def test_top_k_tie_break_ascending_id():
    v = np.array([1.0, 0.0])
    idx = Index(["b", "a", "c"], np.vstack([v, v, v]))
    res = top_k(idx, v, RetrievalConfig(k=3))
    assert [h.record_id for h in res.hits] == ["a", "b", "c"]


def test_top_k_empty_index_error(mock_backends):
    idx = build_index([], mock_backends.embed)
    with pytest.raises(RetrievalError, match="empty"):
        top_k(idx, np.ones(max(idx.dim, 1)))


def test_query_text_canonical():
    layout = make_layout([ComponentType.TEXT])
    q = query_text("hello", layout)
    assert q.splitlines()[0] == "hello"
    assert q.splitlines()[1].startswith("Text [")


def test_retrieve_icon_self(mock_backends):
    icons = IconIndex(make_icons(BASE_PHRASES), mock_backends.embed)
    assert retrieve_icon(icons, "alarm").phrase == "alarm"


def test_retrieve_icon_matches_brute_force(mock_backends):
    icons = IconIndex(make_icons(BASE_PHRASES), mock_backends.embed)
    query = mock_backends.embed.embed_text("msg")
    winner = brute_force_top_k(icons.index, query, 1)[0]
    assert retrieve_icon(icons, "msg").id == winner


def test_retrieve_icon_empty_base(mock_backends):
    icons = IconIndex([], mock_backends.embed)
    with pytest.raises(RetrievalError, match="empty icon base"):
        retrieve_icon(icons, "alarm")
