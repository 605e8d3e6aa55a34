import re

import numpy as np
import pytest

from conftest import make_layout
from protoflow import backends as B
from protoflow.backends import (
    Backends,
    CountingBackends,
    HttpTextBackend,
    ImageGenRequest,
    MockEmbedBackend,
    MockImageBackend,
    MockTextBackend,
    RasterImage,
    RetryableBackendError,
    TextGenRequest,
    scale_bbox,
)
from protoflow.kb import ComponentType


def test_mock_text_digest_shape():
    out = MockTextBackend().generate_text(TextGenRequest(prompt="hello"))
    assert re.fullmatch(r"MOCK:[0-9a-f]{16}", out)


def test_mock_text_deterministic():
    b = MockTextBackend()
    req = TextGenRequest(prompt="same prompt")
    assert b.generate_text(req) == b.generate_text(req)


def test_mock_text_distinct_prompts():
    b = MockTextBackend()
    assert b.generate_text(TextGenRequest(prompt="a")) != b.generate_text(TextGenRequest(prompt="b"))


def test_text_request_requires_prompt():
    with pytest.raises(ValueError):
        TextGenRequest(prompt="")


def test_temperature_defaults_to_zero():
    assert TextGenRequest(prompt="x").temperature == 0.0


def test_mock_embed_unit_norm():
    emb = MockEmbedBackend()
    for text in ["a", "b", "some longer text"]:
        assert np.linalg.norm(emb.embed_text(text)) == pytest.approx(1.0, abs=1e-9)


def test_mock_embed_distinguishes_texts():
    emb = MockEmbedBackend()
    assert not np.array_equal(emb.embed_text("a"), emb.embed_text("b"))


def test_mock_embed_deterministic():
    emb = MockEmbedBackend()
    assert np.array_equal(emb.embed_text("x"), emb.embed_text("x"))


def test_raster_image_invariant():
    with pytest.raises(ValueError):
        RasterImage(width=2, height=2, pixels=b"\x00" * 11)


def test_raster_png_round_trip():
    rng = np.random.default_rng(0)
    img = RasterImage.from_array(rng.integers(0, 256, size=(5, 7, 3), dtype=np.uint8))
    back = RasterImage.from_png_bytes(img.to_png_bytes())
    assert back == img


def test_mock_image_size_and_determinism():
    b = MockImageBackend()
    req = ImageGenRequest(prompt="p", width=512, height=512, seed=3)
    a = b.generate_image(req)
    assert (a.width, a.height) == (512, 512)
    assert b.generate_image(req).pixels == a.pixels


def test_mock_image_layout_paints_exactly_component_rects():
    layout = make_layout([ComponentType.TEXT, ComponentType.IMAGE])
    b = MockImageBackend()
    req = ImageGenRequest(prompt="p", width=128, height=128, seed=0, layout_condition=layout)
    arr = b.generate_image(req).to_array()
    bg = B._hash_color("p", 0)
    non_bg = np.zeros((128, 128), dtype=bool)
    for i, comp in enumerate(layout.components):
        bb = comp.bbox
        x0, y0, x1, y1 = scale_bbox(bb.x, bb.y, bb.w, bb.h,
                                    layout.canvas.width, layout.canvas.height, 128, 128)
        non_bg[y0:y1, x0:x1] = True
        color = B._hash_color("p", i, 0)
        assert np.all(arr[y0:y1, x0:x1] == color)
    assert np.all(arr[~non_bg] == bg)


def test_mock_image_gradient_without_layout():
    b = MockImageBackend()
    arr = b.generate_image(ImageGenRequest(prompt="p", width=16, height=64, seed=0)).to_array()
    # every row is a single color, and top != bottom in general
    assert all(len(np.unique(arr[y].reshape(-1, 3), axis=0)) == 1 for y in range(64))


def test_image_request_mutual_exclusion():
    layout = make_layout([ComponentType.TEXT])
    init = RasterImage.from_array(np.zeros((2, 2, 3), dtype=np.uint8))
    with pytest.raises(ValueError):
        ImageGenRequest(prompt="p", layout_condition=layout, init_image=init)


def test_image_request_strength_range():
    with pytest.raises(ValueError):
        ImageGenRequest(prompt="p", strength=0.0)
    with pytest.raises(ValueError):
        ImageGenRequest(prompt="p", strength=1.5)


def test_scale_bbox_identity_when_sizes_match():
    assert scale_bbox(3, 4, 10, 20, 100, 100, 100, 100) == (3, 4, 13, 24)


def test_scale_bbox_rounds_half_up():
    # 360 -> 512: x=1 maps to 1*512/360 = 1.4222 -> 1
    x0, y0, x1, y1 = scale_bbox(1, 1, 1, 1, 360, 360, 512, 512)
    assert (x0, y0) == (1, 1)
    assert (x1, y1) == (3, 3)  # 2*512/360 = 2.844 -> 3


def test_http_text_backend_retries_then_fails(monkeypatch):
    import requests

    calls = {"n": 0}

    def boom(*a, **kw):
        calls["n"] += 1
        raise requests.ConnectionError("down")

    monkeypatch.setattr(requests, "post", boom)
    monkeypatch.setattr(B.time, "sleep", lambda s: None)
    with pytest.raises(RetryableBackendError):
        HttpTextBackend("http://example.invalid/v1/complete").generate_text(
            TextGenRequest(prompt="x")
        )
    assert calls["n"] == B.RETRY_ATTEMPTS


def test_counting_backends_counts():
    counting = CountingBackends(Backends.mock())
    counting.generate_text(TextGenRequest(prompt="x"))
    counting.generate_image(ImageGenRequest(prompt="x", width=8, height=8))
    counting.generate_image(ImageGenRequest(prompt="y", width=8, height=8))
    assert counting.counts == {"text": 1, "image": 2}


def test_backends_from_env_defaults_to_mocks(monkeypatch):
    for var in ("PROTOFLOW_TEXT_URL", "PROTOFLOW_EMBED_URL", "PROTOFLOW_IMAGE_URL"):
        monkeypatch.delenv(var, raising=False)
    b = Backends.from_env()
    assert isinstance(b.text, MockTextBackend)
    assert isinstance(b.embed, MockEmbedBackend)
    assert isinstance(b.image, MockImageBackend)
