"""Model backends: text generation, text embedding, image generation.

Each capability is an interface with a deterministic mock (default) and an
HTTP client (enabled via PROTOFLOW_*_URL env vars), so the whole pipeline
runs offline in tests.
"""

from __future__ import annotations

import base64
import hashlib
import io
import os
import re
import time
from dataclasses import dataclass, field
from typing import Optional, Protocol

import numpy as np

from .kb import Layout

MOCK_EMBED_DIM = 64


class BackendError(RuntimeError):
    pass


class RetryableBackendError(BackendError):
    pass


@dataclass(frozen=True)
class TextGenRequest:
    prompt: str
    temperature: float = 0.0
    max_tokens: int = 512

    def __post_init__(self):
        if not self.prompt:
            raise ValueError("prompt must be non-empty")
        if self.max_tokens <= 0:
            raise ValueError("max_tokens must be positive")


@dataclass(frozen=True)
class RasterImage:
    width: int
    height: int
    pixels: bytes  # row-major RGB, 8-bit channels

    def __post_init__(self):
        if len(self.pixels) != self.width * self.height * 3:
            raise ValueError(
                f"pixel buffer length {len(self.pixels)} != {self.width}x{self.height}x3"
            )

    def to_array(self) -> np.ndarray:
        return np.frombuffer(self.pixels, dtype=np.uint8).reshape(self.height, self.width, 3)

    @classmethod
    def from_array(cls, arr: np.ndarray) -> "RasterImage":
        arr = np.ascontiguousarray(arr, dtype=np.uint8)
        h, w, _ = arr.shape
        return cls(width=w, height=h, pixels=arr.tobytes())

    def crop(self, x0: int, y0: int, x1: int, y1: int) -> "RasterImage":
        if not (0 <= x0 < x1 <= self.width and 0 <= y0 < y1 <= self.height):
            raise ValueError(f"bad crop ({x0},{y0},{x1},{y1}) on {self.width}x{self.height}")
        return RasterImage.from_array(self.to_array()[y0:y1, x0:x1])

    def to_png_bytes(self) -> bytes:
        from PIL import Image

        buf = io.BytesIO()
        Image.frombytes("RGB", (self.width, self.height), self.pixels).save(buf, format="PNG")
        return buf.getvalue()

    @classmethod
    def from_png_bytes(cls, data: bytes) -> "RasterImage":
        from PIL import Image

        img = Image.open(io.BytesIO(data)).convert("RGB")
        return cls(width=img.width, height=img.height, pixels=img.tobytes())


@dataclass(frozen=True)
class ImageGenRequest:
    prompt: str
    width: int = 512
    height: int = 512
    seed: int = 0
    strength: float = 1.0
    layout_condition: Optional[Layout] = None
    init_image: Optional[RasterImage] = None

    def __post_init__(self):
        if self.width <= 0 or self.height <= 0:
            raise ValueError("image size must be positive")
        if not (0 < self.strength <= 1):
            raise ValueError("strength must be in (0, 1]")
        if self.layout_condition is not None and self.init_image is not None:
            raise ValueError("layout_condition and init_image are mutually exclusive")


class TextBackend(Protocol):
    def generate_text(self, req: TextGenRequest) -> str: ...


class EmbedBackend(Protocol):
    dim: int

    def embed_text(self, text: str) -> np.ndarray: ...


class ImageBackend(Protocol):
    def generate_image(self, req: ImageGenRequest) -> RasterImage: ...


# ---------------------------------------------------------------------------
# deterministic mocks


def _digest(*parts) -> str:
    return hashlib.sha256("|".join(str(p) for p in parts).encode("utf-8")).hexdigest()


def _hash_color(*parts) -> tuple[int, int, int]:
    d = _digest(*parts)
    return int(d[0:2], 16), int(d[2:4], 16), int(d[4:6], 16)


_THEME_REQ_RE = re.compile(r"^COMPONENT\[(\d+)\] \(([A-Za-z]+)\):", re.MULTILINE)

_KIND_BY_TYPE = {
    "Text": "text",
    "TextButton": "text",
    "Image": "image",
    "BackgroundImage": "image",
    "Icon": "icon",
}


class MockTextBackend:
    """Pure function of the prompt.

    Plain prompts get "MOCK:" + a 16-hex digest. Prompts that carry the
    theme-description field instructions get a well-formed labeled block so
    the theme parser succeeds without a live model.
    """

    def generate_text(self, req: TextGenRequest) -> str:
        p = req.prompt
        if "THEME_COLOR:" in p and _THEME_REQ_RE.search(p):
            return self._theme_block(p)
        return "MOCK:" + _digest(p)[:16]

    def _theme_block(self, prompt: str) -> str:
        by_index: dict[int, str] = {}
        for m in _THEME_REQ_RE.finditer(prompt):
            by_index[int(m.group(1))] = m.group(2)
        lines = [
            f"THEME_COLOR: #{_digest(prompt, 'theme_color')[:6]}",
            f"PRIMARY_COLOR: #{_digest(prompt, 'primary_color')[:6]}",
            f"APP_CATEGORY: mock-{_digest(prompt, 'app_category')[:4]}",
            f"THEME: MOCK:{_digest(prompt, 'theme')[:16]}",
        ]
        for i in sorted(by_index):
            kind = _KIND_BY_TYPE.get(by_index[i], "other")
            lines.append(f"COMPONENT[{i}]: {kind} | MOCK:{_digest(prompt, 'hint', i)[:16]}")
        return "\n".join(lines)


class MockEmbedBackend:
    """Seeded hash-of-(text, position) embedding, L2-normalized, dimension 64."""

    dim = MOCK_EMBED_DIM

    def __init__(self, seed: int = 0):
        self.seed = seed

    def embed_text(self, text: str) -> np.ndarray:
        if not text:
            raise BackendError("cannot embed empty text")
        vals = np.empty(self.dim, dtype=np.float64)
        for i in range(self.dim):
            h = int(_digest(self.seed, text, i)[:8], 16)
            vals[i] = (h / 0xFFFFFFFF) * 2.0 - 1.0
        norm = float(np.linalg.norm(vals))
        return vals / norm


def scale_bbox(x: int, y: int, w: int, h: int,
               canvas_w: int, canvas_h: int,
               image_w: int, image_h: int) -> tuple[int, int, int, int]:
    """Scale a canvas bbox into image pixel coordinates.

    Endpoints scale linearly with round-half-up, clamped to image bounds;
    returns (x0, y0, x1, y1).
    """
    import math

    sx = image_w / canvas_w
    sy = image_h / canvas_h
    x0 = min(max(int(math.floor(x * sx + 0.5)), 0), image_w)
    y0 = min(max(int(math.floor(y * sy + 0.5)), 0), image_h)
    x1 = min(max(int(math.floor((x + w) * sx + 0.5)), 0), image_w)
    y1 = min(max(int(math.floor((y + h) * sy + 0.5)), 0), image_h)
    return x0, y0, x1, y1


class MockImageBackend:
    """Deterministic raster synthesis.

    With a layout condition each component bbox is painted a solid color
    hashed from (prompt, index, seed) over a hashed background; without one,
    a two-color vertical gradient from the same hashes. init_image only
    influences the output through the requested size.
    """

    def generate_image(self, req: ImageGenRequest) -> RasterImage:
        w, h = req.width, req.height
        bg = _hash_color(req.prompt, req.seed)
        arr = np.empty((h, w, 3), dtype=np.uint8)
        if req.layout_condition is not None:
            arr[:, :] = bg
            layout = req.layout_condition
            for i, comp in enumerate(layout.components):
                b = comp.bbox
                x0, y0, x1, y1 = scale_bbox(
                    b.x, b.y, b.w, b.h,
                    layout.canvas.width, layout.canvas.height, w, h,
                )
                if x1 > x0 and y1 > y0:
                    arr[y0:y1, x0:x1] = _hash_color(req.prompt, i, req.seed)
        else:
            top = np.array(bg, dtype=np.float64)
            bot = np.array(_hash_color(req.prompt, "gradient", req.seed), dtype=np.float64)
            t = (np.arange(h, dtype=np.float64) / max(h - 1, 1))[:, None]
            rows = np.floor(top[None, :] * (1 - t) + bot[None, :] * t + 0.5).astype(np.uint8)
            arr[:, :, :] = rows[:, None, :]
        return RasterImage.from_array(arr)


# ---------------------------------------------------------------------------
# remote HTTP backends

RETRY_ATTEMPTS = 3
RETRY_BACKOFF_S = 0.5


def _post_with_retry(url: str, payload: dict, timeout: float = 60.0) -> dict:
    import requests

    last: Exception | None = None
    for attempt in range(RETRY_ATTEMPTS):
        try:
            resp = requests.post(url, json=payload, timeout=timeout)
            resp.raise_for_status()
            return resp.json()
        except requests.RequestException as e:
            last = e
            if attempt < RETRY_ATTEMPTS - 1:
                time.sleep(RETRY_BACKOFF_S * (2 ** attempt))
    raise RetryableBackendError(f"backend unreachable after {RETRY_ATTEMPTS} attempts: {last}")


class HttpTextBackend:
    def __init__(self, url: str):
        self.url = url

    def generate_text(self, req: TextGenRequest) -> str:
        out = _post_with_retry(self.url, {
            "prompt": req.prompt,
            "temperature": req.temperature,
            "max_tokens": req.max_tokens,
        })
        text = out.get("text", "")
        if not text:
            raise BackendError("backend returned empty completion")
        return text


class HttpEmbedBackend:
    def __init__(self, url: str, dim: int | None = None):
        self.url = url
        self._dim = dim

    @property
    def dim(self) -> int:
        if self._dim is None:
            self._dim = len(self.embed_text("probe"))
        return self._dim

    def embed_text(self, text: str) -> np.ndarray:
        out = _post_with_retry(self.url, {"text": text})
        vec = np.asarray(out["vector"], dtype=np.float64)
        if not np.all(np.isfinite(vec)):
            raise BackendError("backend returned non-finite embedding")
        return vec


class HttpImageBackend:
    def __init__(self, url: str):
        self.url = url

    def generate_image(self, req: ImageGenRequest) -> RasterImage:
        payload: dict = {
            "prompt": req.prompt,
            "size": {"width": req.width, "height": req.height},
            "seed": req.seed,
            "strength": req.strength,
        }
        if req.layout_condition is not None:
            payload["layout"] = [
                {"type": c.type.label, "bbox": c.bbox.as_list()}
                for c in req.layout_condition.components
            ]
        if req.init_image is not None:
            payload["init_image_png_base64"] = base64.b64encode(
                req.init_image.to_png_bytes()
            ).decode("ascii")
        out = _post_with_retry(self.url, payload)
        img = RasterImage.from_png_bytes(base64.b64decode(out["png_base64"]))
        if (img.width, img.height) != (req.width, req.height):
            raise BackendError(
                f"backend returned {img.width}x{img.height}, requested {req.width}x{req.height}"
            )
        return img


@dataclass
class Backends:
    text: TextBackend
    embed: EmbedBackend
    image: ImageBackend

    @classmethod
    def from_env(cls) -> "Backends":
        text_url = os.environ.get("PROTOFLOW_TEXT_URL")
        embed_url = os.environ.get("PROTOFLOW_EMBED_URL")
        image_url = os.environ.get("PROTOFLOW_IMAGE_URL")
        return cls(
            text=HttpTextBackend(text_url) if text_url else MockTextBackend(),
            embed=HttpEmbedBackend(embed_url) if embed_url else MockEmbedBackend(),
            image=HttpImageBackend(image_url) if image_url else MockImageBackend(),
        )

    @classmethod
    def mock(cls, seed: int = 0) -> "Backends":
        return cls(text=MockTextBackend(), embed=MockEmbedBackend(seed=seed), image=MockImageBackend())


class CountingBackends:
    """Wraps Backends and counts generation calls (text, image) for traces."""

    def __init__(self, inner: Backends):
        self.inner = inner
        self.counts = {"text": 0, "image": 0}

    @property
    def embed(self) -> EmbedBackend:
        return self.inner.embed

    def generate_text(self, req: TextGenRequest) -> str:
        self.counts["text"] += 1
        out = self.inner.text.generate_text(req)
        if not out:
            raise BackendError("empty completion")
        return out

    def generate_image(self, req: ImageGenRequest) -> RasterImage:
        self.counts["image"] += 1
        img = self.inner.image.generate_image(req)
        if (img.width, img.height) != (req.width, req.height):
            raise BackendError("image backend violated size contract")
        return img
