"""Evaluation kit: FID, generation diversity, perceptual hashing, and the
ablation harness that toggles pipeline stages."""

from __future__ import annotations

import hashlib
import json
from dataclasses import dataclass, replace
from typing import Optional, Sequence

import numpy as np

from .backends import Backends, RasterImage, scale_bbox
from .kb import IconRecord, KnowledgeRecord
from .orchestrator import (
    DesignInput,
    GenerationTrace,
    PipelineConfig,
    generate_prototype,
)
from .retrieval import IconIndex
from .submodules import FillPayload, IconPayload, ImagePayload, TextPayload


class EvalError(ValueError):
    pass


@dataclass(frozen=True)
class FeatureSet:
    vectors: np.ndarray  # (N, d)
    extractor_id: str

    def __post_init__(self):
        if self.vectors.ndim != 2:
            raise EvalError("feature vectors must be a 2-D matrix")
        if not np.all(np.isfinite(self.vectors)):
            raise EvalError("feature vectors must be finite")


@dataclass(frozen=True)
class GaussianStats:
    mean: np.ndarray
    cov: np.ndarray


def fit_gaussian(features: FeatureSet) -> GaussianStats:
    x = np.asarray(features.vectors, dtype=np.float64)
    n = x.shape[0]
    if n < 2:
        raise EvalError(f"need at least 2 samples, got {n}")
    mean = x.mean(axis=0)
    centered = x - mean
    cov = centered.T @ centered / (n - 1)
    cov = (cov + cov.T) / 2.0
    return GaussianStats(mean=mean, cov=cov)


def fid(real: GaussianStats, gen: GaussianStats) -> float:
    if real.mean.shape != gen.mean.shape or real.cov.shape != gen.cov.shape:
        raise EvalError("dimension mismatch between real and generated stats")
    diff = real.mean - gen.mean
    mean_term = float(diff @ diff)

    # sqrt(Sr) via symmetric eigendecomposition, then eig of sqrt(Sr) Sg sqrt(Sr)
    evals, evecs = np.linalg.eigh((real.cov + real.cov.T) / 2.0)
    evals = np.clip(evals, 0.0, None)
    sr_half = (evecs * np.sqrt(evals)) @ evecs.T
    inner = sr_half @ ((gen.cov + gen.cov.T) / 2.0) @ sr_half
    inner = (inner + inner.T) / 2.0
    ivals = np.linalg.eigvalsh(inner)
    ivals = np.clip(ivals, 0.0, None)
    trace_term = float(np.trace(real.cov) + np.trace(gen.cov) - 2.0 * np.sum(np.sqrt(ivals)))

    value = mean_term + trace_term
    if -1e-6 <= value < 0.0:
        value = 0.0
    return value


def gd(features: FeatureSet) -> float:
    x = np.asarray(features.vectors, dtype=np.float64)
    n = x.shape[0]
    if n < 2:
        raise EvalError(f"need at least 2 samples, got {n}")
    sq = np.sum((x[:, None, :] - x[None, :, :]) ** 2, axis=-1)
    dists = np.sqrt(np.maximum(sq, 0.0))
    return float(dists.sum() / (n * (n - 1)))


def gd_hamming(hashes: Sequence[int]) -> float:
    n = len(hashes)
    if n < 2:
        raise EvalError(f"need at least 2 hashes, got {n}")
    total = 0
    for i in range(n):
        for j in range(n):
            if i != j:
                total += bin(hashes[i] ^ hashes[j]).count("1")
    return total / (n * (n - 1))


# ---------------------------------------------------------------------------
# perceptual hash (average hash)


def _overlap_weights(src: int, dst: int) -> np.ndarray:
    """(dst, src) matrix of fractional interval overlaps for box averaging."""
    w = np.zeros((dst, src), dtype=np.float64)
    step = src / dst
    for i in range(dst):
        lo, hi = i * step, (i + 1) * step
        for y in range(int(np.floor(lo)), min(int(np.ceil(hi)), src)):
            w[i, y] = min(hi, y + 1) - max(lo, y)
    return w / step


def box_downsample(gray: np.ndarray, out_h: int, out_w: int) -> np.ndarray:
    gray = np.asarray(gray, dtype=np.float64)
    wr = _overlap_weights(gray.shape[0], out_h)
    wc = _overlap_weights(gray.shape[1], out_w)
    return wr @ gray @ wc.T


def to_grayscale(image: RasterImage) -> np.ndarray:
    arr = image.to_array().astype(np.float64)
    return 0.299 * arr[:, :, 0] + 0.587 * arr[:, :, 1] + 0.114 * arr[:, :, 2]


def perceptual_hash(image: RasterImage) -> int:
    """Average hash: 8x8 box-averaged luma, bit set where the cell exceeds the mean.

    Bit layout is row-major from the top-left cell at the most significant bit.
    """
    cells = box_downsample(to_grayscale(image), 8, 8)
    mean = cells.mean()
    value = 0
    for r in range(8):
        for c in range(8):
            if cells[r, c] > mean:
                value |= 1 << ((7 - r) * 8 + (7 - c))
    return value


# ---------------------------------------------------------------------------
# desk-scale feature extractor

_PROJECTION_SEED = 12345
_PROJECTION_DIM = 64
_projection_matrix: Optional[np.ndarray] = None


def _projection() -> np.ndarray:
    global _projection_matrix
    if _projection_matrix is None:
        rng = np.random.default_rng(_PROJECTION_SEED)
        _projection_matrix = rng.standard_normal((256, _PROJECTION_DIM)) / np.sqrt(256.0)
    return _projection_matrix


class ProjectionExtractor:
    """16x16 grayscale thumbnail flattened and projected to 64 dims with a fixed seed."""

    extractor_id = "gray16-proj64-v1"
    dim = _PROJECTION_DIM

    def extract(self, images: Sequence[RasterImage]) -> FeatureSet:
        rows = []
        for img in images:
            thumb = box_downsample(to_grayscale(img), 16, 16).reshape(-1) / 255.0
            rows.append(thumb @ _projection())
        return FeatureSet(vectors=np.vstack(rows), extractor_id=self.extractor_id)


# ---------------------------------------------------------------------------
# feature file IO: one JSON header line, then one whitespace-separated vector per line


def save_features(features: FeatureSet, path: str) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(json.dumps({"d": features.vectors.shape[1],
                             "extractor_id": features.extractor_id}) + "\n")
        for row in features.vectors:
            fh.write(" ".join(repr(float(v)) for v in row) + "\n")


def load_features(path: str) -> FeatureSet:
    with open(path, encoding="utf-8") as fh:
        header = json.loads(fh.readline())
        rows = [np.array([float(v) for v in line.split()]) for line in fh if line.strip()]
    vectors = np.vstack(rows)
    if vectors.shape[1] != header["d"]:
        raise EvalError(f"feature width {vectors.shape[1]} != header d={header['d']}")
    return FeatureSet(vectors=vectors, extractor_id=header["extractor_id"])


# ---------------------------------------------------------------------------
# structural rasterizer for generated prototypes


def _hex_to_rgb(color: str) -> tuple[int, int, int]:
    return int(color[1:3], 16), int(color[3:5], 16), int(color[5:7], 16)


def _hash_rgb(*parts) -> tuple[int, int, int]:
    d = hashlib.sha256("|".join(str(p) for p in parts).encode()).hexdigest()
    return int(d[0:2], 16), int(d[2:4], 16), int(d[4:6], 16)


def _nearest_resize(arr: np.ndarray, out_h: int, out_w: int) -> np.ndarray:
    ys = np.minimum((np.arange(out_h) * arr.shape[0] // out_h), arr.shape[0] - 1)
    xs = np.minimum((np.arange(out_w) * arr.shape[1] // out_w), arr.shape[1] - 1)
    return arr[ys][:, xs]


def rasterize_trace(input: DesignInput, trace: GenerationTrace, size: int = 512) -> RasterImage:
    """Deterministic raster rendering of a generated prototype for metric extraction."""
    arr = np.empty((size, size, 3), dtype=np.uint8)
    arr[:, :] = _hex_to_rgb(trace.theme.description.theme_color)
    canvas = input.layout.canvas
    for comp, content in zip(input.layout.components, trace.results):
        b = comp.bbox
        x0, y0, x1, y1 = scale_bbox(b.x, b.y, b.w, b.h, canvas.width, canvas.height, size, size)
        if x1 <= x0 or y1 <= y0:
            continue
        p = content.payload
        if isinstance(p, FillPayload):
            arr[y0:y1, x0:x1] = _hex_to_rgb(p.fill)
        elif isinstance(p, ImagePayload):
            arr[y0:y1, x0:x1] = _nearest_resize(p.image.to_array(), y1 - y0, x1 - x0)
        elif isinstance(p, TextPayload):
            arr[y0:y1, x0:x1] = _hash_rgb("text", p.text)
        elif isinstance(p, IconPayload):
            arr[y0:y1, x0:x1] = _hash_rgb("icon", p.icon_id)
    return RasterImage.from_array(arr)


# ---------------------------------------------------------------------------
# ablation harness

ABLATION_ROWS = (
    ("full", frozenset()),
    ("-retrieved_knowledge", frozenset({"no_retrieval"})),
    ("-theme_description", frozenset({"no_theme_description"})),
    ("-theme_image", frozenset({"no_theme_image"})),
    ("-text_module", frozenset({"no_text_module"})),
    ("-image_module", frozenset({"no_image_module"})),
    ("-icon_module", frozenset({"no_icon_module"})),
)


@dataclass(frozen=True)
class AblationRow:
    name: str
    flags: frozenset[str]
    fid: float
    gd: float
    n: int


@dataclass(frozen=True)
class AblationReport:
    rows: tuple[AblationRow, ...]
    extractor_id: str


def generate_feature_set(
    inputs: Sequence[DesignInput],
    backends: Backends,
    kb_records: list[KnowledgeRecord],
    icons: Optional[IconIndex],
    config: PipelineConfig,
    extractor: Optional[ProjectionExtractor] = None,
    size: int = 512,
) -> FeatureSet:
    extractor = extractor or ProjectionExtractor()
    images = []
    for inp in inputs:
        trace = generate_prototype(inp, backends, kb_records, icons, config)
        images.append(rasterize_trace(inp, trace, size=size))
    return extractor.extract(images)


def run_ablation(
    configs: Sequence[tuple[str, frozenset[str] | set[str]]],
    inputs: Sequence[DesignInput],
    backends: Backends,
    kb_records: list[KnowledgeRecord],
    icons: Optional[IconIndex],
    reference: FeatureSet,
    base_config: PipelineConfig = PipelineConfig(),
    size: int = 512,
) -> AblationReport:
    extractor = ProjectionExtractor()
    if reference.extractor_id != extractor.extractor_id:
        raise EvalError(
            f"reference extractor {reference.extractor_id!r} != {extractor.extractor_id!r}"
        )
    ref_stats = fit_gaussian(reference)
    rows = []
    for name, flags in configs:
        cfg = replace(base_config, flags=frozenset(flags))  # unknown flags rejected here
        feats = generate_feature_set(inputs, backends, kb_records, icons, cfg, extractor, size)
        rows.append(AblationRow(
            name=name,
            flags=cfg.flags,
            fid=fid(ref_stats, fit_gaussian(feats)),
            gd=gd(feats),
            n=len(inputs),
        ))
    return AblationReport(rows=tuple(rows), extractor_id=extractor.extractor_id)


def format_report(report: AblationReport) -> str:
    lines = [f"{'config':<24} {'FID':>12} {'GD':>12} {'N':>5}"]
    for row in report.rows:
        lines.append(f"{row.name:<24} {row.fid:>12.4f} {row.gd:>12.4f} {row.n:>5}")
    return "\n".join(lines)
