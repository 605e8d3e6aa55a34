"""Prototype assembly: dominant color extraction, SVG composition, project export."""

from __future__ import annotations

import base64
import re
import xml.etree.ElementTree as ET
from dataclasses import dataclass
from xml.sax.saxutils import escape, quoteattr

import numpy as np

from .backends import RasterImage
from .orchestrator import DesignInput, GenerationTrace, ThemeDescription
from .submodules import (
    ComponentContent,
    FillPayload,
    IconPayload,
    ImagePayload,
    TextPayload,
)

EXPORT_VERSION = "protoflow-export-1"


class AssemblyError(ValueError):
    pass


def dominant_color(region: RasterImage) -> str:
    """Histogram-mode color: 16 levels per channel, ties to the lowest bucket,
    mean RGB of the winning bucket's pixels."""
    arr = region.to_array().reshape(-1, 3).astype(np.int64)
    buckets = (arr[:, 0] >> 4) * 256 + (arr[:, 1] >> 4) * 16 + (arr[:, 2] >> 4)
    counts = np.bincount(buckets, minlength=4096)
    winner = int(np.argmax(counts))
    members = arr[buckets == winner]
    mean = np.floor(members.mean(axis=0) + 0.5).astype(int)
    return "#{:02x}{:02x}{:02x}".format(*mean)


def _font_size(h: int) -> float:
    return min(max(h * 0.6, 8.0), 72.0)


def _fmt(v: float) -> str:
    return f"{v:.6g}"


_VIEWBOX_RE = re.compile(r"viewBox\s*=\s*[\"']\s*([\d.eE+-]+)[\s,]+([\d.eE+-]+)[\s,]+([\d.eE+-]+)[\s,]+([\d.eE+-]+)")


def _icon_intrinsic_size(svg_source: str) -> tuple[float, float]:
    m = _VIEWBOX_RE.search(svg_source)
    if m:
        return float(m.group(3)), float(m.group(4))
    try:
        root = ET.fromstring(svg_source)
        w = root.get("width")
        h = root.get("height")
        if w and h:
            return float(re.sub(r"[a-z%]+$", "", w)), float(re.sub(r"[a-z%]+$", "", h))
    except (ET.ParseError, ValueError):
        pass
    return 24.0, 24.0


def assemble_svg(
    input: DesignInput,
    theme: ThemeDescription,
    contents: tuple[ComponentContent, ...] | list[ComponentContent],
) -> str:
    comps = input.layout.components
    if len(contents) != len(comps):
        raise AssemblyError(
            f"contents length {len(contents)} != components {len(comps)}"
        )
    cw, ch = input.layout.canvas.width, input.layout.canvas.height
    parts: list[str] = [
        f'<svg xmlns="http://www.w3.org/2000/svg" viewBox="0 0 {cw} {ch}" '
        f'width="{cw}" height="{ch}">',
        f'<rect x="0" y="0" width="{cw}" height="{ch}" fill={quoteattr(theme.theme_color)} data-role="background"/>',
    ]
    for i, (comp, content) in enumerate(zip(comps, contents)):
        if content.component_index != i:
            raise AssemblyError(f"content {content.component_index} misaligned at position {i}")
        b = comp.bbox
        parts.append(
            f'<g id="cmp-{i}" data-kind={quoteattr(content.kind)} data-index="{i}" '
            f'data-x="{b.x}" data-y="{b.y}" data-w="{b.w}" data-h="{b.h}">'
        )
        p = content.payload
        if isinstance(p, TextPayload):
            fs = _font_size(b.h)
            parts.append(
                f'<text x="{b.x}" y="{_fmt(b.y + b.h / 2)}" font-size="{_fmt(fs)}" '
                f'dominant-baseline="middle" fill={quoteattr(theme.primary_color)}>'
                f"{escape(p.text)}</text>"
            )
        elif isinstance(p, ImagePayload):
            uri = "data:image/png;base64," + base64.b64encode(p.image.to_png_bytes()).decode("ascii")
            parts.append(
                f'<image x="{b.x}" y="{b.y}" width="{b.w}" height="{b.h}" '
                f'preserveAspectRatio="none" href="{uri}"/>'
            )
        elif isinstance(p, IconPayload):
            iw, ih = _icon_intrinsic_size(p.svg)
            s = min(b.w / iw, b.h / ih)
            tx = b.x + (b.w - iw * s) / 2
            ty = b.y + (b.h - ih * s) / 2
            parts.append(
                f'<g transform="translate({_fmt(tx)},{_fmt(ty)}) scale({_fmt(s)})">{p.svg}</g>'
            )
        elif isinstance(p, FillPayload):
            parts.append(
                f'<rect x="{b.x}" y="{b.y}" width="{b.w}" height="{b.h}" rx="4" '
                f"fill={quoteattr(p.fill)}/>"
            )
        parts.append("</g>")
    parts.append("</svg>")
    svg = "".join(parts)
    try:
        ET.fromstring(svg)
    except ET.ParseError as e:
        raise AssemblyError(f"assembled SVG is not well-formed: {e}") from None
    return svg


@dataclass(frozen=True)
class Prototype:
    input: DesignInput
    theme: ThemeDescription
    contents: tuple[ComponentContent, ...]
    svg: str
    export_version: str = EXPORT_VERSION


def build_prototype(input: DesignInput, trace: GenerationTrace) -> Prototype:
    svg = assemble_svg(input, trace.theme.description, trace.results)
    return Prototype(
        input=input,
        theme=trace.theme.description,
        contents=tuple(trace.results),
        svg=svg,
    )


def export_project(prototype: Prototype) -> dict:
    from . import serde

    return {
        "version": prototype.export_version,
        "input": serde.design_input_to_dict(prototype.input),
        "theme": serde.theme_description_to_dict(prototype.theme),
        "contents": [serde.content_to_dict(c) for c in prototype.contents],
        "svg": prototype.svg,
    }


def import_project(doc: dict) -> Prototype:
    from . import serde

    if doc.get("version") != EXPORT_VERSION:
        raise AssemblyError(f"unsupported export version {doc.get('version')!r}")
    return Prototype(
        input=serde.design_input_from_dict(doc["input"]),
        theme=serde.theme_description_from_dict(doc["theme"]),
        contents=tuple(serde.content_from_dict(c) for c in doc["contents"]),
        svg=doc["svg"],
        export_version=doc["version"],
    )
