"""Per-component content generators: text, image, icon, color fill."""

from __future__ import annotations

import re
from dataclasses import dataclass
from typing import Optional, Union

from .backends import CountingBackends, ImageGenRequest, RasterImage, TextGenRequest, scale_bbox
from .kb import BBox, Canvas
from .orchestrator import PipelineConfig, SubModuleCall, ThemePackage
from .retrieval import IconIndex, RetrievalError, retrieve_icon


class SubModuleError(RuntimeError):
    pass


@dataclass(frozen=True)
class TextPayload:
    text: str


@dataclass(frozen=True)
class ImagePayload:
    image: RasterImage
    prompt_used: str


@dataclass(frozen=True)
class IconPayload:
    icon_id: str
    svg: str
    phrase: str


@dataclass(frozen=True)
class FillPayload:
    fill: str  # #rrggbb


Payload = Union[TextPayload, ImagePayload, IconPayload, FillPayload]

_KIND_BY_PAYLOAD = {
    TextPayload: "text",
    ImagePayload: "image",
    IconPayload: "icon",
    FillPayload: "color_fill",
}


@dataclass(frozen=True)
class ComponentContent:
    component_index: int
    kind: str  # text | image | icon | color_fill
    payload: Payload

    def __post_init__(self):
        expected = _KIND_BY_PAYLOAD[type(self.payload)]
        if self.kind != expected:
            raise ValueError(f"kind {self.kind!r} inconsistent with payload {expected!r}")

    def res_text(self) -> str:
        """The Res string folded into the cache pool after this component."""
        i = self.component_index
        p = self.payload
        if isinstance(p, TextPayload):
            return p.text
        if isinstance(p, ImagePayload):
            return f"[image {i}] {p.prompt_used}"
        if isinstance(p, IconPayload):
            return f"[icon {i}] {p.phrase} -> {p.icon_id}"
        return f"[fill {i}] {p.fill}"


def text_content(call: SubModuleCall, backends: CountingBackends) -> ComponentContent:
    out = backends.generate_text(TextGenRequest(prompt=call.prompt)).strip()
    if not out:
        raise SubModuleError("empty text completion")
    first_line = out.splitlines()[0].strip()
    return ComponentContent(call.component_index, "text", TextPayload(text=first_line))


def _scaled_crop_box(bbox: BBox, canvas: Canvas, image: RasterImage) -> tuple[int, int, int, int]:
    x0, y0, x1, y1 = scale_bbox(
        bbox.x, bbox.y, bbox.w, bbox.h,
        canvas.width, canvas.height, image.width, image.height,
    )
    if x1 - x0 < 1 or y1 - y0 < 1:
        raise SubModuleError(f"degenerate scaled crop for bbox {bbox.as_list()}")
    return x0, y0, x1, y1


def image_content(
    call: SubModuleCall,
    theme: ThemePackage,
    bbox: BBox,
    canvas: Canvas,
    backends: CountingBackends,
    config: PipelineConfig,
    hint: str,
) -> ComponentContent:
    prompt = hint or theme.description.theme_text
    if theme.theme_image is not None:
        x0, y0, x1, y1 = _scaled_crop_box(bbox, canvas, theme.theme_image)
        init = theme.theme_image.crop(x0, y0, x1, y1)
        req = ImageGenRequest(
            prompt=prompt,
            width=init.width,
            height=init.height,
            seed=config.seed,
            strength=config.strength,
            init_image=init,
        )
    else:
        # theme image disabled: plain generation at the scaled component size
        x0, y0, x1, y1 = scale_bbox(
            bbox.x, bbox.y, bbox.w, bbox.h,
            canvas.width, canvas.height, config.image_size, config.image_size,
        )
        if x1 - x0 < 1 or y1 - y0 < 1:
            raise SubModuleError(f"degenerate scaled crop for bbox {bbox.as_list()}")
        req = ImageGenRequest(
            prompt=prompt, width=x1 - x0, height=y1 - y0, seed=config.seed
        )
    img = backends.generate_image(req)
    return ComponentContent(
        call.component_index, "image", ImagePayload(image=img, prompt_used=prompt)
    )


_PHRASE_CLEAN_RE = re.compile(r"[^a-z0-9 ]+")


def sanitize_phrase(raw: str) -> str:
    words = _PHRASE_CLEAN_RE.sub(" ", raw.lower()).split()
    return " ".join(words[:6])


def icon_content(
    call: SubModuleCall,
    icons: Optional[IconIndex],
    backends: CountingBackends,
) -> ComponentContent:
    if icons is None or len(icons) == 0:
        raise RetrievalError("empty icon base")
    raw = backends.generate_text(TextGenRequest(prompt=call.prompt)).strip()
    phrase = sanitize_phrase(raw.splitlines()[0]) if raw else ""
    if not phrase:
        raise SubModuleError("empty icon phrase")
    icon = retrieve_icon(icons, phrase)
    return ComponentContent(
        call.component_index, "icon",
        IconPayload(icon_id=icon.id, svg=icon.svg_source, phrase=phrase),
    )


def color_fill_content(
    call: SubModuleCall,
    bbox: BBox,
    theme: ThemePackage,
    canvas: Canvas,
    config: PipelineConfig,
) -> ComponentContent:
    from .assembler import dominant_color

    if theme.theme_image is None:
        fill = theme.description.theme_color
    else:
        x0, y0, x1, y1 = _scaled_crop_box(bbox, canvas, theme.theme_image)
        fill = dominant_color(theme.theme_image.crop(x0, y0, x1, y1))
    return ComponentContent(call.component_index, "color_fill", FillPayload(fill=fill))
