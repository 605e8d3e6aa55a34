"""JSON (de)serialization for pipeline artifacts: inputs, themes, contents, traces."""

from __future__ import annotations

import base64

from .backends import RasterImage
from .kb import BBox, Canvas, Component, ComponentType, Layout
from .orchestrator import (
    DesignInput,
    GenerationTrace,
    PlanEntry,
    SubModuleCall,
    ThemeDescription,
    ThemePackage,
    ThemePrompt,
)
from .submodules import (
    ComponentContent,
    FillPayload,
    IconPayload,
    ImagePayload,
    TextPayload,
)


def raster_to_dict(img: RasterImage) -> dict:
    return {
        "width": img.width,
        "height": img.height,
        "png_base64": base64.b64encode(img.to_png_bytes()).decode("ascii"),
    }


def raster_from_dict(d: dict) -> RasterImage:
    img = RasterImage.from_png_bytes(base64.b64decode(d["png_base64"]))
    if (img.width, img.height) != (d["width"], d["height"]):
        raise ValueError("raster size mismatch in document")
    return img


def layout_to_dict(layout: Layout) -> dict:
    return {
        "canvas": {"width": layout.canvas.width, "height": layout.canvas.height},
        "components": [
            {"type": c.type.label, "bbox": c.bbox.as_list()} for c in layout.components
        ],
    }


def layout_from_dict(d: dict) -> Layout:
    layout = Layout(
        canvas=Canvas(int(d["canvas"]["width"]), int(d["canvas"]["height"])),
        components=tuple(
            Component(ComponentType.parse(c["type"]), BBox(*(int(v) for v in c["bbox"])))
            for c in d["components"]
        ),
    )
    layout.validate()
    return layout


def design_input_to_dict(inp: DesignInput) -> dict:
    return {"prompt": inp.prompt, "layout": layout_to_dict(inp.layout)}


def design_input_from_dict(d: dict) -> DesignInput:
    inp = DesignInput(prompt=d["prompt"], layout=layout_from_dict(d["layout"]))
    inp.validate()
    return inp


def theme_description_to_dict(t: ThemeDescription) -> dict:
    return {
        "theme_color": t.theme_color,
        "primary_color": t.primary_color,
        "app_category": t.app_category,
        "theme_text": t.theme_text,
        "component_plan": [
            {"kind": e.kind, "content_hint": e.content_hint} for e in t.component_plan
        ],
    }


def theme_description_from_dict(d: dict) -> ThemeDescription:
    t = ThemeDescription(
        theme_color=d["theme_color"],
        primary_color=d["primary_color"],
        app_category=d["app_category"],
        theme_text=d["theme_text"],
        component_plan=tuple(
            PlanEntry(kind=e["kind"], content_hint=e["content_hint"])
            for e in d["component_plan"]
        ),
    )
    t.validate()
    return t


def content_to_dict(c: ComponentContent) -> dict:
    p = c.payload
    if isinstance(p, TextPayload):
        payload = {"text": p.text}
    elif isinstance(p, ImagePayload):
        payload = {"image": raster_to_dict(p.image), "prompt_used": p.prompt_used}
    elif isinstance(p, IconPayload):
        payload = {"icon_id": p.icon_id, "svg": p.svg, "phrase": p.phrase}
    else:
        payload = {"fill": p.fill}
    return {"component_index": c.component_index, "kind": c.kind, "payload": payload}


def content_from_dict(d: dict) -> ComponentContent:
    kind = d["kind"]
    pd = d["payload"]
    if kind == "text":
        payload = TextPayload(text=pd["text"])
    elif kind == "image":
        payload = ImagePayload(image=raster_from_dict(pd["image"]), prompt_used=pd["prompt_used"])
    elif kind == "icon":
        payload = IconPayload(icon_id=pd["icon_id"], svg=pd["svg"], phrase=pd["phrase"])
    elif kind == "color_fill":
        payload = FillPayload(fill=pd["fill"])
    else:
        raise ValueError(f"unknown content kind {kind!r}")
    return ComponentContent(component_index=d["component_index"], kind=kind, payload=payload)


def theme_prompt_to_dict(p: ThemePrompt) -> dict:
    return {
        "text": p.text,
        "in_p": p.in_p,
        "in_l_serialized": p.in_l_serialized,
        "refer": list(p.refer),
        "p_theme": p.p_theme,
    }


def theme_prompt_from_dict(d: dict) -> ThemePrompt:
    return ThemePrompt(
        text=d["text"],
        in_p=d["in_p"],
        in_l_serialized=d["in_l_serialized"],
        refer=tuple(d["refer"]),
        p_theme=d["p_theme"],
    )


def theme_package_to_dict(t: ThemePackage) -> dict:
    return {
        "description": theme_description_to_dict(t.description),
        "theme_image": raster_to_dict(t.theme_image) if t.theme_image else None,
        "prompt_used": theme_prompt_to_dict(t.prompt_used) if t.prompt_used else None,
    }


def theme_package_from_dict(d: dict) -> ThemePackage:
    return ThemePackage(
        description=theme_description_from_dict(d["description"]),
        theme_image=raster_from_dict(d["theme_image"]) if d.get("theme_image") else None,
        prompt_used=theme_prompt_from_dict(d["prompt_used"]) if d.get("prompt_used") else None,
    )


def call_to_dict(c: SubModuleCall) -> dict:
    return {
        "component_index": c.component_index,
        "component_type": c.component_type.label,
        "module": c.module,
        "prompt": c.prompt,
    }


def call_from_dict(d: dict) -> SubModuleCall:
    return SubModuleCall(
        component_index=d["component_index"],
        component_type=ComponentType.parse(d["component_type"]),
        module=d["module"],
        prompt=d["prompt"],
    )


def trace_to_dict(t: GenerationTrace) -> dict:
    return {
        "theme": theme_package_to_dict(t.theme),
        "calls": [call_to_dict(c) for c in t.calls],
        "results": [content_to_dict(r) for r in t.results],
        "cache_entries": list(t.cache_entries),
        "backend_call_counts": dict(t.backend_call_counts),
        "warnings": list(t.warnings),
    }


def trace_from_dict(d: dict) -> GenerationTrace:
    return GenerationTrace(
        theme=theme_package_from_dict(d["theme"]),
        calls=tuple(call_from_dict(c) for c in d["calls"]),
        results=tuple(content_from_dict(r) for r in d["results"]),
        cache_entries=tuple(d["cache_entries"]),
        backend_call_counts=dict(d["backend_call_counts"]),
        warnings=tuple(d.get("warnings", [])),
    )
