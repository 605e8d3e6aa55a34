"""UI knowledge base and icon knowledge base: types, ingestion, validation, text rendering."""

from __future__ import annotations

import enum
import json
import os
import xml.etree.ElementTree as ET
from dataclasses import dataclass, field


class KnowledgeError(ValueError):
    pass


class ComponentType(enum.Enum):
    TEXT = "Text"
    TEXT_BUTTON = "TextButton"
    ICON = "Icon"
    IMAGE = "Image"
    BACKGROUND_IMAGE = "BackgroundImage"
    TOOLBAR = "Toolbar"
    LIST_ITEM = "ListItem"
    INPUT = "Input"
    CARD = "Card"
    WEB_VIEW = "WebView"
    CHECKBOX = "Checkbox"
    RADIO_BUTTON = "RadioButton"
    SLIDER = "Slider"

    @property
    def label(self) -> str:
        return self.value

    @classmethod
    def parse(cls, label: str) -> "ComponentType":
        key = label.replace(" ", "").replace("_", "").replace("-", "").lower()
        try:
            return _TYPE_BY_KEY[key]
        except KeyError:
            raise KnowledgeError(f"unknown component type: {label!r}") from None


_TYPE_BY_KEY = {t.value.lower(): t for t in ComponentType}


@dataclass(frozen=True)
class BBox:
    x: int
    y: int
    w: int
    h: int

    def validate(self, canvas_w: int, canvas_h: int) -> None:
        if self.w <= 0 or self.h <= 0:
            raise KnowledgeError(f"invalid bbox: w={self.w}, h={self.h} must be positive")
        if self.x < 0 or self.y < 0 or self.x + self.w > canvas_w or self.y + self.h > canvas_h:
            raise KnowledgeError(
                f"invalid bbox: [{self.x},{self.y},{self.w},{self.h}] outside canvas "
                f"{canvas_w}x{canvas_h}"
            )

    def as_list(self) -> list[int]:
        return [self.x, self.y, self.w, self.h]


@dataclass(frozen=True)
class Canvas:
    width: int
    height: int

    def validate(self) -> None:
        if self.width < 1 or self.height < 1:
            raise KnowledgeError(f"invalid canvas: {self.width}x{self.height}")


@dataclass(frozen=True)
class Component:
    type: ComponentType
    bbox: BBox


@dataclass(frozen=True)
class Layout:
    canvas: Canvas
    components: tuple[Component, ...]

    def validate(self) -> None:
        self.canvas.validate()
        for i, c in enumerate(self.components):
            try:
                c.bbox.validate(self.canvas.width, self.canvas.height)
            except KnowledgeError as e:
                raise KnowledgeError(f"component {i}: {e}") from None

    def lines(self) -> list[str]:
        """Canonical one-line-per-component serialization: '<Type> [x,y,w,h]'."""
        return [
            f"{c.type.label} [{c.bbox.x},{c.bbox.y},{c.bbox.w},{c.bbox.h}]"
            for c in self.components
        ]


@dataclass(frozen=True)
class ThemeAttrs:
    theme_color: str
    primary_color: str
    theme_description: str
    app_category: str


@dataclass(frozen=True)
class KnowledgeRecord:
    id: str
    layout: Layout
    component_texts: tuple[str | None, ...]
    ui_description: str
    theme_attrs: ThemeAttrs


@dataclass(frozen=True)
class IconRecord:
    id: str
    phrase: str
    svg_source: str


VQA_ATTRIBUTES = ("theme_color", "primary_color", "theme_description", "app_category")


@dataclass(frozen=True)
class VqaTemplate:
    attribute: str
    question: str


DEFAULT_VQA_TEMPLATES = (
    VqaTemplate("theme_color", "Question: What is the background color of this screenshot? Answer:"),
    VqaTemplate("primary_color", "Question: Besides the background, what's the dominant color in this image? Answer:"),
    VqaTemplate("theme_description", "Question: Can you describe this screenshot in detail? Answer:"),
    VqaTemplate("app_category", "Question: Which category does this app belong to? Answer:"),
)


def validate_vqa_templates(templates: list[VqaTemplate] | tuple[VqaTemplate, ...]) -> None:
    attrs = [t.attribute for t in templates]
    if sorted(attrs) != sorted(VQA_ATTRIBUTES):
        raise KnowledgeError(f"template set must cover {VQA_ATTRIBUTES} exactly once, got {attrs}")


# ---------------------------------------------------------------------------
# record (de)serialization


def layout_from_dict(canvas: dict, components: list[dict]) -> tuple[Layout, tuple[str | None, ...]]:
    cv = Canvas(int(canvas["width"]), int(canvas["height"]))
    comps = []
    texts: list[str | None] = []
    for c in components:
        bbox = c["bbox"]
        comps.append(Component(ComponentType.parse(c["type"]), BBox(*(int(v) for v in bbox))))
        texts.append(c.get("text"))
    layout = Layout(cv, tuple(comps))
    layout.validate()
    return layout, tuple(texts)


def record_from_dict(obj: dict) -> KnowledgeRecord:
    layout, texts = layout_from_dict(obj["canvas"], obj["components"])
    ta = obj["theme_attrs"]
    rec = KnowledgeRecord(
        id=str(obj["id"]),
        layout=layout,
        component_texts=texts,
        ui_description=str(obj.get("ui_description", "")),
        theme_attrs=ThemeAttrs(
            theme_color=str(ta.get("theme_color", "")),
            primary_color=str(ta.get("primary_color", "")),
            theme_description=str(ta.get("theme_description", "")),
            app_category=str(ta.get("app_category", "")),
        ),
    )
    return rec


def record_to_dict(rec: KnowledgeRecord) -> dict:
    comps = []
    for comp, text in zip(rec.layout.components, rec.component_texts):
        d: dict = {"type": comp.type.label, "bbox": comp.bbox.as_list()}
        if text is not None:
            d["text"] = text
        comps.append(d)
    return {
        "id": rec.id,
        "canvas": {"width": rec.layout.canvas.width, "height": rec.layout.canvas.height},
        "components": comps,
        "ui_description": rec.ui_description,
        "theme_attrs": {
            "theme_color": rec.theme_attrs.theme_color,
            "primary_color": rec.theme_attrs.primary_color,
            "theme_description": rec.theme_attrs.theme_description,
            "app_category": rec.theme_attrs.app_category,
        },
    }


def _record_files(path: str) -> list[str]:
    if os.path.isdir(path):
        return sorted(
            os.path.join(path, name)
            for name in os.listdir(path)
            if name.endswith((".jsonl", ".ndjson"))
        )
    return [path]


def load_knowledge_base(path: str) -> list[KnowledgeRecord]:
    """Load line-delimited knowledge records from a file or directory of files."""
    records: list[KnowledgeRecord] = []
    seen: set[str] = set()
    index = 0
    for fname in _record_files(path):
        with open(fname, encoding="utf-8") as fh:
            for line in fh:
                line = line.strip()
                if not line:
                    continue
                try:
                    rec = record_from_dict(json.loads(line))
                except (KeyError, TypeError, json.JSONDecodeError) as e:
                    raise KnowledgeError(f"malformed record at record {index}: {e}") from None
                except KnowledgeError as e:
                    raise KnowledgeError(f"invalid bbox at record {index}: {e}") from None
                if rec.id in seen:
                    raise KnowledgeError(f"duplicate record id {rec.id!r} at record {index}")
                seen.add(rec.id)
                records.append(rec)
                index += 1
    return records


def save_knowledge_base(records: list[KnowledgeRecord], path: str) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        for rec in records:
            fh.write(json.dumps(record_to_dict(rec), separators=(",", ":")) + "\n")


def validate_icon_svg(icon_id: str, svg_source: str) -> None:
    try:
        ET.fromstring(svg_source)
    except ET.ParseError as e:
        raise KnowledgeError(f"icon {icon_id!r}: invalid SVG: {e}") from None


def load_icon_base(path: str) -> list[IconRecord]:
    icons: list[IconRecord] = []
    seen: set[str] = set()
    with open(path, encoding="utf-8") as fh:
        for i, line in enumerate(fh):
            line = line.strip()
            if not line:
                continue
            try:
                obj = json.loads(line)
                rec = IconRecord(id=str(obj["id"]), phrase=str(obj["phrase"]), svg_source=str(obj["svg"]))
            except (KeyError, TypeError, json.JSONDecodeError) as e:
                raise KnowledgeError(f"malformed icon record at line {i}: {e}") from None
            if not rec.phrase:
                raise KnowledgeError(f"icon {rec.id!r}: empty phrase")
            if rec.id in seen:
                raise KnowledgeError(f"duplicate icon id {rec.id!r}")
            validate_icon_svg(rec.id, rec.svg_source)
            seen.add(rec.id)
            icons.append(rec)
    return icons


def save_icon_base(icons: list[IconRecord], path: str) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        for rec in icons:
            fh.write(json.dumps({"id": rec.id, "phrase": rec.phrase, "svg": rec.svg_source},
                                separators=(",", ":")) + "\n")


def knowledge_record_to_text(rec: KnowledgeRecord) -> str:
    """Canonical embeddable text for a record; also the refer_i string injected in prompts."""
    parts: list[str] = []
    parts.extend(rec.layout.lines())
    parts.extend(t for t in rec.component_texts if t)
    if rec.ui_description:
        parts.append(rec.ui_description)
    ta = rec.theme_attrs
    parts.append(f"theme_color: {ta.theme_color}")
    parts.append(f"primary_color: {ta.primary_color}")
    parts.append(f"theme_description: {ta.theme_description}")
    parts.append(f"app_category: {ta.app_category}")
    return "\n".join(parts)
