"""Central theme-design module: theme prompt assembly, theme generation,
cache pool, and sequential dispatch of per-component sub-modules."""

from __future__ import annotations

import re
from dataclasses import dataclass, field, replace
from typing import Optional

from .backends import (
    Backends,
    CountingBackends,
    ImageGenRequest,
    RasterImage,
    TextGenRequest,
)
from .kb import ComponentType, KnowledgeRecord, Layout, knowledge_record_to_text
from .retrieval import (
    IconIndex,
    Index,
    RetrievalConfig,
    RetrievalResult,
    build_index,
    query_text,
    top_k,
)


class OrchestrationError(RuntimeError):
    pass


class ThemeParseError(OrchestrationError):
    def __init__(self, message: str, raw_text: str):
        super().__init__(message)
        self.raw_text = raw_text


VALID_FLAGS = frozenset({
    "no_retrieval",
    "no_theme_description",
    "no_theme_image",
    "no_text_module",
    "no_image_module",
    "no_icon_module",
})


@dataclass(frozen=True)
class PipelineConfig:
    k: int = 2
    image_size: int = 512
    seed: int = 0
    max_tokens: int = 512
    strength: float = 0.6
    flags: frozenset[str] = frozenset()

    def __post_init__(self):
        unknown = self.flags - VALID_FLAGS
        if unknown:
            raise ValueError(f"unknown pipeline flags: {sorted(unknown)}")


@dataclass(frozen=True)
class DesignInput:
    prompt: str
    layout: Layout

    def validate(self) -> None:
        if not self.prompt:
            raise ValueError("design prompt must be non-empty")
        if not self.layout.components:
            raise ValueError("layout must have at least one component")
        self.layout.validate()


# ---------------------------------------------------------------------------
# prompt templates

P_THEME_HEADER = (
    "Produce a theme description for the UI described above.\n"
    "Answer with exactly these labeled fields:\n"
    "THEME_COLOR: #rrggbb\n"
    "PRIMARY_COLOR: #rrggbb\n"
    "APP_CATEGORY: <one short category>\n"
    "THEME: <one-line overall theme description>\n"
    "Then one line per component as 'COMPONENT[i]: kind | content hint' "
    "where kind is one of text, image, icon, other:"
)

FORMAT_REMINDER = (
    "Format reminder: respond only with THEME_COLOR, PRIMARY_COLOR, APP_CATEGORY, "
    "THEME and one COMPONENT[i] line per component, nothing else."
)

P_TEXT_TEMPLATE = (
    "Based on the theme description and relevant details, provide a text content "
    "recommendation for the designated position at [bbox]."
)
P_ICON_TEMPLATE = (
    "In reference to relevant information and taking into account its positioning "
    'at [bbox], and based on the theme description, propose an indicative phrase '
    'like "msg" for the "Icon".'
)
P_IMAGE_TEMPLATE = (
    "Generate image content consistent with the theme image and theme description "
    "for the component at [bbox]."
)
P_FILL_TEMPLATE = (
    "Fill the component at [bbox] with the dominant color of the matching theme "
    "image region."
)

_SUB_TEMPLATES = {
    "text": P_TEXT_TEMPLATE,
    "icon": P_ICON_TEMPLATE,
    "image": P_IMAGE_TEMPLATE,
    "color_fill": P_FILL_TEMPLATE,
}


def render_p_theme(layout: Layout) -> str:
    lines = [P_THEME_HEADER]
    for i, comp in enumerate(layout.components):
        b = comp.bbox
        lines.append(f"COMPONENT[{i}] ({comp.type.label}): at [{b.x},{b.y},{b.w},{b.h}]")
    return "\n".join(lines)


def render_p_sub(module: str, bbox, hint: str | None = None) -> str:
    text = _SUB_TEMPLATES[module].replace(
        "[bbox]", f"[{bbox.x},{bbox.y},{bbox.w},{bbox.h}]"
    )
    if hint:
        text += f"\nHint: {hint}"
    return text


# ---------------------------------------------------------------------------
# theme description

_HEX_RE = re.compile(r"^#[0-9a-f]{6}$")
_COMPONENT_LINE_RE = re.compile(r"^COMPONENT\[(\d+)\]:\s*(\w+)\s*\|\s*(.*)$")

PLAN_KINDS = ("text", "image", "icon", "other")


@dataclass(frozen=True)
class PlanEntry:
    kind: str
    content_hint: str


@dataclass(frozen=True)
class ThemeDescription:
    theme_color: str
    primary_color: str
    app_category: str
    theme_text: str
    component_plan: tuple[PlanEntry, ...]

    def validate(self, n_components: int | None = None) -> None:
        for name, color in (("theme_color", self.theme_color), ("primary_color", self.primary_color)):
            if not _HEX_RE.match(color):
                raise ValueError(f"{name} {color!r} is not #rrggbb")
        for e in self.component_plan:
            if e.kind not in PLAN_KINDS:
                raise ValueError(f"bad plan kind {e.kind!r}")
        if n_components is not None and len(self.component_plan) != n_components:
            raise ValueError(
                f"component_plan length {len(self.component_plan)} != components {n_components}"
            )

    def to_text(self) -> str:
        lines = [
            f"THEME_COLOR: {self.theme_color}",
            f"PRIMARY_COLOR: {self.primary_color}",
            f"APP_CATEGORY: {self.app_category}",
            f"THEME: {self.theme_text}",
        ]
        for i, e in enumerate(self.component_plan):
            lines.append(f"COMPONENT[{i}]: {e.kind} | {e.content_hint}")
        return "\n".join(lines)


def parse_theme_description(raw: str, n_components: int) -> ThemeDescription:
    fields: dict[str, str] = {}
    plan: dict[int, PlanEntry] = {}
    for line in raw.splitlines():
        line = line.strip()
        m = _COMPONENT_LINE_RE.match(line)
        if m:
            i, kind, hint = int(m.group(1)), m.group(2).lower(), m.group(3).strip()
            if kind in PLAN_KINDS:
                plan[i] = PlanEntry(kind=kind, content_hint=hint)
            continue
        for key in ("THEME_COLOR", "PRIMARY_COLOR", "APP_CATEGORY", "THEME"):
            if line.startswith(key + ":"):
                fields[key] = line[len(key) + 1:].strip()
                break
    missing = [k for k in ("THEME_COLOR", "PRIMARY_COLOR", "APP_CATEGORY", "THEME") if k not in fields]
    if missing:
        raise ThemeParseError(f"missing fields {missing}", raw)
    if sorted(plan) != list(range(n_components)):
        raise ThemeParseError(
            f"component plan indices {sorted(plan)} do not cover 0..{n_components - 1}", raw
        )
    desc = ThemeDescription(
        theme_color=fields["THEME_COLOR"].lower(),
        primary_color=fields["PRIMARY_COLOR"].lower(),
        app_category=fields["APP_CATEGORY"],
        theme_text=fields["THEME"],
        component_plan=tuple(plan[i] for i in range(n_components)),
    )
    try:
        desc.validate(n_components)
    except ValueError as e:
        raise ThemeParseError(str(e), raw) from None
    return desc


def default_theme_description(input: DesignInput) -> ThemeDescription:
    """Fallback plan used when theme-description generation is disabled."""
    plan = []
    for comp in input.layout.components:
        module = dispatch(comp.type)
        kind = module if module in ("text", "image", "icon") else "other"
        plan.append(PlanEntry(kind=kind, content_hint=comp.type.label))
    return ThemeDescription(
        theme_color="#cccccc",
        primary_color="#888888",
        app_category="unknown",
        theme_text=input.prompt,
        component_plan=tuple(plan),
    )


@dataclass(frozen=True)
class ThemePrompt:
    text: str
    in_p: str
    in_l_serialized: str
    refer: tuple[str, ...]
    p_theme: str


@dataclass(frozen=True)
class ThemePackage:
    description: ThemeDescription
    theme_image: Optional[RasterImage]
    prompt_used: Optional[ThemePrompt]


# ---------------------------------------------------------------------------
# cache pool

@dataclass(frozen=True)
class CachePool:
    entries: tuple[str, ...]

    @classmethod
    def seeded(cls, theme_text: str) -> "CachePool":
        return cls(entries=(theme_text,))

    def append(self, result: str) -> "CachePool":
        return CachePool(entries=self.entries + (result,))

    def text(self) -> str:
        return "\n".join(self.entries)


@dataclass(frozen=True)
class SubModuleCall:
    component_index: int
    component_type: ComponentType
    module: str  # text | image | icon | color_fill
    prompt: str


def dispatch(component_type: ComponentType) -> str:
    if component_type in (ComponentType.TEXT, ComponentType.TEXT_BUTTON):
        return "text"
    if component_type in (ComponentType.IMAGE, ComponentType.BACKGROUND_IMAGE):
        return "image"
    if component_type is ComponentType.ICON:
        return "icon"
    return "color_fill"


def effective_dispatch(component_type: ComponentType, flags: frozenset[str]) -> str:
    module = dispatch(component_type)
    if module == "text" and "no_text_module" in flags:
        return "color_fill"
    if module == "image" and "no_image_module" in flags:
        return "color_fill"
    if module == "icon" and "no_icon_module" in flags:
        return "color_fill"
    return module


# ---------------------------------------------------------------------------
# theme generation

def assemble_theme_prompt(
    input: DesignInput,
    hits: RetrievalResult,
    kb_by_id: dict[str, KnowledgeRecord],
) -> ThemePrompt:
    refer = []
    for hit in hits.hits:
        rec = kb_by_id.get(hit.record_id)
        if rec is None:
            raise OrchestrationError(f"hit id {hit.record_id!r} missing from knowledge base")
        refer.append(knowledge_record_to_text(rec))
    in_l = "\n".join(input.layout.lines())
    p_theme = render_p_theme(input.layout)
    text = "\n".join([input.prompt, in_l, *refer, p_theme])
    return ThemePrompt(
        text=text,
        in_p=input.prompt,
        in_l_serialized=in_l,
        refer=tuple(refer),
        p_theme=p_theme,
    )


THEME_PARSE_RETRIES = 2


def generate_theme(
    input: DesignInput,
    backends: CountingBackends,
    kb_by_id: dict[str, KnowledgeRecord],
    index: Optional[Index],
    config: PipelineConfig,
    warnings: Optional[list[str]] = None,
) -> ThemePackage:
    input.validate()
    n = len(input.layout.components)

    if "no_retrieval" in config.flags or index is None:
        hits = RetrievalResult(hits=())
    else:
        query = backends.embed.embed_text(query_text(input.prompt, input.layout))
        hits = top_k(index, query, RetrievalConfig(k=config.k))
        if len(hits.hits) < config.k and warnings is not None:
            warnings.append(
                f"retrieval returned {len(hits.hits)} hits, wanted {config.k}"
            )

    prompt = assemble_theme_prompt(input, hits, kb_by_id)

    if "no_theme_description" in config.flags:
        description = default_theme_description(input)
    else:
        ask = prompt.text
        description = None
        raw = ""
        for _ in range(1 + THEME_PARSE_RETRIES):
            raw = backends.generate_text(TextGenRequest(prompt=ask, max_tokens=config.max_tokens))
            try:
                description = parse_theme_description(raw, n)
                break
            except ThemeParseError:
                ask = ask + "\n" + FORMAT_REMINDER
        if description is None:
            raise ThemeParseError(
                f"theme description unparseable after {THEME_PARSE_RETRIES} re-asks", raw
            )

    theme_image = None
    if "no_theme_image" not in config.flags:
        theme_image = backends.generate_image(ImageGenRequest(
            prompt=description.to_text(),
            width=config.image_size,
            height=config.image_size,
            seed=config.seed,
            layout_condition=input.layout,
        ))
    return ThemePackage(description=description, theme_image=theme_image, prompt_used=prompt)


# ---------------------------------------------------------------------------
# stepping and full runs

@dataclass(frozen=True)
class GenerationTrace:
    theme: ThemePackage
    calls: tuple[SubModuleCall, ...]
    results: tuple  # of submodules.ComponentContent, aligned to layout order
    cache_entries: tuple[str, ...]
    backend_call_counts: dict
    warnings: tuple[str, ...] = ()


def step(
    cache: CachePool,
    component_index: int,
    input: DesignInput,
    theme: ThemePackage,
    backends: CountingBackends,
    icons: Optional[IconIndex],
    config: PipelineConfig,
    hint_override: Optional[str] = None,
):
    from . import submodules

    comp = input.layout.components[component_index]
    module = effective_dispatch(comp.type, config.flags)
    plan = theme.description.component_plan[component_index]
    hint = hint_override if hint_override is not None else plan.content_hint
    prompt = render_p_sub(module, comp.bbox, hint) + "\n" + cache.text()
    call = SubModuleCall(
        component_index=component_index,
        component_type=comp.type,
        module=module,
        prompt=prompt,
    )
    try:
        if module == "text":
            content = submodules.text_content(call, backends)
        elif module == "image":
            content = submodules.image_content(
                call, theme, comp.bbox, input.layout.canvas, backends, config, hint
            )
        elif module == "icon":
            content = submodules.icon_content(call, icons, backends)
        else:
            content = submodules.color_fill_content(
                call, comp.bbox, theme, input.layout.canvas, config
            )
    except Exception as e:
        raise OrchestrationError(f"component {component_index} ({module}): {e}") from e
    return call, content, cache.append(content.res_text())


def generate_prototype(
    input: DesignInput,
    backends: Backends,
    kb_records: list[KnowledgeRecord],
    icons: Optional[IconIndex],
    config: PipelineConfig = PipelineConfig(),
    index: Optional[Index] = None,
) -> GenerationTrace:
    input.validate()
    counting = CountingBackends(backends)
    kb_by_id = {r.id: r for r in kb_records}
    if index is None and kb_records and "no_retrieval" not in config.flags:
        index = build_index(
            [(r.id, knowledge_record_to_text(r)) for r in kb_records], backends.embed
        )
    warnings: list[str] = []
    theme = generate_theme(input, counting, kb_by_id, index, config, warnings)

    cache = CachePool.seeded(theme.description.to_text())
    calls: list[SubModuleCall] = []
    results = []
    for i in range(len(input.layout.components)):
        call, content, cache = step(cache, i, input, theme, counting, icons, config)
        calls.append(call)
        results.append(content)
    return GenerationTrace(
        theme=theme,
        calls=tuple(calls),
        results=tuple(results),
        cache_entries=cache.entries,
        backend_call_counts=dict(counting.counts),
        warnings=tuple(warnings),
    )


def regenerate_component(
    trace: GenerationTrace,
    input: DesignInput,
    component_index: int,
    edited_hint: Optional[str],
    backends: Backends,
    icons: Optional[IconIndex],
    config: PipelineConfig = PipelineConfig(),
) -> GenerationTrace:
    n = len(input.layout.components)
    if not (0 <= component_index < n):
        raise OrchestrationError(f"component index {component_index} out of range 0..{n - 1}")
    if len(trace.results) != n:
        raise OrchestrationError("trace is not complete")
    counting = CountingBackends(backends)
    # replay the cache exactly as it was when this component originally ran
    cache = CachePool(entries=trace.cache_entries[: component_index + 1])
    call, content, cache = step(
        cache, component_index, input, trace.theme, counting, icons, config,
        hint_override=edited_hint,
    )
    calls = list(trace.calls)
    results = list(trace.results)
    calls[component_index] = call
    results[component_index] = content
    entries = list(trace.cache_entries)
    entries[component_index + 1] = content.res_text()
    counts = dict(trace.backend_call_counts)
    for k, v in counting.counts.items():
        counts[k] = counts.get(k, 0) + v
    return GenerationTrace(
        theme=trace.theme,
        calls=tuple(calls),
        results=tuple(results),
        cache_entries=tuple(entries),
        backend_call_counts=counts,
        warnings=trace.warnings,
    )


def regenerate_all(
    trace: GenerationTrace,
    input: DesignInput,
    edited_theme: ThemeDescription,
    backends: Backends,
    icons: Optional[IconIndex],
    config: PipelineConfig = PipelineConfig(),
) -> GenerationTrace:
    n = len(input.layout.components)
    edited_theme.validate(n)
    counting = CountingBackends(backends)
    theme_image = None
    if "no_theme_image" not in config.flags:
        theme_image = counting.generate_image(ImageGenRequest(
            prompt=edited_theme.to_text(),
            width=config.image_size,
            height=config.image_size,
            seed=config.seed,
            layout_condition=input.layout,
        ))
    theme = ThemePackage(
        description=edited_theme,
        theme_image=theme_image,
        prompt_used=trace.theme.prompt_used,
    )
    cache = CachePool.seeded(edited_theme.to_text())
    calls: list[SubModuleCall] = []
    results = []
    for i in range(n):
        call, content, cache = step(cache, i, input, theme, counting, icons, config)
        calls.append(call)
        results.append(content)
    return GenerationTrace(
        theme=theme,
        calls=tuple(calls),
        results=tuple(results),
        cache_entries=cache.entries,
        backend_call_counts=dict(counting.counts),
        warnings=trace.warnings,
    )
