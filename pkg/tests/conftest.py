import random

import pytest

from protoflow.backends import Backends
from protoflow.kb import (
    BBox,
    Canvas,
    Component,
    ComponentType,
    IconRecord,
    KnowledgeRecord,
    Layout,
    ThemeAttrs,
)
from protoflow.orchestrator import DesignInput
from protoflow.retrieval import IconIndex

CANVAS = Canvas(360, 640)

ALL_TYPES = list(ComponentType)


def make_layout(types, canvas=CANVAS):
    """Stack components vertically so bboxes never overlap."""
    n = len(types)
    row_h = canvas.height // n
    comps = []
    for i, t in enumerate(types):
        h = max(row_h - 4, 1)
        comps.append(Component(t, BBox(4, i * row_h, canvas.width - 8, h)))
    layout = Layout(canvas, tuple(comps))
    layout.validate()
    return layout


def make_record(rec_id, types=None, texts=None, description="a screen", seed=0):
    rng = random.Random(f"{rec_id}|{seed}")
    types = types or rng.sample(ALL_TYPES, k=rng.randint(1, 4))
    layout = make_layout(types)
    if texts is None:
        texts = tuple(f"text-{rec_id}-{i}" for i in range(len(types)))
    return KnowledgeRecord(
        id=rec_id,
        layout=layout,
        component_texts=tuple(texts),
        ui_description=description,
        theme_attrs=ThemeAttrs(
            theme_color=f"color-{rng.randint(0, 9)}",
            primary_color=f"primary-{rng.randint(0, 9)}",
            theme_description=f"theme for {rec_id}",
            app_category=rng.choice(["news", "shopping", "music", "travel"]),
        ),
    )


ICON_SVG = '<svg xmlns="http://www.w3.org/2000/svg" viewBox="0 0 24 24"><path d="M12 2L2 22h20z" data-icon="{id}"/></svg>'


def make_icons(phrases):
    return [
        IconRecord(id=f"icon-{p.replace(' ', '-')}", phrase=p, svg_source=ICON_SVG.replace("{id}", p))
        for p in phrases
    ]


BASE_PHRASES = ["alarm", "bookmark", "add shopping cart", "msg", "home", "search",
                "settings", "camera", "delete", "download"]


@pytest.fixture
def mock_backends():
    return Backends.mock()


@pytest.fixture
def small_kb():
    return [make_record(f"rec-{i:03d}") for i in range(8)]


@pytest.fixture
def icon_index(mock_backends):
    return IconIndex(make_icons(BASE_PHRASES), mock_backends.embed)


@pytest.fixture
def design_input():
    layout = make_layout([
        ComponentType.TEXT,
        ComponentType.TEXT_BUTTON,
        ComponentType.IMAGE,
        ComponentType.ICON,
        ComponentType.TOOLBAR,
    ])
    return DesignInput(prompt="a music player home screen", layout=layout)
