import xml.etree.ElementTree as ET

import numpy as np
import pytest

from conftest import make_layout
from protoflow.assembler import (
    AssemblyError,
    EXPORT_VERSION,
    assemble_svg,
    build_prototype,
    dominant_color,
    export_project,
    import_project,
)
from protoflow.backends import Backends, RasterImage
from protoflow.kb import ComponentType
from protoflow.orchestrator import DesignInput, PipelineConfig, generate_prototype

SVG_NS = "{http://www.w3.org/2000/svg}"


def oracle_dominant(arr):
    """Independent bucket count: dict-based, ties to lowest (qr,qg,qb)."""
    buckets = {}
    for px in arr.reshape(-1, 3):
        key = (int(px[0]) >> 4, int(px[1]) >> 4, int(px[2]) >> 4)
        buckets.setdefault(key, []).append(px)
    best = min(buckets.items(), key=lambda kv: (-len(kv[1]), kv[0]))
    mean = np.floor(np.mean(best[1], axis=0) + 0.5).astype(int)
    return "#{:02x}{:02x}{:02x}".format(*mean)


def test_dominant_color_uniform():
    arr = np.zeros((4, 4, 3), dtype=np.uint8)
    arr[:, :] = (0, 255, 0)
    assert dominant_color(RasterImage.from_array(arr)) == "#00ff00"


def test_dominant_color_majority():
    arr = np.zeros((2, 2, 3), dtype=np.uint8)
    arr[0, 0] = (255, 255, 255)
    assert dominant_color(RasterImage.from_array(arr)) == "#000000"


def test_dominant_color_matches_oracle():
    rng = np.random.default_rng(11)
    for _ in range(25):
        arr = rng.integers(0, 256, size=(8, 8, 3), dtype=np.uint8)
        img = RasterImage.from_array(arr)
        assert dominant_color(img) == oracle_dominant(arr)


def full_trace(mock_backends, small_kb, icon_index, design_input):
    return generate_prototype(design_input, mock_backends, small_kb, icon_index,
                              PipelineConfig(image_size=64))


def test_svg_structure(mock_backends, small_kb, icon_index, design_input):
    trace = full_trace(mock_backends, small_kb, icon_index, design_input)
    svg = assemble_svg(design_input, trace.theme.description, trace.results)
    root = ET.fromstring(svg)
    canvas = design_input.layout.canvas
    assert root.get("viewBox") == f"0 0 {canvas.width} {canvas.height}"
    groups = [el for el in root if el.tag == f"{SVG_NS}g"]
    assert len(groups) == len(design_input.layout.components)
    for i, (g, comp) in enumerate(zip(groups, design_input.layout.components)):
        assert g.get("id") == f"cmp-{i}"
        assert g.get("data-index") == str(i)
        assert int(g.get("data-x")) == comp.bbox.x
        assert int(g.get("data-y")) == comp.bbox.y
        assert int(g.get("data-w")) == comp.bbox.w
        assert int(g.get("data-h")) == comp.bbox.h


def test_svg_text_node_contains_content(mock_backends, small_kb, icon_index, design_input):
    trace = full_trace(mock_backends, small_kb, icon_index, design_input)
    svg = assemble_svg(design_input, trace.theme.description, trace.results)
    root = ET.fromstring(svg)
    texts = root.findall(f".//{SVG_NS}text")
    contents = {t.text for t in texts}
    assert trace.results[0].payload.text in contents


def test_svg_inlines_icon_path_verbatim(mock_backends, small_kb, icon_index, design_input):
    trace = full_trace(mock_backends, small_kb, icon_index, design_input)
    svg = assemble_svg(design_input, trace.theme.description, trace.results)
    icon = next(r for r in trace.results if r.kind == "icon")
    assert 'd="M12 2L2 22h20z"' in icon.payload.svg
    assert 'd="M12 2L2 22h20z"' in svg


def test_svg_background_uses_theme_color(mock_backends, small_kb, icon_index, design_input):
    trace = full_trace(mock_backends, small_kb, icon_index, design_input)
    svg = assemble_svg(design_input, trace.theme.description, trace.results)
    root = ET.fromstring(svg)
    bg = root.find(f"{SVG_NS}rect")
    assert bg.get("fill") == trace.theme.description.theme_color


def test_svg_escapes_text():
    from protoflow.orchestrator import default_theme_description
    from protoflow.submodules import ComponentContent, TextPayload

    layout = make_layout([ComponentType.TEXT])
    inp = DesignInput(prompt="p", layout=layout)
    theme = default_theme_description(inp)
    contents = [ComponentContent(0, "text", TextPayload(text='<b>&"hack"'))]
    svg = assemble_svg(inp, theme, contents)
    root = ET.fromstring(svg)
    assert root.findall(f".//{SVG_NS}text")[0].text == '<b>&"hack"'


def test_svg_misaligned_contents_rejected(mock_backends, small_kb, icon_index, design_input):
    trace = full_trace(mock_backends, small_kb, icon_index, design_input)
    with pytest.raises(AssemblyError):
        assemble_svg(design_input, trace.theme.description, trace.results[:-1])


def test_export_round_trip(mock_backends, small_kb, icon_index, design_input):
    trace = full_trace(mock_backends, small_kb, icon_index, design_input)
    proto = build_prototype(design_input, trace)
    doc = export_project(proto)
    assert doc["version"] == EXPORT_VERSION
    assert import_project(doc) == proto


def test_export_round_trip_survives_json(mock_backends, small_kb, icon_index, design_input):
    import json

    trace = full_trace(mock_backends, small_kb, icon_index, design_input)
    proto = build_prototype(design_input, trace)
    doc = json.loads(json.dumps(export_project(proto)))
    assert import_project(doc) == proto


def test_import_rejects_unknown_version(mock_backends, small_kb, icon_index, design_input):
    trace = full_trace(mock_backends, small_kb, icon_index, design_input)
    doc = export_project(build_prototype(design_input, trace))
    doc["version"] = "bogus"
    with pytest.raises(AssemblyError):
        import_project(doc)
