import { describe, expect, it } from "vitest";

import {
  applyServerProject,
  canvasEdit,
  descriptionFromPanel,
  editComponentHint,
  editThemeField,
  initialState,
  themePanelFromDescription,
} from "../src/state.js";
import type { BBox, ThemeDescription } from "../src/types.js";

const add = (s = initialState(), bbox: BBox = [10, 10, 100, 40]) =>
  canvasEdit(s, { op: "add", type: "Text", bbox });

describe("canvasEdit add", () => {
  it("appends the component and selects it", () => {
    const s = add();
    expect(s.draft.components).toEqual([{ type: "Text", bbox: [10, 10, 100, 40] }]);
    expect(s.selected).toBe(0);
    expect(s.dirty.layout).toBe(true);
  });

  it("clamps an out-of-canvas drop to the edge", () => {
    const s = add(initialState(), [340, 630, 100, 40]);
    expect(s.draft.components[0]!.bbox).toEqual([260, 600, 100, 40]);
  });

  it("rejects zero-size boxes without state change", () => {
    const before = initialState();
    expect(canvasEdit(before, { op: "add", type: "Text", bbox: [0, 0, 0, 40] })).toBe(before);
  });
});

describe("canvasEdit move/resize", () => {
  it("moves by a delta and clamps at the canvas edge", () => {
    let s = add();
    s = canvasEdit(s, { op: "move", index: 0, dx: 5000, dy: -5000 });
    expect(s.draft.components[0]!.bbox).toEqual([260, 0, 100, 40]);
  });

  it("resize replaces the bbox, clamped", () => {
    let s = add();
    s = canvasEdit(s, { op: "resize", index: 0, bbox: [10, 10, 9999, 20] });
    expect(s.draft.components[0]!.bbox).toEqual([0, 10, 360, 20]);
  });

  it("ignores bad indices", () => {
    const s = add();
    expect(canvasEdit(s, { op: "move", index: 3, dx: 1, dy: 1 })).toBe(s);
  });
});

describe("canvasEdit delete", () => {
  it("removes the component and compacts indices", () => {
    let s = add();
    s = canvasEdit(s, { op: "add", type: "Image", bbox: [10, 60, 50, 50] });
    s = canvasEdit(s, { op: "add", type: "Icon", bbox: [10, 120, 24, 24] });
    s.dirty.components = new Set([0, 2]);
    s = canvasEdit(s, { op: "delete", index: 0 });
    expect(s.draft.components.map((c) => c.type)).toEqual(["Image", "Icon"]);
    expect(s.selected).toBeNull();
    expect([...s.dirty.components]).toEqual([1]); // old index 2 shifted down
  });
});

const DESC: ThemeDescription = {
  theme_color: "#112233",
  primary_color: "#aabbcc",
  app_category: "music",
  theme_text: "calm dark player",
  component_plan: [
    { kind: "text", content_hint: "song title" },
    { kind: "image", content_hint: "album art" },
  ],
};

describe("theme panel", () => {
  it("round-trips description -> panel -> description", () => {
    const panel = themePanelFromDescription(DESC);
    expect(descriptionFromPanel(panel, DESC.component_plan)).toEqual(DESC);
  });

  it("field edits set the theme dirty flag", () => {
    let s = { ...initialState(), themePanel: themePanelFromDescription(DESC) };
    s = editThemeField(s, "theme_color", "#000000");
    expect(s.themePanel!.theme_color).toBe("#000000");
    expect(s.dirty.theme).toBe(true);
    expect(s.dirty.layout).toBe(false);
  });

  it("hint edits mark only that component dirty", () => {
    let s = { ...initialState(), themePanel: themePanelFromDescription(DESC) };
    s = editComponentHint(s, 1, "sunset photo");
    expect(s.themePanel!.hints).toEqual(["song title", "sunset photo"]);
    expect([...s.dirty.components]).toEqual([1]);
    s = editComponentHint(s, 9, "nope");
    expect([...s.dirty.components]).toEqual([1]);
  });
});

describe("applyServerProject", () => {
  it("clears dirty flags and adopts the server revision", () => {
    let s = add();
    s = applyServerProject(
      s,
      {
        id: "p1",
        revision: 3,
        input: { prompt: "hi", layout: s.draft },
        trace: { theme: { description: DESC } },
      },
      "<svg></svg>",
    );
    expect(s.projectId).toBe("p1");
    expect(s.revision).toBe(3);
    expect(s.previewSvg).toBe("<svg></svg>");
    expect(s.dirty).toEqual({ layout: false, theme: false, components: new Set() });
    expect(s.themePanel!.theme_color).toBe("#112233");
  });
});
