// Pure editor state and the canvas_edit reducer. No DOM access here so the
// logic is testable in node; app.ts wires it to actual events.

import type {
  BBox,
  Canvas,
  ComponentTypeLabel,
  Layout,
  LayoutComponent,
  ThemeDescription,
} from "./types.js";

export interface ThemePanel {
  theme_color: string;
  primary_color: string;
  app_category: string;
  theme_text: string;
  hints: string[];
}

export interface DirtyFlags {
  layout: boolean;
  theme: boolean;
  components: Set<number>;
}

export interface EditorState {
  projectId: string | null;
  revision: number;
  prompt: string;
  draft: Layout;
  selected: number | null;
  themePanel: ThemePanel | null;
  previewSvg: string | null;
  dirty: DirtyFlags;
  busy: boolean;
  lastError: string | null;
}

export type CanvasAction =
  | { op: "add"; type: ComponentTypeLabel; bbox: BBox }
  | { op: "move"; index: number; dx: number; dy: number }
  | { op: "resize"; index: number; bbox: BBox }
  | { op: "delete"; index: number };

export function initialState(canvas: Canvas = { width: 360, height: 640 }): EditorState {
  return {
    projectId: null,
    revision: 0,
    prompt: "",
    draft: { canvas, components: [] },
    selected: null,
    themePanel: null,
    previewSvg: null,
    dirty: { layout: false, theme: false, components: new Set() },
    busy: false,
    lastError: null,
  };
}

function clampBBox(bbox: BBox, canvas: Canvas): BBox | null {
  let [x, y, w, h] = bbox.map(Math.round) as BBox;
  if (w < 1 || h < 1) return null;
  w = Math.min(w, canvas.width);
  h = Math.min(h, canvas.height);
  x = Math.max(0, Math.min(x, canvas.width - w));
  y = Math.max(0, Math.min(y, canvas.height - h));
  return [x, y, w, h];
}

/**
 * Apply a canvas action to the draft layout. Invalid actions (zero-size box,
 * bad index) return the state unchanged, which the UI treats as a visual
 * rejection. Moves and resizes are clamped to the canvas.
 */
export function canvasEdit(state: EditorState, action: CanvasAction): EditorState {
  const { canvas, components } = state.draft;

  const withComponents = (next: LayoutComponent[], selected: number | null): EditorState => ({
    ...state,
    draft: { canvas, components: next },
    selected,
    dirty: { ...state.dirty, layout: true },
  });

  switch (action.op) {
    case "add": {
      const bbox = clampBBox(action.bbox, canvas);
      if (!bbox) return state;
      const next = [...components, { type: action.type, bbox }];
      return withComponents(next, next.length - 1);
    }
    case "move": {
      const comp = components[action.index];
      if (!comp) return state;
      const [x, y, w, h] = comp.bbox;
      const bbox = clampBBox([x + action.dx, y + action.dy, w, h], canvas);
      if (!bbox) return state;
      const next = components.slice();
      next[action.index] = { type: comp.type, bbox };
      return withComponents(next, action.index);
    }
    case "resize": {
      const comp = components[action.index];
      if (!comp) return state;
      const bbox = clampBBox(action.bbox, canvas);
      if (!bbox) return state;
      const next = components.slice();
      next[action.index] = { type: comp.type, bbox };
      return withComponents(next, action.index);
    }
    case "delete": {
      if (!components[action.index]) return state;
      // splice compacts indices; dirty component flags shift down with them
      const next = components.filter((_, i) => i !== action.index);
      const shifted = new Set<number>();
      for (const i of state.dirty.components) {
        if (i < action.index) shifted.add(i);
        else if (i > action.index) shifted.add(i - 1);
      }
      return {
        ...withComponents(next, null),
        dirty: { ...state.dirty, layout: true, components: shifted },
      };
    }
  }
}

/** Theme panel fields come from the latest server trace. */
export function themePanelFromDescription(desc: ThemeDescription): ThemePanel {
  return {
    theme_color: desc.theme_color,
    primary_color: desc.primary_color,
    app_category: desc.app_category,
    theme_text: desc.theme_text,
    hints: desc.component_plan.map((e) => e.content_hint),
  };
}

export function descriptionFromPanel(
  panel: ThemePanel,
  plan: { kind: string }[],
): ThemeDescription {
  return {
    theme_color: panel.theme_color,
    primary_color: panel.primary_color,
    app_category: panel.app_category,
    theme_text: panel.theme_text,
    component_plan: plan.map((e, i) => ({
      kind: e.kind,
      content_hint: panel.hints[i] ?? "",
    })),
  };
}

export function editThemeField(
  state: EditorState,
  field: keyof Omit<ThemePanel, "hints">,
  value: string,
): EditorState {
  if (!state.themePanel) return state;
  return {
    ...state,
    themePanel: { ...state.themePanel, [field]: value },
    dirty: { ...state.dirty, theme: true },
  };
}

export function editComponentHint(state: EditorState, index: number, hint: string): EditorState {
  if (!state.themePanel || index < 0 || index >= state.themePanel.hints.length) return state;
  const hints = state.themePanel.hints.slice();
  hints[index] = hint;
  const components = new Set(state.dirty.components);
  components.add(index);
  return {
    ...state,
    themePanel: { ...state.themePanel, hints },
    dirty: { ...state.dirty, components },
  };
}

/** Called after any successful server round-trip that returned a project doc. */
export function applyServerProject(
  state: EditorState,
  project: {
    id: string;
    revision: number;
    input: { prompt: string; layout: Layout };
    trace: { theme: { description: ThemeDescription } } | null;
  },
  previewSvg: string | null,
): EditorState {
  return {
    ...state,
    projectId: project.id,
    revision: project.revision,
    prompt: project.input.prompt,
    draft: project.input.layout,
    themePanel: project.trace ? themePanelFromDescription(project.trace.theme.description) : null,
    previewSvg,
    dirty: { layout: false, theme: false, components: new Set() },
    lastError: null,
  };
}
