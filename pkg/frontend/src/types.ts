// Wire types for the protoflow service API.

export const COMPONENT_TYPES = [
  "Text",
  "TextButton",
  "Image",
  "BackgroundImage",
  "Icon",
  "Toolbar",
  "List",
  "Card",
  "Input",
  "CheckBox",
  "RadioButton",
  "Switch",
  "WebView",
] as const;

export type ComponentTypeLabel = (typeof COMPONENT_TYPES)[number];

export interface Canvas {
  width: number;
  height: number;
}

/** [x, y, w, h] in canvas pixels. */
export type BBox = [number, number, number, number];

export interface LayoutComponent {
  type: ComponentTypeLabel;
  bbox: BBox;
}

export interface Layout {
  canvas: Canvas;
  components: LayoutComponent[];
}

export interface DesignInput {
  prompt: string;
  layout: Layout;
}

export interface PlanEntry {
  kind: string;
  content_hint: string;
}

export interface ThemeDescription {
  theme_color: string;
  primary_color: string;
  app_category: string;
  theme_text: string;
  component_plan: PlanEntry[];
}

export interface RasterDoc {
  width: number;
  height: number;
  png_base64: string;
}

export interface ThemePackage {
  description: ThemeDescription;
  theme_image: RasterDoc | null;
  prompt_used: {
    text: string;
    in_p: string;
    in_l_serialized: string;
    refer: string[];
    p_theme: string;
  } | null;
}

export type ContentPayload =
  | { text: string }
  | { image: RasterDoc; prompt_used: string }
  | { icon_id: string; svg: string; phrase: string }
  | { fill: string };

export interface ComponentContent {
  component_index: number;
  kind: "text" | "image" | "icon" | "color_fill";
  payload: ContentPayload;
}

export interface SubModuleCall {
  component_index: number;
  component_type: ComponentTypeLabel;
  module: string;
  prompt: string;
}

export interface Trace {
  theme: ThemePackage;
  calls: SubModuleCall[];
  results: ComponentContent[];
  cache_entries: string[];
  backend_call_counts: Record<string, number>;
  warnings: string[];
}

export interface Project {
  id: string;
  input: DesignInput;
  trace: Trace | null;
  created: number;
  updated: number;
  revision: number;
}

export interface ProjectSummary {
  id: string;
  revision: number;
  updated: number;
  prompt: string;
  has_trace: boolean;
}
