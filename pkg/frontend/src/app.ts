// DOM wiring. All state transitions go through state.ts; all server calls go
// through api.ts. The preview always shows the server's SVG verbatim.

import { ApiError, ProtoflowClient } from "./api.js";
import {
  CanvasAction,
  EditorState,
  applyServerProject,
  canvasEdit,
  descriptionFromPanel,
  editComponentHint,
  editThemeField,
  initialState,
} from "./state.js";
import { changedGroups } from "./svgdiff.js";
import { COMPONENT_TYPES, ComponentTypeLabel, Project } from "./types.js";

const HANDLE = 10; // px corner hit area for resize

export class EditorApp {
  state: EditorState = initialState();
  private client: ProtoflowClient;
  private root: HTMLElement;
  private drag: { index: number; mode: "move" | "resize"; x: number; y: number } | null = null;

  constructor(root: HTMLElement, baseUrl: string) {
    this.root = root;
    this.client = new ProtoflowClient({ baseUrl });
    this.render();
  }

  private set(next: EditorState) {
    this.state = next;
    this.render();
  }

  private async withBusy(fn: () => Promise<void>) {
    if (this.state.busy) return; // single in-flight request per project
    this.set({ ...this.state, busy: true, lastError: null });
    try {
      await fn();
    } catch (err) {
      const msg = err instanceof ApiError ? err.message : String(err);
      this.set({ ...this.state, lastError: msg });
    } finally {
      this.set({ ...this.state, busy: false });
    }
  }

  dispatch(action: CanvasAction) {
    this.set(canvasEdit(this.state, action));
  }

  private async refreshPreview(project: Project) {
    const svg = project.trace ? await this.client.exportSvg(project.id) : null;
    const before = this.state.previewSvg;
    this.set(applyServerProject(this.state, project, svg));
    if (before && svg) {
      const changed = changedGroups(before, svg);
      for (const id of changed) {
        this.root.querySelector(`#preview #${id}`)?.classList.add("just-updated");
      }
    }
  }

  saveAndGenerate() {
    return this.withBusy(async () => {
      let project: Project;
      if (this.state.projectId === null) {
        project = await this.client.createProject({
          prompt: this.state.prompt,
          layout: this.state.draft,
        });
      } else {
        project = await this.client.updateInput(
          this.state.projectId,
          { prompt: this.state.prompt, layout: this.state.draft },
          this.state.revision,
        );
      }
      project = await this.client.generate(project.id, project.revision, crypto.randomUUID());
      await this.refreshPreview(project);
    });
  }

  applyTheme() {
    return this.withBusy(async () => {
      const { projectId, themePanel } = this.state;
      if (projectId === null || !themePanel) return;
      const trace = await this.client.getTrace(projectId);
      const theme = descriptionFromPanel(themePanel, trace.theme.description.component_plan);
      const project = await this.client.updateTheme(
        projectId,
        theme,
        this.state.revision,
        crypto.randomUUID(),
      );
      await this.refreshPreview(project);
    });
  }

  regenerateComponent(index: number) {
    return this.withBusy(async () => {
      const { projectId, themePanel } = this.state;
      if (projectId === null || !themePanel) return;
      const project = await this.client.updateComponent(
        projectId,
        index,
        themePanel.hints[index] ?? "",
        this.state.revision,
        crypto.randomUUID(),
      );
      await this.refreshPreview(project);
    });
  }

  exportFiles() {
    return this.withBusy(async () => {
      const id = this.state.projectId;
      if (id === null) return;
      const svg = await this.client.exportSvg(id);
      const doc = await this.client.exportJson(id);
      download(`${id}.svg`, svg, "image/svg+xml");
      download(`${id}.json`, JSON.stringify(doc, null, 2), "application/json");
    });
  }

  // ---- canvas mouse handling

  private onCanvasDown(ev: MouseEvent, scale: number) {
    const pos = localPos(ev, scale);
    const comps = this.state.draft.components;
    for (let i = comps.length - 1; i >= 0; i--) {
      const [x, y, w, h] = comps[i]!.bbox;
      if (pos.x >= x && pos.x <= x + w && pos.y >= y && pos.y <= y + h) {
        const resize = pos.x >= x + w - HANDLE && pos.y >= y + h - HANDLE;
        this.drag = { index: i, mode: resize ? "resize" : "move", x: pos.x, y: pos.y };
        this.set({ ...this.state, selected: i });
        return;
      }
    }
    const type = this.paletteSelection();
    this.dispatch({ op: "add", type, bbox: [pos.x, pos.y, 100, 40] });
  }

  private onCanvasMove(ev: MouseEvent, scale: number) {
    if (!this.drag) return;
    const pos = localPos(ev, scale);
    const { index, mode, x, y } = this.drag;
    const comp = this.state.draft.components[index];
    if (!comp) return;
    if (mode === "move") {
      this.dispatch({ op: "move", index, dx: pos.x - x, dy: pos.y - y });
    } else {
      const [bx, by, bw, bh] = comp.bbox;
      this.dispatch({
        op: "resize",
        index,
        bbox: [bx, by, bw + (pos.x - x), bh + (pos.y - y)],
      });
    }
    this.drag = { index, mode, x: pos.x, y: pos.y };
  }

  private paletteSelection(): ComponentTypeLabel {
    const sel = this.root.querySelector<HTMLSelectElement>("#palette");
    return (sel?.value as ComponentTypeLabel) ?? "Text";
  }

  // ---- rendering

  render() {
    const s = this.state;
    const scale = 0.75;
    this.root.innerHTML = `
      <div class="row">
        <section id="prompt-box">
          <input id="prompt" placeholder="design prompt" value="${escapeAttr(s.prompt)}">
          <select id="palette">${COMPONENT_TYPES.map((t) => `<option>${t}</option>`).join("")}</select>
          <button id="generate" ${s.busy ? "disabled" : ""}>Generate</button>
          <button id="export" ${s.busy || !s.projectId ? "disabled" : ""}>Export</button>
        </section>
        <section id="canvas" style="width:${s.draft.canvas.width * scale}px;height:${s.draft.canvas.height * scale}px">
          ${s.draft.components
            .map(
              (c, i) => `
            <div class="wire ${i === s.selected ? "selected" : ""}" data-index="${i}"
                 style="left:${c.bbox[0] * scale}px;top:${c.bbox[1] * scale}px;width:${c.bbox[2] * scale}px;height:${c.bbox[3] * scale}px">
              <span>${c.type}</span><button class="del" data-index="${i}">x</button>
            </div>`,
            )
            .join("")}
        </section>
        <section id="theme-panel">${this.renderThemePanel()}</section>
        <section id="preview">${s.previewSvg ?? "<em>no generation yet</em>"}</section>
        <p id="error">${s.lastError ? escapeHtml(s.lastError) : ""}</p>
      </div>`;

    this.root.querySelector("#prompt")?.addEventListener("change", (ev) => {
      this.state = { ...this.state, prompt: (ev.target as HTMLInputElement).value };
    });
    this.root.querySelector("#generate")?.addEventListener("click", () => this.saveAndGenerate());
    this.root.querySelector("#export")?.addEventListener("click", () => this.exportFiles());
    this.root.querySelector("#apply-theme")?.addEventListener("click", () => this.applyTheme());

    const canvas = this.root.querySelector<HTMLElement>("#canvas");
    canvas?.addEventListener("mousedown", (ev) => this.onCanvasDown(ev, scale));
    canvas?.addEventListener("mousemove", (ev) => this.onCanvasMove(ev, scale));
    canvas?.addEventListener("mouseup", () => (this.drag = null));
    for (const btn of this.root.querySelectorAll<HTMLElement>(".del")) {
      btn.addEventListener("mousedown", (ev) => {
        ev.stopPropagation();
        this.dispatch({ op: "delete", index: Number(btn.dataset.index) });
      });
    }
    for (const input of this.root.querySelectorAll<HTMLInputElement>(".theme-field")) {
      input.addEventListener("change", () => {
        this.state = editThemeField(this.state, input.dataset.field as never, input.value);
      });
    }
    for (const input of this.root.querySelectorAll<HTMLInputElement>(".hint-field")) {
      input.addEventListener("change", () => {
        this.state = editComponentHint(this.state, Number(input.dataset.index), input.value);
      });
    }
    for (const btn of this.root.querySelectorAll<HTMLElement>(".regen")) {
      btn.addEventListener("click", () => this.regenerateComponent(Number(btn.dataset.index)));
    }
  }

  private renderThemePanel(): string {
    const panel = this.state.themePanel;
    if (!panel) return "<em>generate to edit the theme</em>";
    const field = (name: string, value: string) =>
      `<label>${name}<input class="theme-field" data-field="${name}" value="${escapeAttr(value)}"></label>`;
    const hints = panel.hints
      .map(
        (hint, i) => `
        <li>
          <input class="hint-field" data-index="${i}" value="${escapeAttr(hint)}">
          <button class="regen" data-index="${i}" ${this.state.busy ? "disabled" : ""}>Update</button>
        </li>`,
      )
      .join("");
    return `
      ${field("theme_color", panel.theme_color)}
      ${field("primary_color", panel.primary_color)}
      ${field("app_category", panel.app_category)}
      ${field("theme_text", panel.theme_text)}
      <button id="apply-theme" ${this.state.busy ? "disabled" : ""}>Apply theme</button>
      <ol id="hints">${hints}</ol>`;
  }
}

function localPos(ev: MouseEvent, scale: number) {
  const rect = (ev.currentTarget as HTMLElement).getBoundingClientRect();
  return {
    x: Math.round((ev.clientX - rect.left) / scale),
    y: Math.round((ev.clientY - rect.top) / scale),
  };
}

function download(name: string, content: string, mime: string) {
  const url = URL.createObjectURL(new Blob([content], { type: mime }));
  const a = document.createElement("a");
  a.href = url;
  a.download = name;
  a.click();
  URL.revokeObjectURL(url);
}

function escapeHtml(s: string): string {
  return s.replace(/&/g, "&amp;").replace(/</g, "&lt;").replace(/>/g, "&gt;");
}

function escapeAttr(s: string): string {
  return escapeHtml(s).replace(/"/g, "&quot;");
}

export function mount(selector: string, baseUrl: string): EditorApp {
  const root = document.querySelector<HTMLElement>(selector);
  if (!root) throw new Error(`no element matches ${selector}`);
  return new EditorApp(root, baseUrl);
}
