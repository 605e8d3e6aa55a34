// End-to-end editor flow against the real service with its deterministic
// mock backends: layout -> generate -> theme edit (full regen) -> single
// image-hint edit (scoped regen) -> export.

import { type ChildProcess, spawn } from "node:child_process";
import { mkdtempSync } from "node:fs";
import { tmpdir } from "node:os";
import { dirname, join } from "node:path";
import { fileURLToPath } from "node:url";
import { afterAll, beforeAll, describe, expect, it } from "vitest";

import { ProtoflowClient } from "../src/api.js";
import { canvasEdit, editThemeField, initialState, themePanelFromDescription } from "../src/state.js";
import { changedGroups, extractGroups } from "../src/svgdiff.js";
import type { Project } from "../src/types.js";

const PORT = 8931;
const BASE = `http://127.0.0.1:${PORT}`;
const FIXTURES = join(dirname(fileURLToPath(import.meta.url)), "fixtures");

let server: ChildProcess;
const client = new ProtoflowClient({ baseUrl: BASE });

async function waitForServer(timeoutMs = 30000) {
  const deadline = Date.now() + timeoutMs;
  while (Date.now() < deadline) {
    try {
      const res = await fetch(`${BASE}/api/projects`);
      if (res.ok) return;
    } catch {
      // not up yet
    }
    await new Promise((r) => setTimeout(r, 250));
  }
  throw new Error("service did not come up");
}

beforeAll(async () => {
  server = spawn(
    "python3",
    [
      "-m", "protoflow.cli", "serve",
      "--port", String(PORT),
      "--data-dir", mkdtempSync(join(tmpdir(), "protoflow-e2e-")),
      "--kb-path", join(FIXTURES, "kb.jsonl"),
      "--icons", join(FIXTURES, "icons.jsonl"),
      "--seed", "0",
    ],
    { stdio: "ignore" },
  );
  await waitForServer();
});

afterAll(() => {
  server?.kill();
});

describe("editor end-to-end", () => {
  it("runs the full edit workflow against the service", async () => {
    // build the layout with canvas actions, as the UI would
    let state = initialState();
    state = canvasEdit(state, { op: "add", type: "Text", bbox: [10, 10, 340, 60] });
    state = canvasEdit(state, { op: "add", type: "Image", bbox: [10, 90, 340, 200] });
    state = canvasEdit(state, { op: "add", type: "Icon", bbox: [10, 310, 48, 48] });
    state = canvasEdit(state, { op: "add", type: "TextButton", bbox: [10, 380, 200, 48] });
    state.prompt = "a music player home screen";

    let project: Project = await client.createProject({
      prompt: state.prompt,
      layout: state.draft,
    });
    expect(project.trace).toBeNull();

    // full generation
    project = await client.generate(project.id, project.revision);
    expect(project.trace).not.toBeNull();
    const svg0 = await client.exportSvg(project.id);
    expect(svg0).toContain('viewBox="0 0 360 640"');
    expect(extractGroups(svg0).groups.size).toBe(4);

    // edit the theme color in the panel and apply: full regeneration
    let panel = themePanelFromDescription(project.trace!.theme.description);
    state = { ...state, themePanel: panel };
    state = editThemeField(state, "theme_color", "#102030");
    const plan = project.trace!.theme.description.component_plan;
    const theme = {
      ...project.trace!.theme.description,
      theme_color: state.themePanel!.theme_color,
      component_plan: plan,
    };
    const beforeCounts = project.trace!.backend_call_counts;
    project = await client.updateTheme(project.id, theme, project.revision);
    expect(project.trace!.theme.description.theme_color).toBe("#102030");
    // counts are per-operation: a full regen re-runs every sub-module but
    // never the theme-description text call
    expect(project.trace!.backend_call_counts.text).toBe(beforeCounts.text! - 1);
    expect(project.trace!.backend_call_counts.image).toBe(beforeCounts.image);
    const svg1 = await client.exportSvg(project.id);
    expect(svg1).not.toBe(svg0);
    expect(changedGroups(svg0, svg1).length).toBeGreaterThan(1);
    expect(extractGroups(svg1).header).toContain("#102030");

    // edit one image hint: only that group changes in the preview
    project = await client.updateComponent(project.id, 1, "a neon album cover", project.revision);
    const svg2 = await client.exportSvg(project.id);
    expect(changedGroups(svg1, svg2)).toEqual(["cmp-1"]);
    expect(extractGroups(svg2).header).toBe(extractGroups(svg1).header);

    // export: valid SVG and project documents
    const finalSvg = await client.exportSvg(project.id);
    expect(finalSvg.trimStart().startsWith("<")).toBe(true);
    expect(() => extractGroups(finalSvg)).not.toThrow(); // balanced markup
    const doc = await client.exportJson(project.id);
    expect(doc.version).toBe("protoflow-export-1");
    expect(doc).toHaveProperty("input");
    expect(doc).toHaveProperty("svg");
    expect(doc.svg).toBe(finalSvg);
  }, 60000);

  it("rejects stale revisions and replays idempotent generates", async () => {
    let state = initialState();
    state = canvasEdit(state, { op: "add", type: "Text", bbox: [0, 0, 100, 40] });
    const project = await client.createProject({ prompt: "tiny", layout: state.draft });

    const key = `e2e-${Date.now()}`;
    const first = await client.generate(project.id, project.revision, key);
    const replay = await client.generate(project.id, project.revision, key);
    expect(replay.revision).toBe(first.revision);

    await expect(client.generate(project.id, project.revision)).rejects.toMatchObject({
      status: 409,
    });
  }, 60000);

  it("surfaces validation errors from the service", async () => {
    await expect(
      client.createProject({
        prompt: "bad",
        layout: { canvas: { width: 100, height: 100 }, components: [{ type: "Text", bbox: [90, 90, 50, 50] }] },
      }),
    ).rejects.toMatchObject({ status: 422 });
  }, 60000);
});
