// Thin typed client over the service HTTP API. All generation state lives
// server-side; this module only moves JSON back and forth.

import type {
  DesignInput,
  Project,
  ProjectSummary,
  ThemeDescription,
  Trace,
} from "./types.js";

export class ApiError extends Error {
  constructor(
    public status: number,
    public detail: string,
  ) {
    super(`HTTP ${status}: ${detail}`);
  }
}

async function parseError(res: Response): Promise<never> {
  let detail = res.statusText;
  try {
    const body = await res.json();
    if (typeof body?.detail === "string") detail = body.detail;
  } catch {
    // non-JSON error body, keep the status text
  }
  throw new ApiError(res.status, detail);
}

export interface ClientOptions {
  baseUrl: string;
  fetchFn?: typeof fetch;
}

export class ProtoflowClient {
  private base: string;
  private fetchFn: typeof fetch;

  constructor(opts: ClientOptions) {
    this.base = opts.baseUrl.replace(/\/+$/, "");
    this.fetchFn = opts.fetchFn ?? fetch;
  }

  private async request<T>(
    method: string,
    path: string,
    body?: unknown,
    idempotencyKey?: string,
  ): Promise<T> {
    const headers: Record<string, string> = {};
    if (body !== undefined) headers["Content-Type"] = "application/json";
    if (idempotencyKey) headers["Idempotency-Key"] = idempotencyKey;
    const res = await this.fetchFn(`${this.base}${path}`, {
      method,
      headers,
      body: body === undefined ? undefined : JSON.stringify(body),
    });
    if (!res.ok) await parseError(res);
    return (await res.json()) as T;
  }

  createProject(input: DesignInput): Promise<Project> {
    return this.request("POST", "/api/projects", input);
  }

  listProjects(): Promise<ProjectSummary[]> {
    return this.request("GET", "/api/projects");
  }

  getProject(id: string): Promise<Project> {
    return this.request("GET", `/api/projects/${id}`);
  }

  updateInput(id: string, input: DesignInput, revision: number): Promise<Project> {
    return this.request("PUT", `/api/projects/${id}`, { input, revision });
  }

  generate(id: string, revision: number, idempotencyKey?: string): Promise<Project> {
    return this.request("POST", `/api/projects/${id}/generate`, { revision }, idempotencyKey);
  }

  updateTheme(
    id: string,
    theme: ThemeDescription,
    revision: number,
    idempotencyKey?: string,
  ): Promise<Project> {
    return this.request("PUT", `/api/projects/${id}/theme`, { theme, revision }, idempotencyKey);
  }

  updateComponent(
    id: string,
    index: number,
    hint: string,
    revision: number,
    idempotencyKey?: string,
  ): Promise<Project> {
    return this.request(
      "PUT",
      `/api/projects/${id}/components/${index}`,
      { hint, revision },
      idempotencyKey,
    );
  }

  getTrace(id: string): Promise<Trace> {
    return this.request("GET", `/api/projects/${id}/trace`);
  }

  async exportSvg(id: string): Promise<string> {
    const res = await this.fetchFn(`${this.base}/api/projects/${id}/export.svg`);
    if (!res.ok) await parseError(res);
    return res.text();
  }

  exportJson(id: string): Promise<Record<string, unknown>> {
    return this.request("GET", `/api/projects/${id}/export.json`);
  }
}
