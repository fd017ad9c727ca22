/** Thin typed client over the service API. The studio holds no authoritative
 * state: every view is rebuilt from these responses. */

import type {
  DiffResponse,
  ExecutionLogObj,
  MashupAliasObj,
  MashupObj,
  OpObj,
  PackageObj,
  TreeResponse,
  ValueObj,
  WorkflowResponse,
} from "./types.js";

export class ApiError extends Error {
  constructor(
    readonly status: number,
    readonly code: string,
    readonly detail: string,
  ) {
    super(`${code}: ${detail}`);
  }
}

export type FetchLike = (url: string, init?: RequestInit) => Promise<Response>;

export interface OverrideObj {
  module_id: number;
  parameter: string;
  value: ValueObj;
}

export class ApiClient {
  /** Number of POST /api/actions calls made; one user gesture must cost
   * exactly one. */
  actionPosts = 0;

  constructor(
    private readonly base: string = "",
    private readonly fetchFn: FetchLike = (url, init) => fetch(url, init),
  ) {}

  private async request<T>(method: string, path: string, body?: unknown): Promise<T> {
    const init: RequestInit = { method };
    if (body !== undefined) {
      init.headers = { "content-type": "application/json" };
      init.body = JSON.stringify(body);
    }
    const response = await this.fetchFn(this.base + path, init);
    if (!response.ok) {
      let code = `HTTP_${response.status}`;
      let detail = response.statusText;
      try {
        const parsed = (await response.json()) as { error?: string; detail?: string };
        code = parsed.error ?? code;
        detail = parsed.detail ?? detail;
      } catch {
        // non-JSON error body; keep the status fallback
      }
      throw new ApiError(response.status, code, detail);
    }
    return (await response.json()) as T;
  }

  tree(): Promise<TreeResponse> {
    return this.request("GET", "/api/tree");
  }

  workflow(version: number): Promise<WorkflowResponse> {
    return this.request("GET", `/api/workflow/${version}`);
  }

  packages(): Promise<{ packages: PackageObj[] }> {
    return this.request("GET", "/api/packages");
  }

  postAction(parent: number, ops: OpObj[], note?: string): Promise<{ version: number }> {
    this.actionPosts += 1;
    const payload: Record<string, unknown> = { parent, ops };
    if (note !== undefined) payload.note = note;
    return this.request("POST", "/api/actions", payload);
  }

  tag(version: number, name: string): Promise<unknown> {
    return this.request("POST", "/api/tags", { version, name });
  }

  annotate(version: number, key: string, value: string): Promise<unknown> {
    return this.request("POST", "/api/annotations", { version, key, value });
  }

  diff(from: number, to: number): Promise<DiffResponse> {
    return this.request("GET", `/api/diff?from=${from}&to=${to}`);
  }

  startExecution(version: number, overrides?: OverrideObj[]): Promise<{ exec_id: string }> {
    const payload: Record<string, unknown> = { version };
    if (overrides && overrides.length > 0) payload.overrides = overrides;
    return this.request("POST", "/api/executions", payload);
  }

  execution(execId: string): Promise<ExecutionLogObj> {
    return this.request("GET", `/api/executions/${execId}`);
  }

  executions(version?: number): Promise<{ executions: ExecutionLogObj[] }> {
    const query = version === undefined ? "" : `?version=${version}`;
    return this.request("GET", `/api/executions${query}`);
  }

  mashups(): Promise<{ mashups: MashupObj[] }> {
    return this.request("GET", "/api/mashups");
  }

  createMashup(version: number, title: string, aliases: MashupAliasObj[]): Promise<{ mashup_id: string }> {
    return this.request("POST", "/api/mashups", { version, title, aliases });
  }

  runMashup(mashupId: string, bindings: Record<string, ValueObj>): Promise<ExecutionLogObj> {
    return this.request("POST", `/api/mashups/${mashupId}/run`, { bindings });
  }

  upgrade(version: number, apply: boolean, allowPartial = false): Promise<{ version?: number; plan: unknown }> {
    return this.request("POST", "/api/upgrade", { version, apply, allow_partial: allowPartial });
  }

  dataUrl(hash: string): string {
    return `${this.base}/api/data/${hash}`;
  }
}
