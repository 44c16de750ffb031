/**
 * Thin client for the synthesis service.  The UI is a pure client: every
 * evaluation or synthesis result it displays comes from these calls.
 */
import { DemoJSON } from "./demo.js";

export interface SynthConfigJSON {
  depth?: number;
  limit?: number;
  timeout?: number;
  pruner?: string;
  seed?: number;
}

export interface WitnessJSON {
  rows: number[];
  cols: number[];
}

export interface SolutionJSON {
  rank: number;
  sql: string;
  query: unknown;
  witness: WitnessJSON;
  visited_at: number;
}

export interface ReportJSON {
  solutions: SolutionJSON[];
  queries_visited: number;
  queries_pruned: number;
  timed_out: boolean;
}

export interface FunctionsJSON {
  aggregate: string[];
  analytical: string[];
  arithmetic: string[];
}

export interface EvalResultJSON {
  columns: string[];
  rows: string[][];
}

export class ApiError extends Error {
  constructor(
    readonly status: number,
    message: string,
  ) {
    super(message);
  }
}

async function readError(res: Response): Promise<ApiError> {
  let detail = res.statusText;
  try {
    const body = await res.json();
    if (body && typeof body.detail === "string") detail = body.detail;
  } catch {
    /* non-JSON error body; keep the status text */
  }
  return new ApiError(res.status, detail);
}

export class ApiClient {
  /** Single in-flight synthesis request; re-submission is rejected until
   * the previous request resolves or is cancelled. */
  private inFlight: AbortController | null = null;

  constructor(readonly baseUrl: string = "") {}

  get busy(): boolean {
    return this.inFlight !== null;
  }

  cancel(): void {
    this.inFlight?.abort();
    this.inFlight = null;
  }

  async functions(): Promise<FunctionsJSON> {
    return this.getJson("/api/functions");
  }

  async health(): Promise<boolean> {
    try {
      const res = await fetch(`${this.baseUrl}/healthz`);
      return res.ok;
    } catch {
      return false;
    }
  }

  async synthesize(
    tables: Record<string, string>,
    demo: DemoJSON,
    config: SynthConfigJSON = {},
  ): Promise<ReportJSON> {
    if (this.inFlight) {
      throw new ApiError(0, "a synthesis request is already running");
    }
    this.inFlight = new AbortController();
    try {
      const res = await fetch(`${this.baseUrl}/api/synthesize`, {
        method: "POST",
        headers: { "content-type": "application/json" },
        body: JSON.stringify({ tables, demo, config }),
        signal: this.inFlight.signal,
      });
      if (!res.ok) throw await readError(res);
      return (await res.json()) as ReportJSON;
    } finally {
      this.inFlight = null;
    }
  }

  async evalQuery(
    tables: Record<string, string>,
    query: unknown,
  ): Promise<EvalResultJSON> {
    const res = await fetch(`${this.baseUrl}/api/eval`, {
      method: "POST",
      headers: { "content-type": "application/json" },
      body: JSON.stringify({ tables, query }),
    });
    if (!res.ok) throw await readError(res);
    return (await res.json()) as EvalResultJSON;
  }

  private async getJson<T>(path: string): Promise<T> {
    const res = await fetch(`${this.baseUrl}${path}`);
    if (!res.ok) throw await readError(res);
    return (await res.json()) as T;
  }
}
