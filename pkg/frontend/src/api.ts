/** Typed client for the /v1 assessment API. The workbench never computes
 * probabilities itself; everything rendered comes from these payloads. */

export interface SpaceDescriptor {
  kind: "discrete" | "binned";
  states?: string[];
  integer?: boolean;
  edges?: number[];
}

export interface MomentsPayload {
  mean: number;
  variance: number;
  p5: number;
  p50: number;
  p95: number;
}

export interface PosteriorPayload {
  node: string;
  space: SpaceDescriptor;
  mass: number[];
  moments?: MomentsPayload;
  distribution?: Record<string, number>;
}

export interface SessionInfo {
  session_id: string;
  product: string;
  validation: string[];
  nodes: Record<string, SpaceDescriptor>;
  scenario_evidence: Record<string, EvidenceValue>;
}

export type EvidenceValue =
  | { state: string }
  | { point: number }
  | { interval: [number, number] };

export interface ReportPayload {
  product: string;
  posteriors: Record<string, MomentsPayload>;
  distributions: Record<string, Record<string, number>>;
  injury_counts: { major_mean: number; minor_mean: number };
  verdict: {
    risk_level_mode: string;
    p_intervene: number;
    intervention_recommended: boolean;
  };
  provenance: Record<string, unknown>;
  rapex_comparison?: Record<string, unknown>;
}

export class ApiError extends Error {
  constructor(
    public status: number,
    public detail: string,
  ) {
    super(`${status}: ${detail}`);
  }
}

type FetchLike = typeof fetch;

export class WorkbenchApi {
  constructor(
    private baseUrl: string = "",
    private fetchImpl: FetchLike = fetch,
  ) {}

  private async request<T>(method: string, path: string, body?: unknown): Promise<T> {
    const response = await this.fetchImpl(`${this.baseUrl}${path}`, {
      method,
      headers: body === undefined ? {} : { "content-type": "application/json" },
      body: body === undefined ? undefined : JSON.stringify(body),
    });
    if (response.status === 204) return undefined as T;
    const text = await response.text();
    const data = text ? JSON.parse(text) : {};
    if (!response.ok) {
      throw new ApiError(response.status, data.detail ?? text);
    }
    return data as T;
  }

  createSession(config: unknown): Promise<SessionInfo> {
    return this.request("POST", "/v1/sessions", config);
  }

  putEvidence(sessionId: string, evidence: Record<string, unknown>): Promise<{ affected: string[] }> {
    return this.request("PUT", `/v1/sessions/${sessionId}/evidence`, evidence);
  }

  getPosteriors(sessionId: string, nodes: string[]): Promise<{ posteriors: PosteriorPayload[] }> {
    const qs = nodes.length ? `?nodes=${nodes.join(",")}` : "";
    return this.request("GET", `/v1/sessions/${sessionId}/posteriors${qs}`);
  }

  getReport(sessionId: string): Promise<ReportPayload> {
    return this.request("GET", `/v1/sessions/${sessionId}/report`);
  }

  deleteSession(sessionId: string): Promise<void> {
    return this.request("DELETE", `/v1/sessions/${sessionId}`);
  }

  rapexAssess(body: unknown): Promise<Record<string, unknown>> {
    return this.request("POST", "/v1/rapex/assess", body);
  }

  listScenarios(): Promise<{ scenarios: string[] }> {
    return this.request("GET", "/v1/scenarios");
  }

  getScenario(name: string): Promise<Record<string, unknown>> {
    return this.request("GET", `/v1/scenarios/${name}`);
  }
}
