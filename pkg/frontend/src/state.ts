/** Workbench session state: server-acknowledged evidence, posterior cache,
 * pinned report snapshots, and a queue that keeps at most one evidence
 * mutation in flight per session. */

import {
  EvidenceValue,
  PosteriorPayload,
  ReportPayload,
  SessionInfo,
  SpaceDescriptor,
  WorkbenchApi,
} from "./api";

export interface PinnedReport {
  label: string;
  takenAt: string;
  report: ReportPayload;
}

export const MAX_PINS = 3;

function deepFreeze<T>(value: T): T {
  if (value && typeof value === "object") {
    for (const key of Object.keys(value as object)) {
      deepFreeze((value as Record<string, unknown>)[key]);
    }
    Object.freeze(value);
  }
  return value;
}

export class WorkbenchSession {
  readonly sessionId: string;
  readonly product: string;
  readonly nodes: Record<string, SpaceDescriptor>;
  /** Evidence the server has acknowledged; the panel renders exactly this. */
  evidence: Record<string, EvidenceValue | number | string | boolean> = {};
  posteriors: Map<string, PosteriorPayload> = new Map();
  report: ReportPayload | null = null;
  pins: PinnedReport[] = [];

  private mutationQueue: Promise<unknown> = Promise.resolve();

  constructor(
    private api: WorkbenchApi,
    info: SessionInfo,
  ) {
    this.sessionId = info.session_id;
    this.product = info.product;
    this.nodes = info.nodes;
  }

  static async create(api: WorkbenchApi, config: unknown): Promise<WorkbenchSession> {
    const info = await api.createSession(config);
    return new WorkbenchSession(api, info);
  }

  /** Serialize evidence mutations: a second call waits for the first. */
  setEvidence(values: Record<string, unknown>): Promise<{ affected: string[] }> {
    const task = this.mutationQueue.then(async () => {
      const ack = await this.api.putEvidence(this.sessionId, values);
      for (const [node, value] of Object.entries(values)) {
        if (value === null || value === undefined) {
          delete this.evidence[node];
        } else {
          this.evidence[node] = value as EvidenceValue;
        }
      }
      this.report = null;
      return ack;
    });
    // keep the chain alive even when a mutation is rejected
    this.mutationQueue = task.catch(() => undefined);
    return task;
  }

  async refreshPosteriors(nodes: string[]): Promise<PosteriorPayload[]> {
    const { posteriors } = await this.api.getPosteriors(this.sessionId, nodes);
    for (const p of posteriors) {
      this.posteriors.set(p.node, p);
    }
    return posteriors;
  }

  async refreshReport(): Promise<ReportPayload> {
    this.report = await this.api.getReport(this.sessionId);
    return this.report;
  }

  /** Snapshot the current report; the copy is frozen so later session
   * mutations can never leak into a pinned comparison. */
  pinCurrentReport(label: string): PinnedReport {
    if (!this.report) {
      throw new Error("nothing to pin: no report loaded");
    }
    if (this.pins.length >= MAX_PINS) {
      throw new Error(`at most ${MAX_PINS} pinned reports`);
    }
    const snapshot: PinnedReport = {
      label,
      takenAt: new Date().toISOString(),
      report: deepFreeze(structuredClone(this.report)),
    };
    this.pins = [...this.pins, snapshot];
    return snapshot;
  }

  unpin(index: number): void {
    this.pins = this.pins.filter((_, i) => i !== index);
  }

  async close(): Promise<void> {
    await this.api.deleteSession(this.sessionId);
  }
}
