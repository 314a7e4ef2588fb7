import { describe, expect, it, vi } from "vitest";

import { ApiError, WorkbenchApi } from "../src/api";

function fetchStub(status: number, body: unknown) {
  return vi.fn(async (url: RequestInfo | URL, init?: RequestInit) => {
    return {
      ok: status >= 200 && status < 300,
      status,
      text: async () => (body === undefined ? "" : JSON.stringify(body)),
    } as Response;
  });
}

describe("WorkbenchApi", () => {
  it("posts scenario configs to /v1/sessions", async () => {
    const stub = fetchStub(201, { session_id: "s1", product: "kettle", validation: [], nodes: {}, scenario_evidence: {} });
    const api = new WorkbenchApi("http://svc", stub as unknown as typeof fetch);
    const info = await api.createSession({ product: "kettle" });
    expect(info.session_id).toBe("s1");
    const [url, init] = stub.mock.calls[0]!;
    expect(url).toBe("http://svc/v1/sessions");
    expect(init?.method).toBe("POST");
    expect(JSON.parse(init?.body as string)).toEqual({ product: "kettle" });
  });

  it("encodes posterior queries as a nodes parameter", async () => {
    const stub = fetchStub(200, { posteriors: [] });
    const api = new WorkbenchApi("", stub as unknown as typeof fetch);
    await api.getPosteriors("s1", ["p_major_injury", "risk_level"]);
    const [url] = stub.mock.calls[0]!;
    expect(url).toBe("/v1/sessions/s1/posteriors?nodes=p_major_injury,risk_level");
  });

  it("raises ApiError with the service detail on failures", async () => {
    const stub = fetchStub(409, { detail: "evidence has (near-)zero probability" });
    const api = new WorkbenchApi("", stub as unknown as typeof fetch);
    await expect(api.putEvidence("s1", { x: 1 })).rejects.toMatchObject({
      status: 409,
      detail: expect.stringContaining("zero probability"),
    });
    await expect(api.putEvidence("s1", { x: 1 })).rejects.toBeInstanceOf(ApiError);
  });

  it("treats 204 as a void response", async () => {
    const stub = fetchStub(204, undefined);
    const api = new WorkbenchApi("", stub as unknown as typeof fetch);
    await expect(api.deleteSession("s1")).resolves.toBeUndefined();
  });
});
