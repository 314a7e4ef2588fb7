// @vitest-environment node
/**
 * End-to-end round trips against the real service (B1/B2).
 *
 * Spawns `python3 -m riskbn.cli serve` on a private port; set
 * RISKBN_INTEGRATION=1 to enable (`npm run test:integration`).  Runs in the
 * node environment so `fetch` reaches the real socket; the chart assertions
 * get an explicit DOM from happy-dom.
 */

import { spawn, ChildProcess } from "node:child_process";
import { Window } from "happy-dom";
import { afterAll, beforeAll, describe, expect, it } from "vitest";

import { WorkbenchApi } from "../src/api";
import { renderPosterior } from "../src/charts";
import { WorkbenchSession } from "../src/state";

const dom = new Window();
(globalThis as Record<string, unknown>).document = dom.document;

const ENABLED = process.env.RISKBN_INTEGRATION === "1";
const PORT = 18431;
const BASE = `http://127.0.0.1:${PORT}`;

let server: ChildProcess | null = null;

async function waitForService(timeoutMs = 60_000): Promise<void> {
  const deadline = Date.now() + timeoutMs;
  while (Date.now() < deadline) {
    try {
      const r = await fetch(`${BASE}/v1/scenarios`);
      if (r.ok) return;
    } catch {
      // not up yet
    }
    await new Promise((resolve) => setTimeout(resolve, 250));
  }
  throw new Error("service did not come up");
}

describe.skipIf(!ENABLED)("workbench round trips against the live service", () => {
  const api = new WorkbenchApi(BASE);

  beforeAll(async () => {
    server = spawn("python3", ["-m", "riskbn.cli", "serve", "--addr", `127.0.0.1:${PORT}`], {
      stdio: "ignore",
    });
    await waitForService();
  });

  afterAll(() => {
    server?.kill();
  });

  it("B1: evidence panel value matches the report digit-for-digit", async () => {
    const doc = (await api.getScenario("kettle_s2")) as Record<string, any>;
    doc.population.observed_major_injury_instances = null; // the panel will set it
    const session = await WorkbenchSession.create(api, doc);

    await session.setEvidence({ major_injury_instances: 1 });
    const [posterior] = await session.refreshPosteriors(["p_major_injury"]);
    expect(posterior).toBeDefined();

    // what the chart displays
    const card = document.createElement("div");
    renderPosterior(card, posterior!);
    const shown = card.querySelector(".chart-mean")?.textContent?.replace(" mean ", "");
    expect(shown).toBeTruthy();

    // the service's canonical report text for the same quantity
    const raw = await fetch(`${BASE}/v1/sessions/${session.sessionId}/report`).then((r) => r.text());
    const match = raw.match(/"p_major_injury":\{"mean":([^,}]+)/);
    expect(match).toBeTruthy();
    expect(shown).toBe(match![1]);

    // and it is the scenario the study reports: a tiny major-injury probability
    expect(Number(match![1])).toBeLessThan(2e-4);
    await session.close();
  });

  it("B2: pinned report stays frozen while the live chart moves", async () => {
    const doc = await api.getScenario("kettle_s1");
    const session = await WorkbenchSession.create(api, doc);
    await session.refreshReport();
    const pin = session.pinCurrentReport("kettle S1 baseline");
    const pinnedRate = pin.report.posteriors.p_hazard_operational!.mean;
    const baselineRate = session.report!.posteriors.p_hazard_operational!.mean;

    await session.setEvidence({ testing_strategy: "poor" });
    await session.refreshReport();
    const liveRate = session.report!.posteriors.p_hazard_operational!.mean;

    expect(liveRate).toBeGreaterThan(baselineRate * 5); // live chart updated
    expect(pin.report.posteriors.p_hazard_operational!.mean).toBe(pinnedRate);
    expect(Object.isFrozen(pin.report)).toBe(true);

    await session.setEvidence({ testing_strategy: "typical-of-normal-use" });
    await session.refreshReport();
    const backRate = session.report!.posteriors.p_hazard_operational!.mean;
    expect(Math.abs(backRate - baselineRate) / baselineRate).toBeLessThan(0.05);
    expect(pin.report.posteriors.p_hazard_operational!.mean).toBe(pinnedRate);
    await session.close();
  });

  it("service rejects impossible evidence with 409 and the session survives", async () => {
    const doc = await api.getScenario("teddy_s1");
    const session = await WorkbenchSession.create(api, doc);
    await expect(
      session.setEvidence({ risk_tolerability: "very-high", recommendation: "yes" }),
    ).rejects.toMatchObject({ status: 409 });
    expect(session.evidence).toEqual({});
    await session.refreshReport();
    expect(session.report!.verdict.risk_level_mode).toBe("very-high");
    await session.close();
  });
});
