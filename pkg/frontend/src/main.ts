/** Workbench wiring: load a scenario, edit evidence node by node, watch
 * posteriors update, pin reports for comparison, and check the RAPEX verdict
 * for the assessed major-injury probability. */

import { ApiError, WorkbenchApi } from "./api";
import { renderPosterior } from "./charts";
import { toSig6 } from "./format";
import { buildPanel } from "./panel";
import { WorkbenchSession } from "./state";

const CHART_NODES = [
  "p_hazard_testing",
  "p_hazard_operational",
  "hazard_occurrence",
  "p_major_injury",
  "p_minor_injury",
  "major_injury_instances",
  "minor_injury_instances",
  "risk_level",
  "risk_tolerability",
  "recommendation",
];

const api = new WorkbenchApi("");
let session: WorkbenchSession | null = null;

function el<T extends HTMLElement>(id: string): T {
  const found = document.getElementById(id);
  if (!found) throw new Error(`missing element #${id}`);
  return found as T;
}

function setStatus(text: string, isError = false): void {
  const status = el<HTMLDivElement>("status");
  status.textContent = text;
  status.className = isError ? "status error" : "status";
}

async function refreshAll(): Promise<void> {
  if (!session) return;
  const posteriors = await session.refreshPosteriors(CHART_NODES);
  const grid = el<HTMLDivElement>("charts");
  grid.replaceChildren();
  for (const p of posteriors) {
    const card = document.createElement("div");
    card.className = "chart-card";
    renderPosterior(card, p);
    grid.appendChild(card);
  }
  const report = await session.refreshReport();
  el<HTMLDivElement>("verdict").textContent =
    `risk level: ${report.verdict.risk_level_mode} | P(intervene) = ${toSig6(report.verdict.p_intervene)}` +
    ` | recommendation: ${report.verdict.intervention_recommended ? "intervene" : "no intervention"}` +
    ` | p_major mean: ${toSig6(report.posteriors.p_major_injury?.mean ?? NaN)}`;
  renderPins();
}

function renderPins(): void {
  const box = el<HTMLDivElement>("pins");
  box.replaceChildren();
  if (!session) return;
  session.pins.forEach((pin, i) => {
    const card = document.createElement("div");
    card.className = "pin-card";
    const head = document.createElement("div");
    head.className = "pin-head";
    head.textContent = `${pin.label} (${pin.takenAt.slice(11, 19)})`;
    const drop = document.createElement("button");
    drop.textContent = "unpin";
    drop.addEventListener("click", () => {
      session?.unpin(i);
      renderPins();
    });
    head.appendChild(drop);
    card.appendChild(head);
    const body = document.createElement("pre");
    body.textContent =
      `risk: ${pin.report.verdict.risk_level_mode}  p_intervene: ${toSig6(pin.report.verdict.p_intervene)}\n` +
      `p_major: ${toSig6(pin.report.posteriors.p_major_injury?.mean ?? NaN)}  ` +
      `counts: ${toSig6(pin.report.injury_counts.major_mean)} / ${toSig6(pin.report.injury_counts.minor_mean)}`;
    card.appendChild(body);
    box.appendChild(card);
  });
}

function rebuildPanel(): void {
  if (!session) return;
  buildPanel(el("panel"), session.nodes, session.evidence, (node, value) => {
    void onEvidence(node, value);
  });
}

async function onEvidence(node: string, value: unknown): Promise<void> {
  if (!session) return;
  setStatus(`updating ${node}...`);
  try {
    await session.setEvidence({ [node]: value });
    await refreshAll();
    setStatus(`evidence applied: ${node}`);
  } catch (err) {
    if (err instanceof ApiError && err.status === 409) {
      setStatus(`impossible evidence on ${node}: ${err.detail} (reverted)`, true);
    } else if (err instanceof ApiError) {
      setStatus(`rejected (${err.status}): ${err.detail}`, true);
    } else {
      setStatus(String(err), true);
    }
    rebuildPanel(); // revert the widget to acknowledged state
  }
}

async function loadScenario(doc: unknown, label: string): Promise<void> {
  setStatus(`loading ${label}...`);
  try {
    if (session) {
      void session.close().catch(() => undefined);
    }
    session = await WorkbenchSession.create(api, doc);
    el<HTMLSpanElement>("product").textContent = session.product;
    rebuildPanel();
    await refreshAll();
    setStatus(`loaded ${label}`);
  } catch (err) {
    session = null;
    if (err instanceof ApiError) {
      setStatus(`scenario rejected: ${err.detail}`, true);
    } else {
      setStatus(String(err), true);
    }
  }
}

async function init(): Promise<void> {
  const picker = el<HTMLSelectElement>("scenario-picker");
  try {
    const { scenarios } = await api.listScenarios();
    for (const name of scenarios) {
      const opt = document.createElement("option");
      opt.value = name;
      opt.textContent = name;
      picker.appendChild(opt);
    }
  } catch {
    setStatus("service unreachable; start it with: riskbn serve", true);
  }
  el<HTMLButtonElement>("load-bundled").addEventListener("click", () => {
    const name = picker.value;
    if (!name) return;
    void api.getScenario(name).then((doc) => loadScenario(doc, name));
  });
  el<HTMLInputElement>("scenario-file").addEventListener("change", (ev) => {
    const input = ev.target as HTMLInputElement;
    const file = input.files?.[0];
    if (!file) return;
    void file.text().then((text) => {
      try {
        const doc = JSON.parse(text);
        void loadScenario(doc, file.name);
      } catch {
        setStatus(`${file.name}: not valid JSON`, true);
      }
    });
  });
  el<HTMLButtonElement>("pin").addEventListener("click", () => {
    if (!session || !session.report) return;
    try {
      session.pinCurrentReport(session.product);
      renderPins();
    } catch (err) {
      setStatus(String(err), true);
    }
  });
  el<HTMLButtonElement>("clear-evidence").addEventListener("click", () => {
    if (!session) return;
    const cleared: Record<string, null> = {};
    for (const node of Object.keys(session.evidence)) {
      cleared[node] = null;
    }
    if (Object.keys(cleared).length === 0) return;
    void session
      .setEvidence(cleared)
      .then(() => {
        rebuildPanel();
        return refreshAll();
      })
      .then(() => setStatus("evidence cleared"))
      .catch((err) => setStatus(String(err), true));
  });
}

void init();
