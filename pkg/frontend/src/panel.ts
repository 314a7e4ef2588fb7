/** Per-node evidence widgets: state pickers for discrete nodes, numeric and
 * interval inputs for binned ones.  The panel only ever renders nodes present
 * in the session's model, and it shows the server-acknowledged evidence. */

import { EvidenceValue, SpaceDescriptor } from "./api";

export type EvidenceHandler = (node: string, value: unknown) => void;

const GROUPS: Array<[string, string[]]> = [
  ["Testing", ["demands_tested", "hazards_observed", "p_hazard_testing", "testing_strategy"]],
  [
    "Manufacturer",
    [
      "years_in_operation",
      "country_safety_record",
      "customer_satisfaction",
      "design_change",
      "manufacturer_quality",
    ],
  ],
  [
    "Usage & exposure",
    [
      "particular_product_usage",
      "years_in_use",
      "number_of_demands",
      "effective_hazard_rate",
      "hazard_occurrence",
    ],
  ],
  [
    "Injuries & population",
    [
      "control_present",
      "p_major_injury",
      "p_minor_injury",
      "number_of_instances",
      "major_injury_instances",
      "minor_injury_instances",
    ],
  ],
  [
    "Verdict & perception",
    [
      "risk_level",
      "utility",
      "risk_tolerability",
      "recommendation",
      "media_stories",
      "warnings",
      "government_intervention_announced",
      "perception_change",
    ],
  ],
];

export function groupNodes(nodes: Record<string, SpaceDescriptor>): Array<[string, string[]]> {
  const seen = new Set<string>();
  const grouped: Array<[string, string[]]> = [];
  for (const [label, ids] of GROUPS) {
    const present = ids.filter((n) => n in nodes);
    present.forEach((n) => seen.add(n));
    if (present.length) grouped.push([label, present]);
  }
  const rest = Object.keys(nodes)
    .filter((n) => !seen.has(n))
    .sort();
  if (rest.length) grouped.push(["Other", rest]);
  return grouped;
}

export function describeEvidence(value: EvidenceValue | number | string | boolean): string {
  if (typeof value === "object" && value !== null) {
    if ("state" in value) return value.state;
    if ("point" in value) return String(value.point);
    if ("interval" in value) return `[${value.interval[0]}, ${value.interval[1]}]`;
  }
  return String(value);
}

export function buildNodeWidget(
  node: string,
  space: SpaceDescriptor,
  current: EvidenceValue | number | string | boolean | undefined,
  onSet: EvidenceHandler,
): HTMLElement {
  const row = document.createElement("div");
  row.className = "node-row";
  row.dataset.node = node;

  const name = document.createElement("label");
  name.textContent = node;
  name.className = "node-name";
  row.appendChild(name);

  if (space.kind === "discrete") {
    const select = document.createElement("select");
    select.className = "evidence-input";
    const blank = document.createElement("option");
    blank.value = "";
    blank.textContent = "(no evidence)";
    select.appendChild(blank);
    for (const state of space.states ?? []) {
      const opt = document.createElement("option");
      opt.value = state;
      opt.textContent = state;
      select.appendChild(opt);
    }
    if (current !== undefined) {
      select.value = describeEvidence(current);
    }
    select.addEventListener("change", () => {
      onSet(node, select.value === "" ? null : select.value);
    });
    row.appendChild(select);
  } else {
    const input = document.createElement("input");
    input.type = "text";
    input.className = "evidence-input";
    input.placeholder = space.integer ? "count or lo..hi" : "value or lo..hi";
    if (current !== undefined) {
      input.value = describeEvidence(current);
    }
    input.addEventListener("change", () => {
      const text = input.value.trim();
      if (!text) {
        onSet(node, null);
        return;
      }
      const range = text.match(/^(-?[\d.eE+-]+)\s*\.\.\s*(-?[\d.eE+-]+)$/);
      if (range) {
        onSet(node, { interval: [Number(range[1]), Number(range[2])] });
      } else {
        onSet(node, { point: Number(text) });
      }
    });
    row.appendChild(input);
  }
  return row;
}

export function buildPanel(
  container: HTMLElement,
  nodes: Record<string, SpaceDescriptor>,
  evidence: Record<string, EvidenceValue | number | string | boolean>,
  onSet: EvidenceHandler,
): void {
  container.replaceChildren();
  for (const [label, ids] of groupNodes(nodes)) {
    const section = document.createElement("details");
    section.open = label === "Testing" || label === "Injuries & population";
    const summary = document.createElement("summary");
    summary.textContent = label;
    section.appendChild(summary);
    for (const id of ids) {
      const space = nodes[id];
      if (!space) continue;
      section.appendChild(buildNodeWidget(id, space, evidence[id], onSet));
    }
    container.appendChild(section);
  }
}
