/** SVG renderers for posterior payloads.
 *
 * Discrete/ranked nodes get labelled bar charts; binned nodes get a density
 * over their bins with a log-scaled x-axis when the support is a probability
 * (this domain's posteriors concentrate near zero).  Values shown are taken
 * verbatim from the service payload.
 */

import { PosteriorPayload } from "./api";
import { formatProbability, toSig6 } from "./format";

const SVG_NS = "http://www.w3.org/2000/svg";
const WIDTH = 340;
const HEIGHT = 130;
const PAD = { left: 10, right: 10, top: 8, bottom: 22 };

function svgEl<K extends keyof SVGElementTagNameMap>(
  tag: K,
  attrs: Record<string, string | number>,
): SVGElementTagNameMap[K] {
  const el = document.createElementNS(SVG_NS, tag);
  for (const [k, v] of Object.entries(attrs)) {
    el.setAttribute(k, String(v));
  }
  return el;
}

export function renderPosterior(container: HTMLElement, payload: PosteriorPayload): void {
  container.replaceChildren();
  const title = document.createElement("div");
  title.className = "chart-title";
  title.textContent = payload.node;
  if (payload.moments) {
    const mean = document.createElement("span");
    mean.className = "chart-mean";
    mean.dataset.node = payload.node;
    mean.textContent = ` mean ${toSig6(payload.moments.mean)}`;
    title.appendChild(mean);
  }
  container.appendChild(title);
  const svg = svgEl("svg", { viewBox: `0 0 ${WIDTH} ${HEIGHT}`, class: "chart" });
  if (payload.space.kind === "discrete") {
    renderBars(svg, payload);
  } else {
    renderDensity(svg, payload);
  }
  container.appendChild(svg);
}

function renderBars(svg: SVGSVGElement, payload: PosteriorPayload): void {
  const states = payload.space.states ?? payload.mass.map((_, i) => String(i));
  const innerW = WIDTH - PAD.left - PAD.right;
  const innerH = HEIGHT - PAD.top - PAD.bottom;
  const barW = innerW / states.length;
  const maxMass = Math.max(...payload.mass, 1e-12);
  payload.mass.forEach((m, i) => {
    const h = (m / maxMass) * innerH;
    svg.appendChild(
      svgEl("rect", {
        x: PAD.left + i * barW + 2,
        y: PAD.top + innerH - h,
        width: Math.max(1, barW - 4),
        height: Math.max(0.5, h),
        class: "bar",
        "data-state": states[i] ?? "",
        "data-mass": m,
      }),
    );
    const label = svgEl("text", {
      x: PAD.left + i * barW + barW / 2,
      y: HEIGHT - 8,
      class: "bar-label",
      "text-anchor": "middle",
    });
    label.textContent = shorten(states[i] ?? "");
    svg.appendChild(label);
    const value = svgEl("text", {
      x: PAD.left + i * barW + barW / 2,
      y: Math.max(PAD.top + 9, PAD.top + innerH - h - 3),
      class: "bar-value",
      "text-anchor": "middle",
    });
    value.textContent = formatProbability(m);
    svg.appendChild(value);
  });
}

function renderDensity(svg: SVGSVGElement, payload: PosteriorPayload): void {
  const edges = payload.space.edges ?? [];
  if (edges.length < 2) return;
  const innerW = WIDTH - PAD.left - PAD.right;
  const innerH = HEIGHT - PAD.top - PAD.bottom;
  const lo = edges[0] ?? 0;
  const hi = edges[edges.length - 1] ?? 1;
  const useLog = lo >= 0 && hi <= 1.0000001 && !payload.space.integer;
  const floor = useLog ? Math.max(1e-7, edges.find((e) => e > 0) ?? 1e-7) : 0;
  const xOf = (v: number): number => {
    if (useLog) {
      const clamped = Math.max(v, floor);
      return ((Math.log10(clamped) - Math.log10(floor)) / (Math.log10(hi) - Math.log10(floor))) * innerW;
    }
    return ((v - lo) / (hi - lo)) * innerW;
  };
  const maxMass = Math.max(...payload.mass, 1e-12);
  payload.mass.forEach((m, i) => {
    if (m <= 0) return;
    const x0 = xOf(edges[i] ?? lo);
    const x1 = xOf(edges[i + 1] ?? hi);
    const h = (m / maxMass) * innerH;
    svg.appendChild(
      svgEl("rect", {
        x: PAD.left + x0,
        y: PAD.top + innerH - h,
        width: Math.max(0.5, x1 - x0 - 0.3),
        height: Math.max(0.5, h),
        class: "bin",
        "data-mass": m,
      }),
    );
  });
  const axis = svgEl("text", { x: PAD.left, y: HEIGHT - 8, class: "bar-label" });
  axis.textContent = useLog
    ? `log x: ${toSig6(floor)} .. ${toSig6(hi)}`
    : `${toSig6(lo)} .. ${toSig6(hi)}`;
  svg.appendChild(axis);
  if (payload.moments) {
    const mx = PAD.left + xOf(payload.moments.mean);
    svg.appendChild(
      svgEl("line", { x1: mx, x2: mx, y1: PAD.top, y2: PAD.top + innerH, class: "mean-line" }),
    );
  }
}

function shorten(label: string): string {
  return label.length > 9 ? label.replace("very-", "v").slice(0, 9) : label;
}
