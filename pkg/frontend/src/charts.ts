// SVG chart builders. Data in, elements out; no fetching, no math beyond
// coordinate scaling, so chart values stay traceable to API fields.

import type { AnalyticsSnapshot, Modality, ModuleName } from "./types.js";

export const MODULES: ModuleName[] = ["TP", "IR", "MS", "CG"];
export const MODALITIES: Modality[] = ["Text", "Voice", "Teleop"];

const MODULE_COLORS: Record<ModuleName, string> = {
  TP: "#1f77b4",
  IR: "#ff7f0e",
  MS: "#2ca02c",
  CG: "#d62728",
};

export interface ChartPoint {
  x: number; // interaction index, 1-based
  y: number; // score exactly as served
}

export function seriesPoints(series: number[]): ChartPoint[] {
  return series.map((y, i) => ({ x: i + 1, y }));
}

function svgElement(tag: string): SVGElement {
  return document.createElementNS("http://www.w3.org/2000/svg", tag) as SVGElement;
}

export interface LineChartOptions {
  width?: number;
  height?: number;
  yMin?: number;
  yMax?: number;
}

export function renderScoreChart(
  series: Record<ModuleName, number[]>,
  options: LineChartOptions = {},
): SVGElement {
  const width = options.width ?? 420;
  const height = options.height ?? 180;
  const yMin = options.yMin ?? 0.0;
  const yMax = options.yMax ?? 1.0;
  const pad = 24;
  const svg = svgElement("svg");
  svg.setAttribute("viewBox", `0 0 ${width} ${height}`);
  svg.setAttribute("class", "score-chart");
  const maxLen = Math.max(1, ...MODULES.map((m) => (series[m] ?? []).length));
  const xStep = maxLen > 1 ? (width - 2 * pad) / (maxLen - 1) : 0;
  const yScale = (value: number) =>
    height - pad - ((value - yMin) / (yMax - yMin)) * (height - 2 * pad);
  for (const module of MODULES) {
    const points = seriesPoints(series[module] ?? []);
    if (!points.length) continue;
    const polyline = svgElement("polyline");
    polyline.setAttribute(
      "points",
      points.map((p) => `${pad + (p.x - 1) * xStep},${yScale(p.y)}`).join(" "),
    );
    polyline.setAttribute("fill", "none");
    polyline.setAttribute("stroke", MODULE_COLORS[module]);
    polyline.setAttribute("stroke-width", "2");
    polyline.setAttribute("data-module", module);
    polyline.setAttribute("data-series", JSON.stringify(points.map((p) => p.y)));
    svg.appendChild(polyline);
    for (const p of points) {
      const circle = svgElement("circle");
      circle.setAttribute("cx", String(pad + (p.x - 1) * xStep));
      circle.setAttribute("cy", String(yScale(p.y)));
      circle.setAttribute("r", "3");
      circle.setAttribute("fill", MODULE_COLORS[module]);
      circle.setAttribute("data-module", module);
      circle.setAttribute("data-x", String(p.x));
      circle.setAttribute("data-y", String(p.y));
      svg.appendChild(circle);
    }
  }
  return svg;
}

export function renderModalityChart(
  counts: Record<Modality, number>,
  options: LineChartOptions = {},
): SVGElement {
  const width = options.width ?? 300;
  const height = options.height ?? 180;
  const pad = 24;
  const svg = svgElement("svg");
  svg.setAttribute("viewBox", `0 0 ${width} ${height}`);
  svg.setAttribute("class", "modality-chart");
  const maxCount = Math.max(1, ...MODALITIES.map((m) => counts[m] ?? 0));
  const barWidth = (width - 2 * pad) / MODALITIES.length - 12;
  MODALITIES.forEach((modality, i) => {
    const value = counts[modality] ?? 0;
    const barHeight = ((height - 2 * pad) * value) / maxCount;
    const rect = svgElement("rect");
    rect.setAttribute("x", String(pad + i * (barWidth + 12)));
    rect.setAttribute("y", String(height - pad - barHeight));
    rect.setAttribute("width", String(barWidth));
    rect.setAttribute("height", String(barHeight));
    rect.setAttribute("data-modality", modality);
    rect.setAttribute("data-count", String(value));
    rect.setAttribute("fill", "#4a6fa5");
    svg.appendChild(rect);
    const label = svgElement("text");
    label.setAttribute("x", String(pad + i * (barWidth + 12) + barWidth / 2));
    label.setAttribute("y", String(height - 6));
    label.setAttribute("text-anchor", "middle");
    label.setAttribute("font-size", "11");
    label.textContent = `${modality} (${value})`;
    svg.appendChild(label);
  });
  return svg;
}

export function renderCharts(container: HTMLElement, snapshot: AnalyticsSnapshot): void {
  container.replaceChildren(
    renderScoreChart(snapshot.score_series),
    renderModalityChart(snapshot.modality_counts),
  );
}
