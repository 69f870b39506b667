// DOM rendering. Every rendered number carries a data attribute with the raw
// API value so contract tests can prove nothing was recomputed client-side.

import type {
  Candidate,
  CommandEnvelope,
  RobotStateWire,
  SuggestionOutcome,
  ArenaBounds,
} from "./types.js";

export function formatScore(score: number): string {
  return score.toFixed(2);
}

export function renderContextCards(
  container: HTMLElement,
  candidates: Candidate[],
  onSelect: (candidate: Candidate) => void,
): void {
  container.replaceChildren();
  const heading = document.createElement("h3");
  heading.textContent = "Context Similarity Scores";
  container.appendChild(heading);
  for (const candidate of candidates) {
    const card = document.createElement("button");
    card.className = "context-card";
    card.dataset.index = String(candidate.index);
    card.dataset.score = String(candidate.score);
    card.dataset.suggestedModality = candidate.suggested_modality;

    const text = document.createElement("span");
    text.className = "context-text";
    text.textContent = candidate.text;

    const score = document.createElement("span");
    score.className = "context-score";
    score.textContent = formatScore(candidate.score);

    card.append(text, score);
    card.addEventListener("click", () => onSelect(candidate));
    container.appendChild(card);
  }
}

export function renderSuggestionBanner(
  banner: HTMLElement,
  suggestion: { suggested: string; reason?: string } | SuggestionOutcome | null,
): void {
  banner.replaceChildren();
  if (!suggestion) {
    banner.textContent = "No suggestion yet";
    return;
  }
  const label = document.createElement("span");
  label.className = "suggested-modality";
  label.dataset.modality = suggestion.suggested;
  label.textContent = `Suggested modality: ${suggestion.suggested}`;
  banner.appendChild(label);
  if ("overridden" in suggestion && suggestion.overridden) {
    const mark = document.createElement("span");
    mark.className = "overridden-mark";
    mark.textContent = "overridden";
    banner.appendChild(mark);
  }
}

export function renderRobotPicker(
  select: HTMLSelectElement,
  robots: RobotStateWire[],
): void {
  const current = select.value;
  select.replaceChildren();
  for (const robot of robots) {
    const option = document.createElement("option");
    option.value = robot.robot_id;
    option.textContent = `${robot.robot_id} (battery ${Math.floor(robot.battery)}%)`;
    select.appendChild(option);
  }
  if (current && robots.some((r) => r.robot_id === current)) select.value = current;
}

export function renderStatusBadges(
  container: HTMLElement,
  statuses: string[],
): void {
  container.replaceChildren();
  for (const status of statuses) {
    const badge = document.createElement("span");
    badge.className = `badge badge-${status.toLowerCase()}`;
    badge.textContent = status;
    container.appendChild(badge);
  }
}

export function renderPublishedLog(
  pane: HTMLElement,
  entries: CommandEnvelope[],
): void {
  pane.replaceChildren();
  for (const env of entries) {
    const row = document.createElement("div");
    row.className = "log-row";
    row.dataset.sequence = String(env.sequence);
    row.textContent = `#${env.sequence} -> ${env.target} [${env.modality}] ${env.command}`;
    pane.appendChild(row);
  }
}

export function renderReceivedLog(
  pane: HTMLElement,
  received: Record<string, CommandEnvelope[]>,
): void {
  pane.replaceChildren();
  for (const [robotId, entries] of Object.entries(received)) {
    const group = document.createElement("div");
    group.className = "log-group";
    const title = document.createElement("h4");
    title.textContent = robotId;
    group.appendChild(title);
    for (const env of entries) {
      const row = document.createElement("div");
      row.className = "log-row";
      row.dataset.sequence = String(env.sequence);
      row.textContent = `#${env.sequence} [${env.modality}] ${env.command}`;
      group.appendChild(row);
    }
    pane.appendChild(group);
  }
}

export interface MapProjection {
  toPixel(x: number, y: number): [number, number];
}

export function makeProjection(
  bounds: ArenaBounds,
  width: number,
  height: number,
): MapProjection {
  const [xMin, xMax] = bounds.x;
  const [yMin, yMax] = bounds.y;
  return {
    toPixel(x: number, y: number): [number, number] {
      const px = ((x - xMin) / (xMax - xMin)) * width;
      const py = height - ((y - yMin) / (yMax - yMin)) * height;
      return [px, py];
    },
  };
}

export function renderMap(
  svg: SVGElement,
  robots: RobotStateWire[],
  bounds: ArenaBounds,
): void {
  const width = Number(svg.getAttribute("width") ?? 320);
  const height = Number(svg.getAttribute("height") ?? 320);
  const projection = makeProjection(bounds, width, height);
  svg.replaceChildren();
  for (const robot of robots) {
    const [px, py] = projection.toPixel(robot.pose[0], robot.pose[1]);
    const ns = "http://www.w3.org/2000/svg";
    const group = document.createElementNS(ns, "g");
    group.setAttribute("data-robot", robot.robot_id);
    const dot = document.createElementNS(ns, "circle");
    dot.setAttribute("cx", String(px));
    dot.setAttribute("cy", String(py));
    dot.setAttribute("r", "7");
    dot.setAttribute("fill", "#2c7fb8");
    const heading = document.createElementNS(ns, "line");
    const hx = px + 12 * Math.cos(-robot.pose[2]);
    const hy = py + 12 * Math.sin(-robot.pose[2]);
    heading.setAttribute("x1", String(px));
    heading.setAttribute("y1", String(py));
    heading.setAttribute("x2", String(hx));
    heading.setAttribute("y2", String(hy));
    heading.setAttribute("stroke", "#2c7fb8");
    const label = document.createElementNS(ns, "text");
    label.setAttribute("x", String(px + 10));
    label.setAttribute("y", String(py - 10));
    label.setAttribute("font-size", "11");
    label.textContent = `${robot.robot_id} ${Math.floor(robot.battery)}%`;
    group.append(dot, heading, label);
    svg.appendChild(group);
  }
}
