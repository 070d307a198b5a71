// Horizontal diverging bar chart for model weights. The entries and
// the highlight set come straight from the server packet; nothing is
// recomputed here.

import type { WeightEntry } from "./types.js";

const WIDTH = 320;
const ROW = 26;
const LABEL_W = 150;

export function weightChart(
  title: string,
  entries: WeightEntry[],
  highlight: Set<string>,
  selectLabel: string,
): SVGSVGElement {
  const svg = document.createElementNS("http://www.w3.org/2000/svg", "svg");
  const height = ROW * entries.length + 46;
  svg.setAttribute("viewBox", `0 0 ${WIDTH} ${height}`);
  svg.setAttribute("width", String(WIDTH));
  svg.setAttribute("height", String(height));
  svg.setAttribute("role", "img");
  svg.classList.add("weight-chart");

  const caption = text(WIDTH / 2, 16, title, "chart-title");
  caption.setAttribute("text-anchor", "middle");
  svg.appendChild(caption);

  const axis = text(WIDTH / 2, height - 8, `← ${selectLabel} less likely | more likely →`, "chart-axis");
  axis.setAttribute("text-anchor", "middle");
  svg.appendChild(axis);

  const maxAbs = Math.max(1e-9, ...entries.map(([, w]) => Math.abs(w)));
  const mid = LABEL_W + (WIDTH - LABEL_W) / 2;
  const half = (WIDTH - LABEL_W) / 2 - 6;

  const zero = document.createElementNS("http://www.w3.org/2000/svg", "line");
  zero.setAttribute("x1", String(mid));
  zero.setAttribute("x2", String(mid));
  zero.setAttribute("y1", "24");
  zero.setAttribute("y2", String(height - 22));
  zero.setAttribute("class", "chart-zero");
  svg.appendChild(zero);

  entries.forEach(([column, weight], i) => {
    const y = 30 + i * ROW;
    const hot = highlight.has(column);
    const label = text(LABEL_W - 6, y + 14, column, hot ? "chart-label hot" : "chart-label");
    label.setAttribute("text-anchor", "end");
    if (hot) label.setAttribute("font-weight", "bold");
    svg.appendChild(label);

    const bar = document.createElementNS("http://www.w3.org/2000/svg", "rect");
    const length = (Math.abs(weight) / maxAbs) * half;
    bar.setAttribute("x", String(weight >= 0 ? mid : mid - length));
    bar.setAttribute("y", String(y + 4));
    bar.setAttribute("width", String(Math.max(length, 0.5)));
    bar.setAttribute("height", "14");
    bar.setAttribute("class", hot ? "chart-bar hot" : "chart-bar");
    bar.setAttribute("data-column", column);
    bar.setAttribute("data-weight", String(weight));
    svg.appendChild(bar);
  });
  return svg;
}

function text(x: number, y: number, content: string, cls: string): SVGTextElement {
  const node = document.createElementNS("http://www.w3.org/2000/svg", "text");
  node.setAttribute("x", String(x));
  node.setAttribute("y", String(y));
  node.setAttribute("class", cls);
  node.textContent = content;
  return node;
}
