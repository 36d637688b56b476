/** DOM renderer for the dimension view: small multiples, contribution
 * violins, and parallel coordinates for the selected cell. */

import * as d3 from "d3";

import { CORRECT_GREEN, FAKE_ORANGE, INCORRECT_RED, REAL_BLUE } from "../colors";
import type { DimensionViewScene, SmallMultiple } from "../scene/dimensionView";
import type { DimensionFilter } from "../types";

export interface DimensionViewHandlers {
  onFilter: (filter: DimensionFilter) => void;
}

const MULT_W = 120;
const MULT_H = 56;

function histLine(hist: number[], w: number, h: number): string {
  const n = hist.length;
  const peak = Math.max(1e-12, ...hist);
  const x = (i: number) => (i / n) * w;
  const y = (v: number) => h - (v / peak) * (h - 4);
  let path = `M0,${y(hist[0])}`;
  for (let i = 0; i < n; i++) {
    path += `L${x(i)},${y(hist[i])}L${x(i + 1)},${y(hist[i])}`;
  }
  return path;
}

function renderMultiple(
  parent: d3.Selection<HTMLDivElement, unknown, null, undefined>,
  mult: SmallMultiple,
): void {
  const box = parent.append("div").attr("class", "multiple");
  box.append("div").attr("class", "caption")
    .text(`dim ${mult.dim}` + (mult.kl === null ? "" : ` · kl ${mult.kl.toFixed(3)}`));
  const svg = box.append("svg").attr("viewBox", `0 0 ${MULT_W} ${MULT_H}`);
  svg.append("path").attr("d", histLine(mult.realHist, MULT_W, MULT_H))
    .attr("fill", "none").attr("stroke", REAL_BLUE).attr("stroke-width", 1.5);
  svg.append("path").attr("d", histLine(mult.fakeHist, MULT_W, MULT_H))
    .attr("fill", "none").attr("stroke", FAKE_ORANGE).attr("stroke-width", 1.5);
  if (mult.cellOverlay) {
    svg.append("path").attr("d", histLine(mult.cellOverlay.realHist, MULT_W, MULT_H))
      .attr("fill", "none").attr("stroke", REAL_BLUE)
      .attr("stroke-width", 2.5).attr("opacity", 0.45);
    svg.append("path").attr("d", histLine(mult.cellOverlay.fakeHist, MULT_W, MULT_H))
      .attr("fill", "none").attr("stroke", FAKE_ORANGE)
      .attr("stroke-width", 2.5).attr("opacity", 0.45);
  }
}

export function renderDimensionView(
  container: HTMLElement,
  scene: DimensionViewScene | null,
  handlers: DimensionViewHandlers,
): void {
  const root = d3.select(container);
  root.selectAll("*").remove();
  if (!scene) {
    root.append("div").attr("class", "placeholder").text("loading dimensions");
    return;
  }

  const bar = root.append("div").attr("class", "toolbar");
  for (const f of ["all", "correct", "incorrect"] as DimensionFilter[]) {
    bar.append("button")
      .attr("class", scene.filter === f ? "filter on" : "filter")
      .text(`show ${f}`)
      .on("click", () => handlers.onFilter(f));
  }

  const multiples = root.append("div").attr("class", "multiples") as
    d3.Selection<HTMLDivElement, unknown, null, undefined>;
  for (const mult of scene.multiples) {
    renderMultiple(multiples, mult); // API order preserved
  }

  const contrib = root.append("div").attr("class", "contributions");
  if (scene.emptyFilter) {
    contrib.append("div").attr("class", "placeholder").text("no members");
  } else if (scene.contributions) {
    const svgW = scene.contributions.length * 26;
    const svg = contrib.append("svg").attr("viewBox", `0 0 ${svgW} 120`);
    const extent = Math.max(
      1e-9,
      ...scene.contributions.flatMap((s) => s.kde.map(([x]) => Math.abs(x))),
    );
    const y = d3.scaleLinear().domain([-extent, extent]).range([116, 4]);
    scene.contributions.forEach((summary, idx) => {
      const cx = idx * 26 + 13;
      const peak = Math.max(1e-12, ...summary.kde.map(([, d]) => d));
      const area = d3.area<[number, number]>()
        .x0(([, d]) => cx - (d / peak) * 10)
        .x1(([, d]) => cx + (d / peak) * 10)
        .y(([v]) => y(v));
      svg.append("path")
        .datum(summary.kde)
        .attr("d", area)
        .attr("fill", FAKE_ORANGE)
        .attr("opacity", 0.5)
        .append("title")
        .text(`dim ${summary.dim} · mean ${summary.mean.toFixed(4)} · ` +
              `q1 ${summary.q1.toFixed(4)} · median ${summary.median.toFixed(4)} · ` +
              `q3 ${summary.q3.toFixed(4)} · n ${summary.count}`);
      // boxplot marks revealed on hover via the title above
      svg.append("line")
        .attr("x1", cx - 6).attr("x2", cx + 6)
        .attr("y1", y(summary.median)).attr("y2", y(summary.median))
        .attr("stroke", "#333");
      svg.append("rect")
        .attr("x", cx - 3).attr("width", 6)
        .attr("y", Math.min(y(summary.q1), y(summary.q3)))
        .attr("height", Math.abs(y(summary.q1) - y(summary.q3)))
        .attr("fill", "none").attr("stroke", "#333");
    });
  }

  if (scene.parallel.length) {
    const pc = root.append("div").attr("class", "parallel");
    const dims = scene.parallel[0].values.length;
    const w = dims * 30;
    const values = scene.parallel.flatMap((l) => l.values);
    const y = d3.scaleLinear()
      .domain([Math.min(...values), Math.max(...values)])
      .range([96, 4]);
    const svg = pc.append("svg").attr("viewBox", `0 0 ${w} 100`);
    const line = d3.line<number>()
      .x((_, i) => i * 30 + 15)
      .y((v) => y(v));
    svg.selectAll("path")
      .data(scene.parallel)
      .enter()
      .append("path")
      .attr("d", (l) => line(l.values))
      .attr("fill", "none")
      .attr("stroke", (l) => (l.correct ? CORRECT_GREEN : INCORRECT_RED))
      .attr("opacity", 0.6)
      .append("title")
      .text((l) => l.imageId);
  }
}
