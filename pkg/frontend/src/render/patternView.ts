/** DOM renderer for the pattern view rows. */

import * as d3 from "d3";

import { FAKE_ORANGE, REAL_BLUE } from "../colors";
import type { PatternRow } from "../scene/patternView";

export interface PatternViewHandlers {
  onWhatIf: (imageId: string) => void;
  imageUrl: (imageId: string) => string | null;
}

const BAR_WIDTH = 9;
const CHART_H = 72;

function renderWaterfall(
  parent: d3.Selection<HTMLDivElement, PatternRow, null, undefined>,
  row: PatternRow,
  handlers: PatternViewHandlers,
): void {
  const wf = parent.append("div").attr("class", "waterfall");
  const head = wf.append("div").attr("class", "waterfall-head");
  head.append("span").text(`total ${row.waterfallTotal.toFixed(3)}`);
  head.append("button")
    .attr("class", "whatif-button")
    .text("what-if")
    .on("click", () => handlers.onWhatIf(row.imageId));

  const extent = Math.max(
    1e-9,
    ...row.waterfall.map((s) => Math.max(Math.abs(s.start), Math.abs(s.end))),
  );
  const y = d3.scaleLinear().domain([-extent, extent]).range([CHART_H, 0]);
  const svg = wf.append("svg")
    .attr("viewBox", `0 0 ${row.waterfall.length * BAR_WIDTH} ${CHART_H}`)
    .attr("class", "waterfall-svg");
  svg.append("line")
    .attr("x1", 0).attr("x2", row.waterfall.length * BAR_WIDTH)
    .attr("y1", y(0)).attr("y2", y(0))
    .attr("stroke", "#999");
  svg.selectAll("rect")
    .data(row.waterfall)
    .enter()
    .append("rect")
    .attr("x", (s) => (s.dim - 1) * BAR_WIDTH + 1)
    .attr("width", BAR_WIDTH - 2)
    .attr("y", (s) => Math.min(y(s.start), y(s.end)))
    .attr("height", (s) => Math.max(1, Math.abs(y(s.start) - y(s.end))))
    .attr("fill", (s) => (s.value > 0 ? FAKE_ORANGE : REAL_BLUE))
    .append("title")
    .text((s) => `dimension ${s.dim}: ${s.value.toFixed(4)} (running ${s.end.toFixed(4)})`);

  if (row.whatIf) {
    wf.append("div")
      .attr("class", "whatif-overlay")
      .text(
        `flip to ${row.whatIf.newLabel === 1 ? "fake" : "real"} ` +
        `(prob_fake ${row.whatIf.newProbFake.toFixed(3)}); largest change: dim ` +
        `${1 + row.whatIf.delta.reduce((best, v, i, arr) =>
          Math.abs(v) > Math.abs(arr[best]) ? i : best, 0)}`,
      );
  }
}

export function renderPatternView(
  container: HTMLElement,
  rows: PatternRow[],
  handlers: PatternViewHandlers,
): void {
  const root = d3.select(container);
  root.selectAll("*").remove();
  if (!rows.length) {
    root.append("div").attr("class", "placeholder")
      .text("brush images in the image view");
    return;
  }

  const rowSel = root.selectAll("div.pattern-row")
    .data(rows)
    .enter()
    .append("div")
    .attr("class", "pattern-row");

  rowSel.each(function (row) {
    const el = d3.select(this) as d3.Selection<HTMLDivElement, PatternRow, null, undefined>;

    const original = el.append("div").attr("class", "original");
    original.append("img")
      .attr("src", handlers.imageUrl(row.imageId) ?? "")
      .attr("alt", row.imageId)
      .style("box-shadow", `0 0 0 3px ${row.shadowColor}`);
    original.append("div").attr("class", "caption")
      .text(`${row.imageId} · p(fake) ${row.probFake.toFixed(3)}`);

    const maps = el.append("div").attr("class", "heatmaps");
    const cellSel = maps.selectAll("div.map")
      .data(row.heatmaps)
      .enter()
      .append("div")
      .attr("class", "map loading"); // spinner until the png arrives
    cellSel.append("img")
      .attr("src", (h) => h.url)
      .attr("alt", (h) => `relevance ${h.dim}`)
      .on("load", function () {
        (this as HTMLImageElement).parentElement?.classList.remove("loading");
      });
    cellSel.append("svg")
      .attr("class", "bar")
      .attr("viewBox", "0 0 100 10")
      .append("rect")
      .datum((h: { dim: number }) => row.bars[h.dim - 1])
      .attr("x", (b) => (b.value >= 0 ? 50 : 50 - 50 * b.length))
      .attr("width", (b) => Math.max(0.5, 50 * b.length))
      .attr("y", 1)
      .attr("height", 8)
      .attr("fill", (b) => b.color)
      .append("title")
      .text((b) => `c_${b.dim} = ${b.value.toFixed(4)}`);

    renderWaterfall(el, row, handlers);
  });
}
