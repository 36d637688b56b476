/** SVG renderer for the representation overview (glyph field + pan/zoom). */

import * as d3 from "d3";

import { SELECTION_GOLD } from "../colors";
import { GLYPH_LEGEND, type OverviewScene, type PlacedGlyph } from "../scene/overview";
import type { GlyphSegment } from "../glyph";

export interface OverviewHandlers {
  onSelect: (row: number, col: number) => void;
  onAnnotate: (row: number, col: number) => void;
  onTransform: (t: { x: number; y: number; k: number }) => void;
}

const VIEW = 720;

function arcPath(seg: GlyphSegment, inner: number, outer: number): string {
  const gen = d3.arc()
    .innerRadius(inner)
    .outerRadius(outer)
    .startAngle(((seg.startAngle + 90) * Math.PI) / 180)
    .endAngle(((seg.endAngle + 90) * Math.PI) / 180);
  return gen({} as d3.DefaultArcObject) ?? "";
}

function sectorTitle(glyph: PlacedGlyph): string {
  const conf = (v: number | null) => (v === null ? "-" : v.toFixed(2));
  return glyph.outer
    .map((s) => `${s.kind}: ${s.count} (confidence ${conf(s.confidence)})`)
    .concat([`members: ${glyph.total}`])
    .join("\n");
}

export function renderOverview(
  container: HTMLElement,
  scene: OverviewScene,
  handlers: OverviewHandlers,
  showLegend: boolean,
): void {
  const root = d3.select(container);
  root.selectAll("*").remove();

  const svg = root.append("svg")
    .attr("viewBox", `0 0 ${VIEW} ${VIEW}`)
    .attr("class", "overview-svg");
  const stage = svg.append("g").attr("class", "stage");

  const zoom = d3.zoom<SVGSVGElement, unknown>()
    .scaleExtent([0.5, 12])
    .on("zoom", (event) => {
      stage.attr("transform", event.transform.toString());
      handlers.onTransform({ x: event.transform.x, y: event.transform.y, k: event.transform.k });
    });
  svg.call(zoom);

  const cell = stage.selectAll("g.glyph")
    .data(scene.glyphs)
    .enter()
    .append("g")
    .attr("class", "glyph")
    .attr("transform", (g) => `translate(${g.cx * VIEW}, ${g.cy * VIEW})`)
    .style("cursor", "pointer")
    .on("click", (_event, g) => handlers.onSelect(g.row, g.col))
    .on("contextmenu", (event, g) => {
      event.preventDefault();
      handlers.onAnnotate(g.row, g.col);
    });

  cell.append("title").text(sectorTitle);

  // selection highlight behind the glyph
  cell.filter((g) => g.selected)
    .append("rect")
    .attr("class", "selection-square")
    .attr("x", (g) => -g.radius - 4)
    .attr("y", (g) => -g.radius - 4)
    .attr("width", (g) => 2 * g.radius + 8)
    .attr("height", (g) => 2 * g.radius + 8)
    .attr("fill", "none")
    .attr("stroke", SELECTION_GOLD)
    .attr("stroke-width", 3);

  const layers: { key: "inner" | "middle" | "outer"; from: number; to: number }[] = [
    { key: "inner", from: 0.0, to: 0.55 },
    { key: "middle", from: 0.55, to: 0.8 },
    { key: "outer", from: 0.8, to: 1.0 },
  ];
  for (const layer of layers) {
    cell.selectAll(`path.${layer.key}`)
      .data((g) => g[layer.key].map((seg) => ({ seg, radius: g.radius })))
      .enter()
      .append("path")
      .attr("class", layer.key)
      .attr("d", (d) => arcPath(d.seg, d.radius * layer.from, d.radius * layer.to))
      .attr("fill", (d) => d.seg.color);
  }

  cell.filter((g) => g.annotated)
    .append("circle")
    .attr("class", "annotation-mark")
    .attr("cx", (g) => g.radius + 3)
    .attr("cy", (g) => -g.radius - 3)
    .attr("r", 3)
    .attr("fill", SELECTION_GOLD);

  if (showLegend) {
    const legend = root.append("div").attr("class", "legend");
    legend.selectAll("div")
      .data(GLYPH_LEGEND)
      .enter()
      .append("div")
      .text((d) => d.label);
  }
}
