/** DOM renderer for the image view: tiles on their layout slots. */

import * as d3 from "d3";

import type { ImageViewScene } from "../scene/imageView";

export interface ImageViewHandlers {
  onBrush: (imageIds: string[]) => void;
  onToggleConcepts: () => void;
  imageUrl: (imageId: string) => string | null;
}

const TILE = 96;

export function renderImageView(
  container: HTMLElement,
  scene: ImageViewScene | null,
  conceptsOn: boolean,
  handlers: ImageViewHandlers,
): void {
  const root = d3.select(container);
  root.selectAll("*").remove();
  if (!scene) {
    root.append("div").attr("class", "placeholder")
      .text("select a cell in the overview");
    return;
  }

  const bar = root.append("div").attr("class", "toolbar");
  bar.append("button")
    .attr("class", conceptsOn ? "toggle on" : "toggle")
    .text(conceptsOn ? "Hide Concept" : "Show Concept")
    .on("click", () => handlers.onToggleConcepts());
  bar.append("button")
    .text("Brush all")
    .on("click", () => handlers.onBrush(scene.tiles.map((t) => t.imageId)));

  const grid = root.append("div")
    .attr("class", "image-grid")
    .style("display", "grid")
    .style("grid-template-columns", `repeat(${scene.cols}, ${TILE}px)`)
    .style("gap", "10px");

  const brushed = new Set(scene.tiles.filter((t) => t.brushed).map((t) => t.imageId));

  const tile = grid.selectAll("div.tile")
    .data(scene.tiles)
    .enter()
    .append("div")
    .attr("class", (t) => (t.brushed ? "tile brushed" : "tile"))
    .style("grid-row", (t) => String(t.gridRow + 1))
    .style("grid-column", (t) => String(t.gridCol + 1))
    .style("position", "relative")
    .style("width", `${TILE}px`)
    .style("height", `${TILE}px`)
    .style("box-shadow", (t) => `0 0 0 3px ${t.shadowColor}`)
    .on("click", (event: MouseEvent, t) => {
      // click selects; ctrl/shift-click extends the brush
      if (event.ctrlKey || event.shiftKey) {
        if (brushed.has(t.imageId)) {
          brushed.delete(t.imageId);
        } else {
          brushed.add(t.imageId);
        }
        handlers.onBrush([...brushed]);
      } else {
        handlers.onBrush([t.imageId]);
      }
    });

  tile.append("img")
    .attr("src", (t) => handlers.imageUrl(t.imageId) ?? "")
    .attr("alt", (t) => t.imageId)
    .style("width", "100%")
    .style("height", "100%")
    .style("object-fit", "cover");

  tile.append("span")
    .attr("class", "truth-circle")
    .style("position", "absolute")
    .style("top", "3px")
    .style("right", "3px")
    .style("width", "12px")
    .style("height", "12px")
    .style("border-radius", "50%")
    .style("background", (t) => t.truthColor);

  tile.each(function (t) {
    if (!t.conceptBoxes.length) {
      return;
    }
    const overlay = d3.select(this).append("svg")
      .attr("class", "concept-overlay")
      .attr("viewBox", "0 0 224 224")
      .style("position", "absolute")
      .style("inset", "0");
    overlay.selectAll("rect")
      .data(t.conceptBoxes)
      .enter()
      .append("rect")
      .attr("x", (b) => b.box[0])
      .attr("y", (b) => b.box[1])
      .attr("width", (b) => b.box[2] - b.box[0])
      .attr("height", (b) => b.box[3] - b.box[1])
      .attr("fill", "none")
      .attr("stroke", (b) => d3.schemeCategory10[b.clusterId % 10])
      .attr("stroke-width", 3)
      .append("title")
      .text((b) => `concept ${b.clusterId} (dimension ${b.dim})`);
  });
}
