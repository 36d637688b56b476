/** Representation overview scene: one glyph per nonempty cell. */

import { glyphSpec, type GlyphSpec } from "../glyph";
import type { AnnotationPayload, CellCoord, CellPayload } from "../types";

export interface PlacedGlyph extends GlyphSpec {
  cx: number; // [0, 1] view coordinates before pan/zoom
  cy: number;
  selected: boolean;
}

export interface OverviewScene {
  glyphs: PlacedGlyph[];
  gridM: number;
}

export function overviewScene(
  cells: CellPayload[],
  annotations: AnnotationPayload[],
  gridM: number,
  selected: CellCoord | null,
): OverviewScene {
  const annotatedCells = new Set(annotations.map((a) => `${a.cell[0]},${a.cell[1]}`));
  const maxCount = Math.max(1, ...cells.map((c) => c.members.length));
  const glyphs = cells.map((cell) => {
    const spec = glyphSpec(
      { ...cell, annotated: annotatedCells.has(`${cell.row},${cell.col}`) || cell.annotated },
      { maxCount },
    );
    return {
      ...spec,
      cx: (cell.col + 0.5) / gridM,
      cy: (cell.row + 0.5) / gridM,
      selected: selected?.row === cell.row && selected?.col === cell.col,
    };
  });
  return { glyphs, gridM };
}

/** Legend entries shared by the renderer and documentation. */
export const GLYPH_LEGEND = [
  { label: "outer arc: prediction result per confusion sector (green correct, red incorrect; paler = less confident)" },
  { label: "middle ring: correct vs incorrect composition" },
  { label: "inner disc: ground-truth class composition (blue real, orange fake)" },
  { label: "size: number of images in the cell" },
  { label: "gold square: selected cell; bookmark mark: annotated cell" },
];
