/** Cell glyph geometry: a three-layer pie summarizing one grid cell.
 *
 * All four confusion sectors share one angular scale: each sector spans
 * 360 * count / total degrees, in the fixed order tp, tn, fp, fn starting
 * at 12 o'clock. The outer layer colors each sector by prediction result
 * (correct green / incorrect red) with confidence-driven saturation; the
 * middle layer shows the correctness composition; the inner layer shows
 * the ground-truth class composition (real blue / fake orange). Radius
 * grows monotonically with the member count.
 */

import { applyConfidence, classColor, correctnessColor } from "./colors";
import type { CellPayload, SectorKind } from "./types";

export const SECTOR_ORDER: SectorKind[] = ["tp", "tn", "fp", "fn"];
const START_ANGLE = -90; // 12 o'clock, degrees, clockwise

export interface GlyphSegment {
  kind: string;
  count: number;
  startAngle: number;
  endAngle: number;
  color: string;
}

export interface GlyphSector extends GlyphSegment {
  kind: SectorKind;
  confidence: number | null;
}

export interface GlyphSpec {
  row: number;
  col: number;
  total: number;
  radius: number;
  annotated: boolean;
  outer: GlyphSector[];
  middle: GlyphSegment[];
  inner: GlyphSegment[];
}

export interface GlyphOptions {
  maxCount: number;
  minRadius?: number;
  maxRadius?: number;
}

function spans(parts: { kind: string; count: number; color: string }[], total: number): GlyphSegment[] {
  const out: GlyphSegment[] = [];
  let angle = START_ANGLE;
  for (const part of parts) {
    if (part.count === 0) {
      continue;
    }
    const sweep = (360 * part.count) / total;
    out.push({
      kind: part.kind,
      count: part.count,
      startAngle: angle,
      endAngle: angle + sweep,
      color: part.color,
    });
    angle += sweep;
  }
  return out;
}

export function glyphRadius(count: number, opts: GlyphOptions): number {
  const minR = opts.minRadius ?? 5;
  const maxR = opts.maxRadius ?? 22;
  if (opts.maxCount <= 0) {
    return minR;
  }
  // area-proportional growth, monotone in count
  return minR + (maxR - minR) * Math.sqrt(Math.min(1, count / opts.maxCount));
}

export function glyphSpec(cell: CellPayload, opts: GlyphOptions): GlyphSpec {
  const { tp, tn, fp, fn } = cell.stats;
  const total = tp + tn + fp + fn;
  const sectorCounts: { kind: SectorKind; count: number }[] = [
    { kind: "tp", count: tp },
    { kind: "tn", count: tn },
    { kind: "fp", count: fp },
    { kind: "fn", count: fn },
  ];

  const outer: GlyphSector[] = spans(
    sectorCounts.map(({ kind, count }) => ({
      kind,
      count,
      color: applyConfidence(
        correctnessColor(kind === "tp" || kind === "tn"),
        cell.sector_confidence[kind],
      ),
    })),
    total,
  ).map((seg) => ({
    ...seg,
    kind: seg.kind as SectorKind,
    confidence: cell.sector_confidence[seg.kind as SectorKind],
  }));

  const middle = spans(
    [
      { kind: "correct", count: tp + tn, color: correctnessColor(true) },
      { kind: "incorrect", count: fp + fn, color: correctnessColor(false) },
    ],
    total,
  );

  const inner = spans(
    [
      { kind: "real", count: tn + fp, color: classColor(0) },
      { kind: "fake", count: tp + fn, color: classColor(1) },
    ],
    total,
  );

  return {
    row: cell.row,
    col: cell.col,
    total,
    radius: glyphRadius(total, opts),
    annotated: cell.annotated ?? false,
    outer,
    middle,
    inner,
  };
}
