/** Pattern view scene: one row per brushed image with 16 relevance heatmaps,
 * signed contribution bars, a waterfall, and any what-if overlay.
 *
 * Bar values and waterfall steps are pass-throughs of the contribution
 * payload; the only client-side arithmetic is the running total.
 */

import { classColor, correctnessColor, FAKE_ORANGE, REAL_BLUE } from "../colors";
import type {
  ContributionPayload,
  PointPayload,
  WhatIfPayload,
} from "../types";

export interface HeatmapRef {
  dim: number;
  url: string;
}

export interface ContributionBar {
  dim: number;
  value: number; // signed c_i straight from the payload
  length: number; // |c_i|, relative bar extent in [0, 1]
  color: string; // orange toward fake, blue toward real
}

export interface WaterfallStep {
  dim: number;
  value: number;
  start: number; // cumulative before this dimension
  end: number; // cumulative after
}

export interface WhatIfOverlay {
  delta: number[];
  newLabel: number;
  oldLabel: number;
  newProbFake: number;
  epsilon: number;
}

export interface PatternRow {
  imageId: string;
  truthColor: string;
  shadowColor: string;
  probFake: number;
  predictedLabel: number;
  heatmaps: HeatmapRef[];
  bars: ContributionBar[];
  waterfall: WaterfallStep[];
  waterfallTotal: number;
  lowMagnitude: boolean;
  whatIf: WhatIfOverlay | null;
}

export function patternRow(
  point: PointPayload,
  contribution: ContributionPayload,
  whatIf: WhatIfPayload | null,
  relevanceUrl: (imageId: string, dim: number) => string,
): PatternRow {
  const bars: ContributionBar[] = contribution.c.map((value, i) => ({
    dim: i + 1,
    value,
    length: Math.abs(value),
    color: value > 0 ? FAKE_ORANGE : REAL_BLUE,
  }));
  const waterfall: WaterfallStep[] = [];
  let running = 0;
  contribution.c.forEach((value, i) => {
    waterfall.push({ dim: i + 1, value, start: running, end: running + value });
    running += value;
  });
  return {
    imageId: point.image_id,
    truthColor: classColor(point.label),
    shadowColor: correctnessColor(point.predicted === point.label),
    probFake: point.prob_fake,
    predictedLabel: point.predicted,
    heatmaps: contribution.c.map((_, i) => ({
      dim: i + 1,
      url: relevanceUrl(point.image_id, i + 1),
    })),
    bars,
    waterfall,
    waterfallTotal: running,
    lowMagnitude: contribution.low_magnitude,
    whatIf: whatIf
      ? {
          delta: whatIf.delta,
          newLabel: whatIf.new_prediction.label,
          oldLabel: whatIf.old_prediction.label,
          newProbFake: whatIf.new_prediction.prob_fake,
          epsilon: whatIf.epsilon,
        }
      : null,
  };
}

export function patternViewScene(
  brushed: string[],
  pointsById: Map<string, PointPayload>,
  contributions: Record<string, ContributionPayload>,
  whatIf: Record<string, WhatIfPayload>,
  relevanceUrl: (imageId: string, dim: number) => string,
): PatternRow[] {
  const rows: PatternRow[] = [];
  for (const imageId of brushed) {
    const point = pointsById.get(imageId);
    const contribution = contributions[imageId];
    if (!point || !contribution) {
      continue; // still loading; renderer shows a spinner row
    }
    rows.push(patternRow(point, contribution, whatIf[imageId] ?? null, relevanceUrl));
  }
  return rows;
}
