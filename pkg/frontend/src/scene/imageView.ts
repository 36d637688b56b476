/** Image view scene: the selected cell's images on their assigned grid slots,
 * with ground-truth circles, prediction shadows, and optional concept boxes. */

import { classColor, correctnessColor } from "../colors";
import type {
  ConceptsPayload,
  LayoutPayload,
  PointPayload,
} from "../types";

export interface ConceptBox {
  box: [number, number, number, number];
  dim: number;
  clusterId: number;
}

export interface ImageTile {
  imageId: string;
  gridRow: number;
  gridCol: number;
  truthColor: string; // top-right circle: blue real / orange fake
  shadowColor: string; // drop shadow: green correct / red incorrect
  correct: boolean;
  brushed: boolean;
  conceptBoxes: ConceptBox[];
}

export interface ImageViewScene {
  rows: number;
  cols: number;
  tiles: ImageTile[];
}

export function imageViewScene(
  layout: LayoutPayload | null,
  pointsById: Map<string, PointPayload>,
  brushed: string[],
  conceptsOn: boolean,
  concepts: ConceptsPayload | null,
): ImageViewScene | null {
  if (!layout) {
    return null;
  }
  const brushedSet = new Set(brushed);
  const boxesByImage = new Map<string, ConceptBox[]>();
  if (conceptsOn && concepts) {
    for (const cluster of concepts.clusters) {
      for (const member of cluster.members) {
        const list = boxesByImage.get(member.image_id) ?? [];
        list.push({ box: member.box, dim: member.dim, clusterId: cluster.cluster_id });
        boxesByImage.set(member.image_id, list);
      }
    }
  }
  const tiles: ImageTile[] = [];
  for (const [imageId, [gridRow, gridCol]] of Object.entries(layout.assignment)) {
    const point = pointsById.get(imageId);
    if (!point) {
      continue;
    }
    const correct = point.predicted === point.label;
    tiles.push({
      imageId,
      gridRow,
      gridCol,
      truthColor: classColor(point.label),
      shadowColor: correctnessColor(correct),
      correct,
      brushed: brushedSet.has(imageId),
      conceptBoxes: boxesByImage.get(imageId) ?? [],
    });
  }
  tiles.sort((a, b) => a.gridRow - b.gridRow || a.gridCol - b.gridCol);
  return { rows: layout.grid_rows, cols: layout.grid_cols, tiles };
}
