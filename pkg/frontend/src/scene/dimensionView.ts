/** Dimension view scene: 16 value small-multiples in the API's divergence
 * order, contribution summaries under the active correctness filter, and
 * parallel-coordinate lines for the selected cell's members. */

import type {
  CellPayload,
  ContributionSummaryPayload,
  DimensionFilter,
  DimensionValuePayload,
  DimensionsPayload,
  PointPayload,
} from "../types";

export interface SmallMultiple {
  dim: number;
  kl: number | null;
  binEdges: number[];
  realHist: number[];
  fakeHist: number[];
  cellOverlay: { realHist: number[]; fakeHist: number[] } | null;
}

export interface ParallelLine {
  imageId: string;
  values: number[];
  correct: boolean;
}

export interface DimensionViewScene {
  multiples: SmallMultiple[]; // exactly in API order, no client-side reorder
  filter: DimensionFilter;
  contributions: ContributionSummaryPayload[] | null;
  emptyFilter: boolean; // filter produced no members -> placeholder
  parallel: ParallelLine[];
}

export function dimensionViewScene(
  globalDims: DimensionsPayload | null,
  cellDims: DimensionsPayload | null,
  filter: DimensionFilter,
  selectedCell: CellPayload | null,
  pointsById: Map<string, PointPayload>,
): DimensionViewScene | null {
  if (!globalDims) {
    return null;
  }
  const overlayByDim = new Map<number, DimensionValuePayload>();
  if (cellDims) {
    for (const value of cellDims.values) {
      overlayByDim.set(value.dim, value);
    }
  }
  const multiples: SmallMultiple[] = globalDims.values.map((value) => {
    const overlay = overlayByDim.get(value.dim);
    return {
      dim: value.dim,
      kl: value.kl,
      binEdges: value.bin_edges,
      realHist: value.real_hist,
      fakeHist: value.fake_hist,
      cellOverlay: overlay
        ? { realHist: overlay.real_hist, fakeHist: overlay.fake_hist }
        : null,
    };
  });

  const contributionSource = cellDims ?? globalDims;
  const contributions = contributionSource.contributions;

  const parallel: ParallelLine[] = [];
  if (selectedCell) {
    for (const imageId of selectedCell.members) {
      const point = pointsById.get(imageId);
      if (point) {
        parallel.push({
          imageId,
          values: point.values,
          correct: point.predicted === point.label,
        });
      }
    }
  }

  return {
    multiples,
    filter,
    contributions,
    emptyFilter: contributions === null,
    parallel,
  };
}
