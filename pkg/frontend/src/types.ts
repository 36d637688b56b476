/** Payload types mirroring the /api/v1 JSON wire format. */

export type Label = 0 | 1; // 0 real, 1 fake
export type SectorKind = "tp" | "tn" | "fp" | "fn";
export type DimensionFilter = "all" | "correct" | "incorrect";

export interface SnapshotInfo {
  snapshot_id: string;
  dataset: string;
  created_at: string;
  n_points: number;
  grid_m: number;
}

export interface PointPayload {
  image_id: string;
  x: number;
  y: number;
  label: Label;
  predicted: Label;
  prob_fake: number;
  logit: number;
  confidence: number;
  values: number[];
}

export interface CellStats {
  tp: number;
  tn: number;
  fp: number;
  fn: number;
  accuracy: number;
  sensitivity: number | null;
  specificity: number | null;
}

export interface CellPayload {
  row: number;
  col: number;
  members: string[];
  stats: CellStats;
  sector_confidence: Record<SectorKind, number | null>;
  annotated?: boolean;
}

export interface LayoutPayload {
  row: number;
  col: number;
  grid_rows: number;
  grid_cols: number;
  assignment: Record<string, [number, number]>;
}

export interface ConceptMember {
  image_id: string;
  box: [number, number, number, number];
  dim: number;
}

export interface ConceptClusterPayload {
  cluster_id: number;
  centroid: number[];
  members: ConceptMember[];
}

export interface ConceptsPayload {
  row: number;
  col: number;
  n_segments: number;
  flagged_fewer_than_three: boolean;
  clusters: ConceptClusterPayload[];
}

export interface ContributionPayload {
  image_id: string;
  s: number[];
  c: number[];
  logit: number;
  label: Label;
  low_magnitude: boolean;
}

export interface DimensionValuePayload {
  dim: number;
  bin_edges: number[];
  real_hist: number[];
  fake_hist: number[];
  kl: number | null;
  scope: string;
}

export interface ContributionSummaryPayload {
  dim: number;
  count: number;
  mean: number;
  q1: number;
  median: number;
  q3: number;
  kde: [number, number][];
}

export interface DimensionsPayload {
  scope: string;
  filter: string;
  values: DimensionValuePayload[];
  contributions: ContributionSummaryPayload[] | null;
}

export interface PredictionPayload {
  logit: number;
  prob_fake: number;
  label: Label;
  confidence: number;
}

export interface WhatIfPayload {
  image_id: string;
  mode: string;
  epsilon: number;
  delta: number[];
  new_values: number[];
  old_prediction: PredictionPayload;
  new_prediction: PredictionPayload;
}

export interface AnnotationPayload {
  annotation_id: string;
  cell: [number, number];
  text: string;
  author: string | null;
  created_at: string;
}

export interface CellCoord {
  row: number;
  col: number;
}
