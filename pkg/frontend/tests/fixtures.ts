/** Deterministic API fixtures and a recording in-memory client. */

import type { ApiClient } from "../src/api";
import type {
  AnnotationPayload,
  CellPayload,
  ConceptsPayload,
  ContributionPayload,
  DimensionFilter,
  DimensionsPayload,
  Label,
  LayoutPayload,
  PointPayload,
  SnapshotInfo,
  WhatIfPayload,
} from "../src/types";

/** Small deterministic generator (mulberry32). */
export function rng(seed: number): () => number {
  let a = seed >>> 0;
  return () => {
    a |= 0;
    a = (a + 0x6d2b79f5) | 0;
    let t = Math.imul(a ^ (a >>> 15), 1 | a);
    t = (t + Math.imul(t ^ (t >>> 7), 61 | t)) ^ t;
    return ((t ^ (t >>> 14)) >>> 0) / 4294967296;
  };
}

export function randomCell(seed: number): CellPayload {
  const next = rng(seed);
  const counts: number[] = Array.from({ length: 4 }, () => Math.floor(next() * 12));
  if (counts.reduce((a, b) => a + b, 0) === 0) {
    counts[Math.floor(next() * 4)] = 1 + Math.floor(next() * 5);
  }
  const [tp, tn, fp, fn] = counts;
  const total = tp + tn + fp + fn;
  const conf = () => 0.5 + next() * 0.5;
  return {
    row: Math.floor(next() * 30),
    col: Math.floor(next() * 30),
    members: Array.from({ length: total }, (_, i) => `img-${seed}-${i}`),
    stats: {
      tp, tn, fp, fn,
      accuracy: total ? (tp + tn) / total : 0,
      sensitivity: tp + fn ? tp / (tp + fn) : null,
      specificity: tn + fp ? tn / (tn + fp) : null,
    },
    sector_confidence: {
      tp: tp ? conf() : null,
      tn: tn ? conf() : null,
      fp: fp ? conf() : null,
      fn: fn ? conf() : null,
    },
  };
}

const DIMS = 16;

function contributionFor(imageId: string, seed: number, label: Label): ContributionPayload {
  const next = rng(seed);
  const s = Array.from({ length: DIMS }, () => next() * 2 - 1);
  const denom = s.reduce((acc, v) => acc + Math.abs(v), 0);
  return {
    image_id: imageId,
    s,
    c: s.map((v) => v / denom),
    logit: next() * 4 - 2,
    label,
    low_magnitude: false,
  };
}

export interface Fixture {
  info: SnapshotInfo;
  points: PointPayload[];
  cells: CellPayload[];
  layout: LayoutPayload;
  concepts: ConceptsPayload;
  contributions: Record<string, ContributionPayload>;
  global_dimensions: DimensionsPayload;
  cell_dimensions: DimensionsPayload;
  whatif: Record<string, WhatIfPayload>;
}

/** One snapshot with a 3-member focus cell at (4, 7) plus a second cell. */
export function makeFixture(): Fixture {
  const next = rng(99);
  const focusMembers = ["real/a.png", "fake/b.png", "fake/c.png"];
  const otherMembers = ["real/d.png", "real/e.png"];
  const mkPoint = (imageId: string, label: Label, predicted: Label): PointPayload => ({
    image_id: imageId,
    x: next(),
    y: next(),
    label,
    predicted,
    prob_fake: predicted === 1 ? 0.9 : 0.2,
    logit: predicted === 1 ? 2.197224577336219 : -1.3862943611198906,
    confidence: predicted === 1 ? 0.9 : 0.8,
    values: Array.from({ length: DIMS }, () => next() * 2 - 1),
  });
  const points = [
    mkPoint(focusMembers[0], 0, 0), // tn
    mkPoint(focusMembers[1], 1, 1), // tp
    mkPoint(focusMembers[2], 1, 0), // fn (deceptive)
    mkPoint(otherMembers[0], 0, 0),
    mkPoint(otherMembers[1], 0, 1), // fp
  ];
  const focusCell: CellPayload = {
    row: 4,
    col: 7,
    members: focusMembers,
    stats: { tp: 1, tn: 1, fp: 0, fn: 1, accuracy: 2 / 3, sensitivity: 0.5, specificity: 1 },
    sector_confidence: { tp: 0.9, tn: 0.8, fp: null, fn: 0.8 },
  };
  const otherCell: CellPayload = {
    row: 12,
    col: 2,
    members: otherMembers,
    stats: { tp: 0, tn: 1, fp: 1, fn: 0, accuracy: 0.5, sensitivity: null, specificity: 0.5 },
    sector_confidence: { tp: null, tn: 0.8, fp: 0.9, fn: null },
  };
  const layout: LayoutPayload = {
    row: 4,
    col: 7,
    grid_rows: 2,
    grid_cols: 2,
    assignment: {
      [focusMembers[0]]: [0, 0],
      [focusMembers[1]]: [0, 1],
      [focusMembers[2]]: [1, 0],
    },
  };
  const concepts: ConceptsPayload = {
    row: 4,
    col: 7,
    n_segments: 4,
    flagged_fewer_than_three: false,
    clusters: [
      {
        cluster_id: 0,
        centroid: Array(DIMS).fill(0.1),
        members: [
          { image_id: focusMembers[1], box: [10, 10, 60, 60], dim: 2 },
          { image_id: focusMembers[2], box: [80, 20, 140, 90], dim: 5 },
        ],
      },
      {
        cluster_id: 1,
        centroid: Array(DIMS).fill(-0.2),
        members: [{ image_id: focusMembers[0], box: [0, 0, 50, 50], dim: 1 }],
      },
      {
        cluster_id: 2,
        centroid: Array(DIMS).fill(0.4),
        members: [{ image_id: focusMembers[2], box: [150, 150, 200, 210], dim: 9 }],
      },
    ],
  };
  const contributions: Record<string, ContributionPayload> = {};
  points.forEach((p, i) => {
    contributions[p.image_id] = contributionFor(p.image_id, 1000 + i, p.predicted);
  });

  const mkDims = (scope: string): DimensionsPayload => ({
    scope,
    filter: "all",
    values: Array.from({ length: DIMS }, (_, i) => ({
      dim: ((i + 5) % DIMS) + 1, // deliberately not 1..16 order: API order rules
      bin_edges: Array.from({ length: 33 }, (_, j) => -1 + (2 * j) / 32),
      real_hist: Array.from({ length: 32 }, () => 1 / 32),
      fake_hist: Array.from({ length: 32 }, () => 1 / 32),
      kl: i * 0.01,
      scope,
    })),
    contributions: Array.from({ length: DIMS }, (_, i) => ({
      dim: i + 1,
      count: 3,
      mean: 0.01 * i,
      q1: -0.1,
      median: 0.0,
      q3: 0.1,
      kde: [[-0.2, 0.3], [0, 1.0], [0.2, 0.3]] as [number, number][],
    })),
  });

  const whatif: Record<string, WhatIfPayload> = {};
  for (const p of points) {
    const contrib = contributions[p.image_id];
    whatif[p.image_id] = {
      image_id: p.image_id,
      mode: "joint",
      epsilon: 1e-3,
      delta: Array.from({ length: DIMS }, () => -0.05),
      new_values: p.values.map((v) => v - 0.05),
      old_prediction: {
        logit: contrib.logit,
        prob_fake: 1 / (1 + Math.exp(-contrib.logit)),
        label: contrib.logit > 0 ? 1 : 0,
        confidence: 0.8,
      },
      new_prediction: {
        logit: -contrib.logit * 1e-3,
        prob_fake: 1 / (1 + Math.exp(contrib.logit * 1e-3)),
        label: contrib.logit > 0 ? 0 : 1,
        confidence: 0.5,
      },
    };
  }

  return {
    info: {
      snapshot_id: "fixture",
      dataset: "fixture",
      created_at: "20260401T000000Z",
      n_points: points.length,
      grid_m: 30,
    },
    points,
    cells: [focusCell, otherCell],
    layout,
    concepts,
    contributions,
    global_dimensions: mkDims("global"),
    cell_dimensions: mkDims("cell:4,7"),
    whatif,
  };
}

export class FakeApiClient implements ApiClient {
  calls: string[] = [];
  failConcepts = false;

  constructor(readonly fixture: Fixture = makeFixture()) {}

  private log(name: string): void {
    this.calls.push(name);
  }

  async snapshots(): Promise<SnapshotInfo[]> {
    this.log("snapshots");
    return [this.fixture.info];
  }

  async points(): Promise<PointPayload[]> {
    this.log("points");
    return this.fixture.points;
  }

  async cells(): Promise<CellPayload[]> {
    this.log("cells");
    return this.fixture.cells;
  }

  async layout(_s: string, row: number, col: number): Promise<LayoutPayload> {
    this.log(`layout:${row},${col}`);
    if (row !== this.fixture.layout.row || col !== this.fixture.layout.col) {
      throw new Error("404");
    }
    return this.fixture.layout;
  }

  async concepts(_s: string, row: number, col: number): Promise<ConceptsPayload> {
    this.log(`concepts:${row},${col}`);
    if (this.failConcepts) {
      throw new Error("503");
    }
    return this.fixture.concepts;
  }

  async contributions(_s: string, imageId: string): Promise<ContributionPayload> {
    this.log(`contributions:${imageId}`);
    const payload = this.fixture.contributions[imageId];
    if (!payload) {
      throw new Error("404");
    }
    return payload;
  }

  async dimensions(
    _s: string,
    scope: "global" | "cell",
    _cell: { row: number; col: number } | null,
    filter: DimensionFilter,
  ): Promise<DimensionsPayload> {
    this.log(`dimensions:${scope}:${filter}`);
    const base = scope === "global"
      ? this.fixture.global_dimensions
      : this.fixture.cell_dimensions;
    if (filter === "incorrect" && scope === "cell") {
      return { ...base, filter, contributions: null }; // nothing misclassified
    }
    return { ...base, filter };
  }

  async whatIf(_s: string, imageId: string): Promise<WhatIfPayload> {
    this.log(`whatif:${imageId}`);
    return this.fixture.whatif[imageId];
  }

  async annotations(): Promise<AnnotationPayload[]> {
    this.log("annotations");
    return [];
  }

  async addAnnotation(
    _s: string,
    cell: [number, number],
    text: string,
  ): Promise<AnnotationPayload> {
    this.log(`annotate:${cell[0]},${cell[1]}`);
    return {
      annotation_id: `ann-${this.calls.length}`,
      cell,
      text,
      author: null,
      created_at: "20260401T000000Z",
    };
  }

  async removeAnnotation(): Promise<void> {
    this.log("remove-annotation");
  }

  relevanceUrl(snapshot: string, imageId: string, dim: number): string {
    return `/api/v1/snapshots/${snapshot}/images/${imageId}/relevance/${dim}`;
  }
}
