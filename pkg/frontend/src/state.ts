/** Single-source coordinated view state.
 *
 * Every view reads from this store and every interaction flows through it,
 * so the overview selection, image view content, pattern view brushing, and
 * dimension view scope can never disagree. API failures set a notice and
 * leave the previous state in place.
 */

import type { ApiClient } from "./api";
import type {
  AnnotationPayload,
  CellCoord,
  CellPayload,
  ConceptsPayload,
  ContributionPayload,
  DimensionFilter,
  DimensionsPayload,
  LayoutPayload,
  PointPayload,
  WhatIfPayload,
} from "./types";

export interface Transform {
  x: number;
  y: number;
  k: number;
}

export interface ViewState {
  snapshotId: string | null;
  gridM: number;
  points: PointPayload[];
  cells: CellPayload[];
  globalDimensions: DimensionsPayload | null;
  annotations: AnnotationPayload[];
  selected: CellCoord | null;
  layout: LayoutPayload | null;
  brushed: string[];
  contributions: Record<string, ContributionPayload>;
  whatIf: Record<string, WhatIfPayload>;
  conceptsOn: boolean;
  concepts: ConceptsPayload | null;
  dimensionFilter: DimensionFilter;
  cellDimensions: DimensionsPayload | null;
  transform: Transform;
  notice: string | null;
  loading: boolean;
}

function initialState(): ViewState {
  return {
    snapshotId: null,
    gridM: 30,
    points: [],
    cells: [],
    globalDimensions: null,
    annotations: [],
    selected: null,
    layout: null,
    brushed: [],
    contributions: {},
    whatIf: {},
    conceptsOn: false,
    concepts: null,
    dimensionFilter: "all",
    cellDimensions: null,
    transform: { x: 0, y: 0, k: 1 },
    notice: null,
    loading: false,
  };
}

export type Listener = (state: ViewState) => void;

export class ExplorerStore {
  state: ViewState = initialState();
  private listeners: Listener[] = [];

  constructor(private readonly api: ApiClient) {}

  subscribe(listener: Listener): () => void {
    this.listeners.push(listener);
    return () => {
      this.listeners = this.listeners.filter((l) => l !== listener);
    };
  }

  private emit(): void {
    for (const listener of this.listeners) {
      listener(this.state);
    }
  }

  private patch(update: Partial<ViewState>): void {
    this.state = { ...this.state, ...update };
    this.emit();
  }

  selectedCell(): CellPayload | null {
    const sel = this.state.selected;
    if (!sel) {
      return null;
    }
    return (
      this.state.cells.find((c) => c.row === sel.row && c.col === sel.col) ?? null
    );
  }

  pointsById(): Map<string, PointPayload> {
    return new Map(this.state.points.map((p) => [p.image_id, p]));
  }

  async init(snapshotId: string, gridM: number): Promise<void> {
    this.patch({ loading: true });
    try {
      const [points, cells, globalDimensions, annotations] = await Promise.all([
        this.api.points(snapshotId),
        this.api.cells(snapshotId),
        this.api.dimensions(snapshotId, "global", null, "all"),
        this.api.annotations(snapshotId),
      ]);
      this.patch({
        ...initialState(),
        snapshotId,
        gridM,
        points,
        cells,
        globalDimensions,
        annotations,
      });
    } catch (err) {
      // keep the stale scene, surface the failure
      this.patch({ loading: false, notice: `snapshot load failed: ${err}` });
    }
  }

  /** Select a cell; clears brushing, concepts, and cell-scope plots first. */
  async selectCell(row: number, col: number): Promise<void> {
    const snapshot = this.state.snapshotId;
    if (!snapshot) {
      return;
    }
    this.patch({
      selected: { row, col },
      brushed: [],
      layout: null,
      concepts: null,
      conceptsOn: false,
      cellDimensions: null,
      notice: null,
    });
    try {
      const [layout, cellDimensions] = await Promise.all([
        this.api.layout(snapshot, row, col),
        this.api.dimensions(snapshot, "cell", { row, col }, this.state.dimensionFilter),
      ]);
      // selection may have moved on while the fetch was in flight
      if (this.state.selected?.row === row && this.state.selected?.col === col) {
        this.patch({ layout, cellDimensions, loading: false });
      }
    } catch (err) {
      this.patch({ notice: `cell load failed: ${err}` });
    }
  }

  /** Brush images for the pattern view. Ids outside the selected cell are
   * dropped: brushing is only defined over the selected cell's members. */
  async brush(imageIds: string[]): Promise<void> {
    const snapshot = this.state.snapshotId;
    const cell = this.selectedCell();
    if (!snapshot || !cell) {
      return;
    }
    const members = new Set(cell.members);
    const kept = imageIds.filter((id) => members.has(id));
    this.patch({ brushed: kept });
    try {
      const missing = kept.filter((id) => !(id in this.state.contributions));
      const fetched = await Promise.all(
        missing.map((id) => this.api.contributions(snapshot, id)),
      );
      const contributions = { ...this.state.contributions };
      for (const payload of fetched) {
        contributions[payload.image_id] = payload;
      }
      this.patch({ contributions });
    } catch (err) {
      this.patch({ notice: `contribution load failed: ${err}` });
    }
  }

  /** Toggle the concept overlay; a failed fetch reverts the toggle. */
  async toggleConcepts(): Promise<void> {
    const snapshot = this.state.snapshotId;
    const sel = this.state.selected;
    if (!snapshot || !sel) {
      return;
    }
    if (this.state.conceptsOn) {
      this.patch({ conceptsOn: false });
      return;
    }
    this.patch({ conceptsOn: true });
    if (this.state.concepts) {
      return;
    }
    try {
      const concepts = await this.api.concepts(snapshot, sel.row, sel.col);
      this.patch({ concepts });
    } catch (err) {
      this.patch({ conceptsOn: false, notice: `concept fetch failed: ${err}` });
    }
  }

  async setDimensionFilter(filter: DimensionFilter): Promise<void> {
    const snapshot = this.state.snapshotId;
    this.patch({ dimensionFilter: filter });
    const sel = this.state.selected;
    if (!snapshot || !sel) {
      return;
    }
    try {
      const cellDimensions = await this.api.dimensions(
        snapshot, "cell", sel, filter,
      );
      this.patch({ cellDimensions });
    } catch (err) {
      this.patch({ notice: `dimension reload failed: ${err}` });
    }
  }

  async runWhatIf(imageId: string): Promise<void> {
    const snapshot = this.state.snapshotId;
    if (!snapshot || !this.state.brushed.includes(imageId)) {
      return;
    }
    try {
      const payload = await this.api.whatIf(snapshot, imageId);
      this.patch({ whatIf: { ...this.state.whatIf, [imageId]: payload } });
    } catch (err) {
      this.patch({ notice: `what-if failed: ${err}` });
    }
  }

  async annotate(text: string): Promise<void> {
    const snapshot = this.state.snapshotId;
    const sel = this.state.selected;
    if (!snapshot || !sel || !text.trim()) {
      return;
    }
    try {
      const created = await this.api.addAnnotation(snapshot, [sel.row, sel.col], text);
      this.patch({ annotations: [...this.state.annotations, created] });
    } catch (err) {
      this.patch({ notice: `annotation failed: ${err}` });
    }
  }

  async removeAnnotation(annotationId: string): Promise<void> {
    const snapshot = this.state.snapshotId;
    if (!snapshot) {
      return;
    }
    try {
      await this.api.removeAnnotation(snapshot, annotationId);
      this.patch({
        annotations: this.state.annotations.filter(
          (a) => a.annotation_id !== annotationId,
        ),
      });
    } catch (err) {
      this.patch({ notice: `annotation removal failed: ${err}` });
    }
  }

  setTransform(transform: Transform): void {
    this.patch({ transform });
  }

  clearNotice(): void {
    this.patch({ notice: null });
  }
}
