/** Typed client over the analysis HTTP API. */

import type {
  AnnotationPayload,
  CellPayload,
  ConceptsPayload,
  ContributionPayload,
  DimensionFilter,
  DimensionsPayload,
  LayoutPayload,
  PointPayload,
  SnapshotInfo,
  WhatIfPayload,
} from "./types";

export interface ApiClient {
  snapshots(): Promise<SnapshotInfo[]>;
  points(snapshot: string): Promise<PointPayload[]>;
  cells(snapshot: string): Promise<CellPayload[]>;
  layout(snapshot: string, row: number, col: number): Promise<LayoutPayload>;
  concepts(snapshot: string, row: number, col: number): Promise<ConceptsPayload>;
  contributions(snapshot: string, imageId: string): Promise<ContributionPayload>;
  dimensions(
    snapshot: string,
    scope: "global" | "cell",
    cell: { row: number; col: number } | null,
    filter: DimensionFilter,
  ): Promise<DimensionsPayload>;
  whatIf(snapshot: string, imageId: string): Promise<WhatIfPayload>;
  annotations(snapshot: string): Promise<AnnotationPayload[]>;
  addAnnotation(
    snapshot: string,
    cell: [number, number],
    text: string,
  ): Promise<AnnotationPayload>;
  removeAnnotation(snapshot: string, annotationId: string): Promise<void>;
  relevanceUrl(snapshot: string, imageId: string, dim: number): string;
}

export class HttpApiClient implements ApiClient {
  constructor(private readonly base: string = "") {}

  private async get<T>(path: string): Promise<T> {
    const res = await fetch(`${this.base}/api/v1${path}`);
    if (!res.ok) {
      throw new Error(`GET ${path} failed: ${res.status}`);
    }
    return (await res.json()) as T;
  }

  private async send<T>(method: string, path: string, body?: unknown): Promise<T> {
    const res = await fetch(`${this.base}/api/v1${path}`, {
      method,
      headers: { "content-type": "application/json" },
      body: body === undefined ? undefined : JSON.stringify(body),
    });
    if (!res.ok) {
      throw new Error(`${method} ${path} failed: ${res.status}`);
    }
    return (await res.json()) as T;
  }

  snapshots() {
    return this.get<SnapshotInfo[]>(`/snapshots`);
  }

  points(snapshot: string) {
    return this.get<PointPayload[]>(`/snapshots/${snapshot}/points`);
  }

  cells(snapshot: string) {
    return this.get<CellPayload[]>(`/snapshots/${snapshot}/cells`);
  }

  layout(snapshot: string, row: number, col: number) {
    return this.get<LayoutPayload>(`/snapshots/${snapshot}/cells/${row},${col}/layout`);
  }

  concepts(snapshot: string, row: number, col: number) {
    return this.get<ConceptsPayload>(`/snapshots/${snapshot}/cells/${row},${col}/concepts`);
  }

  contributions(snapshot: string, imageId: string) {
    return this.get<ContributionPayload>(
      `/snapshots/${snapshot}/images/${imageId}/contributions`,
    );
  }

  dimensions(
    snapshot: string,
    scope: "global" | "cell",
    cell: { row: number; col: number } | null,
    filter: DimensionFilter,
  ) {
    const params = new URLSearchParams({ scope, filter });
    if (cell) {
      params.set("cell", `${cell.row},${cell.col}`);
    }
    return this.get<DimensionsPayload>(`/snapshots/${snapshot}/dimensions?${params}`);
  }

  whatIf(snapshot: string, imageId: string) {
    return this.send<WhatIfPayload>("POST", `/snapshots/${snapshot}/whatif`, {
      image_id: imageId,
    });
  }

  annotations(snapshot: string) {
    return this.get<AnnotationPayload[]>(`/snapshots/${snapshot}/annotations`);
  }

  addAnnotation(snapshot: string, cell: [number, number], text: string) {
    return this.send<AnnotationPayload>("POST", `/snapshots/${snapshot}/annotations`, {
      cell,
      text,
    });
  }

  async removeAnnotation(snapshot: string, annotationId: string) {
    await this.send<unknown>("DELETE", `/snapshots/${snapshot}/annotations/${annotationId}`);
  }

  relevanceUrl(snapshot: string, imageId: string, dim: number): string {
    return `${this.base}/api/v1/snapshots/${snapshot}/images/${imageId}/relevance/${dim}`;
  }
}
