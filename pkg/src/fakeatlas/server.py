"""HTTP API over a snapshot store (read-only except annotations).

All endpoints live under /api/v1 and return JSON; relevance heatmaps are
additionally available as 8-bit grayscale PNG or as the raw float32 plane.
"""

from __future__ import annotations

import io
from pathlib import Path

import numpy as np
from fastapi import FastAPI, HTTPException, Query, Response
from pydantic import BaseModel

from .errors import DegenerateModelError, SnapshotError
from .snapshot import Snapshot, SnapshotStore


class WhatIfRequest(BaseModel):
    image_id: str
    epsilon: float = 1e-3
    mode: str = "joint"


class AnnotationRequest(BaseModel):
    cell: tuple[int, int]
    text: str
    author: str | None = None


def _parse_cell(cell: str) -> tuple[int, int]:
    try:
        row_s, col_s = cell.split(",")
        return int(row_s), int(col_s)
    except ValueError:
        raise HTTPException(status_code=400, detail=f"bad cell coordinate {cell!r}")


def _annotation_json(ann) -> dict:
    return {
        "annotation_id": ann.annotation_id,
        "cell": list(ann.cell),
        "text": ann.text,
        "author": ann.author,
        "created_at": ann.created_at,
    }


def create_app(store: SnapshotStore) -> FastAPI:
    app = FastAPI(title="fakeatlas analysis API")

    def snap(snapshot_id: str) -> Snapshot:
        try:
            return store.get(snapshot_id)
        except (KeyError, SnapshotError):
            raise HTTPException(status_code=404, detail=f"unknown snapshot {snapshot_id}")

    @app.get("/api/v1/snapshots")
    def list_snapshots():
        return [
            {
                "snapshot_id": s.snapshot_id,
                "dataset": s.meta["dataset"],
                "created_at": s.meta["created_at"],
                "n_points": s.meta["n_points"],
                "grid_m": s.meta["grid_m"],
            }
            for s in store.list()
        ]

    @app.get("/api/v1/snapshots/{snapshot_id}/points")
    def get_points(snapshot_id: str):
        return snap(snapshot_id).points()

    @app.get("/api/v1/snapshots/{snapshot_id}/cells")
    def get_cells(snapshot_id: str):
        s = snap(snapshot_id)
        annotated = {a.cell for a in s.annotations.list()}
        cells = s.cells()
        for cell in cells:
            cell["annotated"] = (cell["row"], cell["col"]) in annotated
        return cells

    @app.get("/api/v1/snapshots/{snapshot_id}/cells/{cell}")
    def get_cell(snapshot_id: str, cell: str):
        s = snap(snapshot_id)
        row, col = _parse_cell(cell)
        try:
            payload = s.cell(row, col)
        except KeyError:
            raise HTTPException(status_code=404, detail=f"empty or unknown cell {cell}")
        payload["annotations"] = [_annotation_json(a) for a in s.annotations.for_cell(row, col)]
        return payload

    @app.get("/api/v1/snapshots/{snapshot_id}/cells/{cell}/layout")
    def get_layout(snapshot_id: str, cell: str):
        row, col = _parse_cell(cell)
        try:
            return snap(snapshot_id).layout(row, col)
        except KeyError:
            raise HTTPException(status_code=404, detail=f"empty or unknown cell {cell}")

    @app.get("/api/v1/snapshots/{snapshot_id}/cells/{cell}/concepts")
    def get_concepts(snapshot_id: str, cell: str):
        row, col = _parse_cell(cell)
        try:
            return snap(snapshot_id).concepts(row, col)
        except KeyError:
            raise HTTPException(status_code=404, detail=f"empty or unknown cell {cell}")

    @app.get("/api/v1/snapshots/{snapshot_id}/images/{image_id:path}/relevance/{dim}")
    def get_relevance(snapshot_id: str, image_id: str, dim: int,
                      format: str = Query("png", pattern="^(png|raw|json)$")):
        s = snap(snapshot_id)
        try:
            stack = s.relevance(image_id)
        except KeyError:
            raise HTTPException(status_code=404, detail=f"unknown image {image_id}")
        if not 1 <= dim <= len(stack.maps):
            raise HTTPException(status_code=404, detail=f"dim out of range: {dim}")
        rel = stack.maps[dim - 1]
        if format == "json":
            return {
                "image_id": image_id, "dim": dim,
                "H": rel.map.shape[0], "W": rel.map.shape[1],
                "degenerate": rel.degenerate,
                "values": rel.map.astype(float).ravel().tolist(),
            }
        if format == "raw":
            data = np.ascontiguousarray(rel.map, dtype="<f4").tobytes()
            return Response(content=data, media_type="application/octet-stream",
                            headers={"X-Shape": f"{rel.map.shape[0]},{rel.map.shape[1]}",
                                     "X-Degenerate": str(rel.degenerate).lower()})
        from PIL import Image

        img = Image.fromarray(np.round(rel.map * 255.0).astype(np.uint8), mode="L")
        buf = io.BytesIO()
        img.save(buf, format="PNG")
        return Response(content=buf.getvalue(), media_type="image/png")

    @app.get("/api/v1/snapshots/{snapshot_id}/images/{image_id:path}/contributions")
    def get_contributions(snapshot_id: str, image_id: str):
        try:
            return snap(snapshot_id).contributions(image_id)
        except KeyError:
            raise HTTPException(status_code=404, detail=f"unknown image {image_id}")

    @app.get("/api/v1/snapshots/{snapshot_id}/dimensions")
    def get_dimensions(snapshot_id: str,
                       scope: str = Query("global", pattern="^(global|cell)$"),
                       cell: str | None = None,
                       filter: str = Query("all", pattern="^(all|correct|incorrect)$")):
        s = snap(snapshot_id)
        cell_coord = _parse_cell(cell) if cell is not None else None
        if scope == "cell" and cell_coord is None:
            raise HTTPException(status_code=400, detail="scope=cell requires ?cell=row,col")
        try:
            return s.dimensions(scope=scope, cell=cell_coord, which=filter)
        except KeyError:
            raise HTTPException(status_code=404, detail=f"empty or unknown cell {cell}")

    @app.post("/api/v1/snapshots/{snapshot_id}/whatif")
    def post_whatif(snapshot_id: str, req: WhatIfRequest):
        s = snap(snapshot_id)
        try:
            return s.whatif(req.image_id, epsilon=req.epsilon, mode=req.mode)
        except KeyError:
            raise HTTPException(status_code=404, detail=f"unknown image {req.image_id}")
        except (DegenerateModelError, ValueError) as exc:
            raise HTTPException(status_code=422, detail=str(exc))

    @app.post("/api/v1/snapshots/{snapshot_id}/annotations")
    def post_annotation(snapshot_id: str, req: AnnotationRequest):
        s = snap(snapshot_id)
        try:
            s.cell(req.cell[0], req.cell[1])
        except KeyError:
            raise HTTPException(status_code=404,
                                detail=f"empty or unknown cell {req.cell}")
        try:
            ann = s.annotations.add(tuple(req.cell), req.text, req.author)
        except ValueError as exc:
            raise HTTPException(status_code=422, detail=str(exc))
        return _annotation_json(ann)

    @app.get("/api/v1/snapshots/{snapshot_id}/annotations")
    def list_annotations(snapshot_id: str):
        return [_annotation_json(a) for a in snap(snapshot_id).annotations.list()]

    @app.delete("/api/v1/snapshots/{snapshot_id}/annotations/{annotation_id}")
    def delete_annotation(snapshot_id: str, annotation_id: str):
        removed = snap(snapshot_id).annotations.remove(annotation_id)
        if not removed:
            raise HTTPException(status_code=404, detail=f"unknown annotation {annotation_id}")
        return {"removed": True, "annotation_id": annotation_id}

    return app


def serve(store_path: Path | str, host: str = "127.0.0.1", port: int = 8000) -> None:
    """Blocking server entry point."""
    import uvicorn

    store = SnapshotStore(Path(store_path))
    if not store.list():
        raise SnapshotError(f"no snapshots found under {store_path}")
    uvicorn.run(create_app(store), host=host, port=port, log_level="info")
