"""Immutable analysis snapshots and the mutable annotation side-store.

A snapshot is a self-contained directory: manifest copy, checkpoint,
projection artifact, adapter description, projected points, grid cells with
confusion statistics, and global dimension distributions. Relevance stacks
and concept clusters are computed lazily on first request and cached inside
the snapshot directory. Only the annotation store ever changes after a
snapshot is written; writes are serialized and removal uses tombstones.
"""

from __future__ import annotations

import datetime as _dt
import json
import shutil
import tempfile
import threading
import uuid
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from . import analytics
from .adapters import BaseEncoderAdapter, build_adapter
from .contributions import contribution_json, contribution_scores, whatif_counterfactual
from .data import DatasetManifest, load_manifest, load_pixels, save_manifest
from .detector import (DetectorModel, DistilledVector, Prediction, distill,
                       load_checkpoint, predict)
from .encoder import ForgetProjection, encode_visual_batch, load_projection
from .errors import SnapshotError
from .relevance import (RelevanceStack, read_relevance_cache, relevance_stack,
                        write_relevance_cache)
from .util import sha256_file, stable_json_dumps, write_json

SNAPSHOT_FILES = ("meta.json", "manifest.jsonl", "checkpoint.bin",
                  "projection.bin", "points.jsonl", "cells.json", "dimensions.json")


@dataclass
class SnapshotConfig:
    grid_m: int = analytics.DEFAULT_GRID_M
    seed: int = 0
    name: str | None = None


def _stats_json(cell: analytics.GridCell) -> dict:
    st = cell.stats
    return {
        "row": cell.row,
        "col": cell.col,
        "members": cell.member_ids,
        "stats": {
            "tp": st.tp, "tn": st.tn, "fp": st.fp, "fn": st.fn,
            "accuracy": st.accuracy, "sensitivity": st.sensitivity,
            "specificity": st.specificity,
        },
        "sector_confidence": cell.sector_confidence,
    }


def _dimension_json(dist: analytics.DimensionDistribution) -> dict:
    return {
        "dim": dist.dim,
        "bin_edges": [float(e) for e in dist.bin_edges],
        "real_hist": [float(h) for h in dist.real_hist],
        "fake_hist": [float(h) for h in dist.fake_hist],
        "kl": dist.kl,
        "scope": dist.scope,
    }


def build_snapshot(
    manifest: DatasetManifest,
    checkpoint_path: Path | str,
    projection_path: Path | str,
    adapter: BaseEncoderAdapter,
    store_dir: Path | str,
    config: SnapshotConfig | None = None,
) -> "Snapshot":
    """Run the full analysis pipeline and persist it atomically.

    The snapshot directory is assembled under a temporary name and renamed
    into the store only once complete, so readers never observe a partial
    snapshot.
    """
    config = config or SnapshotConfig()
    store_dir = Path(store_dir)
    store_dir.mkdir(parents=True, exist_ok=True)
    model = load_checkpoint(checkpoint_path)
    projection = load_projection(projection_path)

    batch = encode_visual_batch(manifest.records, adapter, projection)
    if not batch.embeddings:
        raise SnapshotError("no image could be encoded; snapshot would be empty")
    labels = {r.id: r.label for r in manifest.records}

    distilled: dict[str, DistilledVector] = {}
    predictions: dict[str, Prediction] = {}
    for emb in batch.embeddings:
        vec = distill(emb, model)
        distilled[emb.source_id] = vec
        predictions[emb.source_id] = predict(vec, model)

    ids = [e.source_id for e in batch.embeddings]
    points = analytics.project_2d(
        np.vstack([distilled[i].values for i in ids]), ids, seed=config.seed
    )
    cells = analytics.assign_grid(points, m=config.grid_m)
    for cell in cells:
        analytics.cell_statistics(cell, predictions, labels)

    value_matrix = np.vstack([distilled[i].values for i in ids])
    label_array = np.array([labels[i] for i in ids])
    dims = analytics.dimension_distributions(value_matrix, label_array)

    created = _dt.datetime.now(_dt.timezone.utc).strftime("%Y%m%dT%H%M%SZ")
    snapshot_id = config.name or f"{manifest.name}-{created}-{uuid.uuid4().hex[:8]}"

    tmp = Path(tempfile.mkdtemp(prefix=".building-", dir=store_dir))
    try:
        save_manifest(manifest, tmp / "manifest.jsonl")
        shutil.copyfile(checkpoint_path, tmp / "checkpoint.bin")
        shutil.copyfile(projection_path, tmp / "projection.bin")

        with (tmp / "points.jsonl").open("w", encoding="utf-8") as fh:
            for point in points:
                pred = predictions[point.image_id]
                fh.write(stable_json_dumps({
                    "image_id": point.image_id,
                    "x": point.x, "y": point.y,
                    "label": labels[point.image_id],
                    "predicted": pred.label,
                    "prob_fake": pred.prob_fake,
                    "logit": pred.logit,
                    "confidence": pred.confidence,
                    "values": [float(v) for v in distilled[point.image_id].values],
                }) + "\n")
        write_json(tmp / "cells.json", [_stats_json(c) for c in cells])
        write_json(tmp / "dimensions.json", [_dimension_json(d) for d in dims])
        (tmp / "relevance").mkdir()
        (tmp / "concepts").mkdir()

        meta = {
            "snapshot_id": snapshot_id,
            "dataset": manifest.name,
            "created_at": created,
            "grid_m": config.grid_m,
            "seed": config.seed,
            "n_points": len(points),
            "adapter": adapter.spec(),
            "encode_errors": [{"id": i, "error": msg} for i, msg in batch.errors],
            "checksums": {
                name: sha256_file(tmp / name)
                for name in ("manifest.jsonl", "checkpoint.bin", "projection.bin",
                             "points.jsonl", "cells.json", "dimensions.json")
            },
        }
        write_json(tmp / "meta.json", meta)
        final = store_dir / snapshot_id
        if final.exists():
            raise SnapshotError(f"snapshot id already exists: {snapshot_id}")
        tmp.rename(final)
    except Exception:
        shutil.rmtree(tmp, ignore_errors=True)
        raise
    return Snapshot(final)


class Snapshot:
    """Read-side handle over a snapshot directory, with lazy caches."""

    def __init__(self, root: Path | str):
        self.root = Path(root)
        meta_path = self.root / "meta.json"
        if not meta_path.is_file():
            raise SnapshotError(f"not a snapshot directory: {self.root}")
        self.meta = json.loads(meta_path.read_text("utf-8"))
        self.snapshot_id = self.meta["snapshot_id"]
        self._lock = threading.Lock()
        self._image_locks: dict[str, threading.Lock] = {}
        self._model: DetectorModel | None = None
        self._projection: ForgetProjection | None = None
        self._adapter: BaseEncoderAdapter | None = None
        self._manifest: DatasetManifest | None = None
        self._points: list[dict] | None = None
        self.annotations = AnnotationStore(self.root / "annotations.jsonl")

    # --- lazily materialized components -------------------------------
    @property
    def model(self) -> DetectorModel:
        if self._model is None:
            self._model = load_checkpoint(self.root / "checkpoint.bin")
        return self._model

    @property
    def projection(self) -> ForgetProjection:
        if self._projection is None:
            self._projection = load_projection(self.root / "projection.bin")
        return self._projection

    @property
    def adapter(self) -> BaseEncoderAdapter:
        if self._adapter is None:
            self._adapter = build_adapter(self.meta["adapter"])
        return self._adapter

    @property
    def manifest(self) -> DatasetManifest:
        if self._manifest is None:
            self._manifest = load_manifest(self.root / "manifest.jsonl",
                                           name=self.meta["dataset"])
        return self._manifest

    # --- plain data accessors ------------------------------------------
    def points(self) -> list[dict]:
        if self._points is None:
            lines = (self.root / "points.jsonl").read_text("utf-8").splitlines()
            self._points = [json.loads(line) for line in lines if line.strip()]
        return self._points

    def point(self, image_id: str) -> dict:
        for p in self.points():
            if p["image_id"] == image_id:
                return p
        raise KeyError(image_id)

    def cells(self) -> list[dict]:
        return json.loads((self.root / "cells.json").read_text("utf-8"))

    def cell(self, row: int, col: int) -> dict:
        for c in self.cells():
            if c["row"] == row and c["col"] == col:
                return c
        raise KeyError((row, col))

    def dimensions_global(self) -> list[dict]:
        return json.loads((self.root / "dimensions.json").read_text("utf-8"))

    # --- derived, lazily cached artifacts ------------------------------
    def _image_lock(self, image_id: str) -> threading.Lock:
        with self._lock:
            return self._image_locks.setdefault(image_id, threading.Lock())

    def relevance(self, image_id: str) -> RelevanceStack:
        """Relevance stack for one image, computed at most once and cached."""
        cache = self.root / "relevance" / f"{_safe_name(image_id)}.bin"
        with self._image_lock(image_id):
            if cache.is_file():
                return read_relevance_cache(cache)
            record = self.manifest.by_id().get(image_id)
            if record is None:
                raise KeyError(image_id)
            pixels = load_pixels(record, size=self.adapter.info.input_size)
            stack = relevance_stack(pixels, self.adapter, self.projection, self.model)
            write_relevance_cache(stack, cache, k=self.adapter.info.patch_grid)
            return stack

    def contributions(self, image_id: str) -> dict:
        point = self.point(image_id)
        values = np.array(point["values"], dtype=np.float64)
        contrib = contribution_scores(values, self.model, source_id=image_id)
        pred = predict(values, self.model)
        return contribution_json(image_id, contrib, pred)

    def whatif(self, image_id: str, epsilon: float = 1e-3, mode: str = "joint") -> dict:
        point = self.point(image_id)
        values = np.array(point["values"], dtype=np.float64)
        result = whatif_counterfactual(values, self.model, epsilon=epsilon, mode=mode)

        def pred_json(p: Prediction) -> dict:
            return {"logit": p.logit, "prob_fake": p.prob_fake,
                    "label": p.label, "confidence": p.confidence}

        return {
            "image_id": image_id,
            "mode": result.mode,
            "epsilon": result.epsilon,
            "delta": [float(d) for d in result.delta],
            "new_values": [float(v) for v in result.new_values],
            "old_prediction": pred_json(result.old_prediction),
            "new_prediction": pred_json(result.new_prediction),
        }

    def layout(self, row: int, col: int) -> dict:
        cell = self.cell(row, col)
        by_id = {p["image_id"]: p for p in self.points()}
        members = [analytics.ProjectedPoint(image_id=i, x=by_id[i]["x"], y=by_id[i]["y"])
                   for i in cell["members"]]
        layout = analytics.isomatch_layout(members)
        return {
            "row": row, "col": col,
            "grid_rows": layout.rows, "grid_cols": layout.cols,
            "assignment": {i: list(pos) for i, pos in layout.assignment.items()},
        }

    def concepts(self, row: int, col: int) -> dict:
        cache = self.root / "concepts" / f"{row},{col}.json"
        with self._image_lock(f"cell:{row},{col}"):
            if cache.is_file():
                return json.loads(cache.read_text("utf-8"))
            cell = self.cell(row, col)
            segments: list[analytics.Segment] = []
            pixel_lookup = {}
            records = self.manifest.by_id()
            for image_id in cell["members"]:
                stack = self.relevance(image_id)
                segments.extend(analytics.extract_segments(stack))
                pixel_lookup[image_id] = load_pixels(
                    records[image_id], size=self.adapter.info.input_size
                )
            clusters = analytics.cluster_concepts(
                segments, pixel_lookup, self.adapter, self.projection, self.model,
                seed=self.meta["seed"],
            )
            payload = {
                "row": row, "col": col,
                "n_segments": len(segments),
                "flagged_fewer_than_three": len(segments) < 3,
                "clusters": [
                    {
                        "cluster_id": c.cluster_id,
                        "centroid": [float(v) for v in c.centroid],
                        "members": [
                            {"image_id": s.image_id, "box": list(s.box), "dim": s.dim}
                            for s in c.members
                        ],
                    }
                    for c in clusters
                ],
            }
            write_json(cache, payload)
            return payload

    def dimensions(self, scope: str = "global", cell: tuple[int, int] | None = None,
                   which: str = "all") -> dict:
        """Dimension value distributions plus contribution summaries."""
        points = self.points()
        values = np.vstack([p["values"] for p in points])
        labels = np.array([p["label"] for p in points])
        ids = [p["image_id"] for p in points]
        if scope == "cell":
            if cell is None:
                raise ValueError("cell scope requires a cell coordinate")
            members = set(self.cell(*cell)["members"])
            mask = np.array([i in members for i in ids])
            scope_tag = f"cell:{cell[0]},{cell[1]}"
            member_ids = [i for i in ids if i in members]
        elif scope == "global":
            mask = None
            scope_tag = "global"
            member_ids = ids
        else:
            raise ValueError(f"unknown scope {scope!r}")

        dists = analytics.dimension_distributions(values, labels, mask, scope=scope_tag)
        contribs = {
            p["image_id"]: np.array(self.contributions(p["image_id"])["c"])
            for p in points if p["image_id"] in set(member_ids)
        }
        correct = {p["image_id"]: p["label"] == p["predicted"] for p in points}
        contrib_summary = analytics.contribution_distributions(
            contribs, correct, member_ids, which=which
        )
        return {
            "scope": scope_tag,
            "filter": which,
            "values": [_dimension_json(d) for d in dists],
            "contributions": contrib_summary,
        }


def _safe_name(image_id: str) -> str:
    return "".join(ch if ch.isalnum() or ch in "-._" else "_" for ch in image_id)


@dataclass
class Annotation:
    annotation_id: str
    cell: tuple[int, int]
    text: str
    author: str | None
    created_at: str


class AnnotationStore:
    """Append-only JSON-lines store; removal appends a tombstone."""

    def __init__(self, path: Path):
        self.path = path
        self._lock = threading.Lock()

    def _entries(self) -> list[dict]:
        if not self.path.is_file():
            return []
        return [json.loads(line) for line in
                self.path.read_text("utf-8").splitlines() if line.strip()]

    def add(self, cell: tuple[int, int], text: str, author: str | None = None) -> Annotation:
        if not text or not text.strip():
            raise ValueError("annotation text must be nonempty")
        ann = Annotation(
            annotation_id=uuid.uuid4().hex,
            cell=(int(cell[0]), int(cell[1])),
            text=text,
            author=author,
            created_at=_dt.datetime.now(_dt.timezone.utc).isoformat(),
        )
        line = stable_json_dumps({
            "op": "add", "id": ann.annotation_id, "row": ann.cell[0],
            "col": ann.cell[1], "text": ann.text, "author": ann.author,
            "created_at": ann.created_at,
        })
        with self._lock, self.path.open("a", encoding="utf-8") as fh:
            fh.write(line + "\n")
        return ann

    def remove(self, annotation_id: str) -> bool:
        live = {a.annotation_id for a in self.list()}
        if annotation_id not in live:
            return False
        with self._lock, self.path.open("a", encoding="utf-8") as fh:
            fh.write(stable_json_dumps({"op": "remove", "id": annotation_id}) + "\n")
        return True

    def list(self) -> list[Annotation]:
        alive: dict[str, Annotation] = {}
        for entry in self._entries():
            if entry["op"] == "add":
                alive[entry["id"]] = Annotation(
                    annotation_id=entry["id"], cell=(entry["row"], entry["col"]),
                    text=entry["text"], author=entry.get("author"),
                    created_at=entry["created_at"],
                )
            elif entry["op"] == "remove":
                alive.pop(entry["id"], None)
        return list(alive.values())

    def for_cell(self, row: int, col: int) -> list[Annotation]:
        return [a for a in self.list() if a.cell == (row, col)]


class SnapshotStore:
    """Directory of snapshot bundles."""

    def __init__(self, root: Path | str):
        self.root = Path(root)
        self._open: dict[str, Snapshot] = {}
        self._lock = threading.Lock()

    def list(self) -> list[Snapshot]:
        snapshots = []
        if self.root.is_dir():
            for child in sorted(self.root.iterdir()):
                if child.is_dir() and (child / "meta.json").is_file():
                    snapshots.append(self.get(child.name))
        return snapshots

    def get(self, snapshot_id: str) -> Snapshot:
        with self._lock:
            if snapshot_id not in self._open:
                path = self.root / snapshot_id
                if not (path / "meta.json").is_file():
                    raise KeyError(snapshot_id)
                self._open[snapshot_id] = Snapshot(path)
            return self._open[snapshot_id]
