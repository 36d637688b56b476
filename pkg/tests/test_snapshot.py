from __future__ import annotations

import json
import threading

import numpy as np
import pytest

from fakeatlas.detector import TrainConfig, save_checkpoint, train_detector
from fakeatlas.encoder import encode_visual_batch
from fakeatlas.errors import SnapshotError
from fakeatlas.snapshot import Snapshot, SnapshotConfig, SnapshotStore, build_snapshot
from fakeatlas.util import sha256_file


@pytest.fixture(scope="module")
def trained_checkpoint(tmp_path_factory, small_manifest, mock_adapter, projection):
    out = tmp_path_factory.mktemp("model")
    labels = {r.id: r.label for r in small_manifest.records}
    pairs = {}
    for split in ("train", "val"):
        batch = encode_visual_batch(small_manifest.split_records(split), mock_adapter,
                                    projection)
        pairs[split] = [(e, labels[e.source_id]) for e in batch.embeddings]
    model = train_detector(pairs["train"], pairs["val"],
                           TrainConfig(max_epochs=3, patience=3), seed=0)
    path = out / "checkpoint.bin"
    save_checkpoint(model, path)
    return path


@pytest.fixture(scope="module")
def store_dir(tmp_path_factory, small_manifest, trained_checkpoint, projection_file,
              mock_adapter):
    store = tmp_path_factory.mktemp("store")
    build_snapshot(small_manifest, trained_checkpoint, projection_file, mock_adapter,
                   store, SnapshotConfig(grid_m=10, seed=0, name="snap-a"))
    return store


@pytest.fixture(scope="module")
def snapshot(store_dir):
    return SnapshotStore(store_dir).get("snap-a")


def test_snapshot_files_present(snapshot):
    for name in ("meta.json", "manifest.jsonl", "checkpoint.bin", "projection.bin",
                 "points.jsonl", "cells.json", "dimensions.json"):
        assert (snapshot.root / name).is_file(), name


def test_snapshot_points_cover_manifest(snapshot, small_manifest):
    points = snapshot.points()
    assert len(points) == len(small_manifest.records)
    assert {p["image_id"] for p in points} == {r.id for r in small_manifest.records}
    for p in points:
        assert 0.0 <= p["x"] <= 1.0 and 0.0 <= p["y"] <= 1.0
        assert len(p["values"]) == 16


def test_snapshot_cells_partition_points(snapshot):
    cells = snapshot.cells()
    total = sum(len(c["members"]) for c in cells)
    assert total == len(snapshot.points())
    for cell in cells:
        st = cell["stats"]
        assert st["tp"] + st["tn"] + st["fp"] + st["fn"] == len(cell["members"])


def test_snapshot_checksums_match(snapshot):
    for name, digest in snapshot.meta["checksums"].items():
        assert sha256_file(snapshot.root / name) == digest


def test_snapshot_dimensions_sorted(snapshot):
    dims = snapshot.dimensions_global()
    assert len(dims) == 16
    kls = [d["kl"] for d in dims]
    assert all(kls[i] <= kls[i + 1] for i in range(len(kls) - 1))


def test_relevance_lazy_cache(snapshot):
    image_id = snapshot.points()[0]["image_id"]
    cache_dir = snapshot.root / "relevance"
    before = set(cache_dir.glob("*.bin"))
    stack = snapshot.relevance(image_id)
    after = set(cache_dir.glob("*.bin"))
    assert len(after) == len(before) + 1
    again = snapshot.relevance(image_id)
    assert set(cache_dir.glob("*.bin")) == after  # no recompute
    assert all(np.array_equal(a.map, b.map) for a, b in zip(stack.maps, again.maps))


def test_relevance_core_files_untouched(snapshot):
    digests = {n: sha256_file(snapshot.root / n) for n in snapshot.meta["checksums"]}
    snapshot.relevance(snapshot.points()[1]["image_id"])
    snapshot.contributions(snapshot.points()[1]["image_id"])
    cell = snapshot.cells()[0]
    snapshot.layout(cell["row"], cell["col"])
    for name, digest in digests.items():
        assert sha256_file(snapshot.root / name) == digest


def test_whatif_flips_label(snapshot):
    for point in snapshot.points()[:5]:
        result = snapshot.whatif(point["image_id"])
        assert result["new_prediction"]["label"] != result["old_prediction"]["label"]
        delta = np.array(result["delta"])
        head = snapshot.model.head_w.astype(np.float64)
        cos = abs(delta @ head) / (np.linalg.norm(delta) * np.linalg.norm(head))
        assert cos == pytest.approx(1.0, abs=1e-9)


def test_layout_covers_cell(snapshot):
    cell = max(snapshot.cells(), key=lambda c: len(c["members"]))
    layout = snapshot.layout(cell["row"], cell["col"])
    assert set(layout["assignment"]) == set(cell["members"])
    slots = [tuple(v) for v in layout["assignment"].values()]
    assert len(set(slots)) == len(slots)


def test_concepts_cached_and_deterministic(snapshot):
    cell = max(snapshot.cells(), key=lambda c: len(c["members"]))
    first = snapshot.concepts(cell["row"], cell["col"])
    cache = snapshot.root / "concepts" / f"{cell['row']},{cell['col']}.json"
    assert cache.is_file()
    second = snapshot.concepts(cell["row"], cell["col"])
    assert first == second
    if first["n_segments"] >= 3:
        assert len(first["clusters"]) == 3
    assert first["flagged_fewer_than_three"] == (first["n_segments"] < 3)


def test_dimensions_cell_scope_uses_global_edges(snapshot):
    cell = max(snapshot.cells(), key=lambda c: len(c["members"]))
    global_dims = snapshot.dimensions(scope="global")
    cell_dims = snapshot.dimensions(scope="cell", cell=(cell["row"], cell["col"]))
    by_dim_global = {d["dim"]: d for d in global_dims["values"]}
    for d in cell_dims["values"]:
        assert d["bin_edges"] == by_dim_global[d["dim"]]["bin_edges"]


def test_annotations_add_list_remove(snapshot):
    cell = snapshot.cells()[0]
    ann = snapshot.annotations.add((cell["row"], cell["col"]), "looks synthetic")
    listed = snapshot.annotations.list()
    assert any(a.annotation_id == ann.annotation_id for a in listed)
    assert snapshot.annotations.remove(ann.annotation_id)
    assert all(a.annotation_id != ann.annotation_id for a in snapshot.annotations.list())
    assert not snapshot.annotations.remove(ann.annotation_id)  # tombstoned


def test_annotations_reject_empty_text(snapshot):
    with pytest.raises(ValueError, match="nonempty"):
        snapshot.annotations.add((0, 0), "   ")


def test_concurrent_annotation_adds(snapshot):
    cells = snapshot.cells()[:2]
    results = []

    def add(cell):
        results.append(snapshot.annotations.add((cell["row"], cell["col"]), "thread"))

    threads = [threading.Thread(target=add, args=(c,)) for c in cells]
    for t in threads:
        t.start()
    for t in threads:
        t.join()
    listed = {a.annotation_id for a in snapshot.annotations.list()}
    assert {r.annotation_id for r in results} <= listed
    for r in results:
        snapshot.annotations.remove(r.annotation_id)


def test_failed_build_leaves_no_partial_snapshot(tmp_path, small_manifest,
                                                  projection_file, mock_adapter):
    store = tmp_path / "store"
    with pytest.raises(Exception):
        build_snapshot(small_manifest, tmp_path / "missing-ckpt.bin", projection_file,
                       mock_adapter, store, SnapshotConfig(name="broken"))
    assert SnapshotStore(store).list() == []
    assert not (store / "broken").exists()


def test_duplicate_snapshot_id_rejected(store_dir, small_manifest, trained_checkpoint,
                                        projection_file, mock_adapter):
    with pytest.raises(SnapshotError, match="exists"):
        build_snapshot(small_manifest, trained_checkpoint, projection_file, mock_adapter,
                       store_dir, SnapshotConfig(grid_m=10, seed=0, name="snap-a"))


def test_store_lists_only_complete_snapshots(store_dir):
    (store_dir / "not-a-snapshot").mkdir(exist_ok=True)
    store = SnapshotStore(store_dir)
    assert [s.snapshot_id for s in store.list()] == ["snap-a"]
    with pytest.raises(KeyError):
        store.get("not-a-snapshot")


def test_snapshot_encode_errors_recorded(tmp_path, small_manifest, trained_checkpoint,
                                         projection_file, mock_adapter):
    from dataclasses import replace

    from fakeatlas.data import DatasetManifest

    broken = replace(small_manifest.records[0], id="gone",
                     path=tmp_path / "missing.png")
    manifest = DatasetManifest(name="with-errors",
                               records=[broken] + small_manifest.records[1:])
    snap = build_snapshot(manifest, trained_checkpoint, projection_file, mock_adapter,
                          tmp_path / "store2", SnapshotConfig(grid_m=5, name="err"))
    assert [e["id"] for e in snap.meta["encode_errors"]] == ["gone"]
    assert len(snap.points()) == len(manifest.records) - 1
