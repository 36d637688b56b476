#!/usr/bin/env python3
"""Record real API payloads into frontend/tests/api-samples.json.

Builds a small deterministic snapshot with the mock encoder, then captures
one response per endpoint the explorer consumes. Rerun whenever the wire
format changes.
"""

import argparse
import json
import tempfile
from pathlib import Path

from fastapi.testclient import TestClient

from fakeatlas.adapters import MockEncoderAdapter
from fakeatlas.data import load_manifest, split_dataset
from fakeatlas.detector import TrainConfig, save_checkpoint, train_detector
from fakeatlas.encoder import (encode_visual_batch, load_projection,
                               random_projection, save_projection)
from fakeatlas.server import create_app
from fakeatlas.snapshot import SnapshotConfig, SnapshotStore, build_snapshot
from fakeatlas.synthetic import write_image_corpus


def main() -> None:
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--out", type=Path,
                        default=Path(__file__).parent.parent / "frontend/tests/api-samples.json")
    parser.add_argument("--seed", type=int, default=3)
    args = parser.parse_args()

    root = Path(tempfile.mkdtemp())
    write_image_corpus(root / "corpus", n_per_class=15, size=64, seed=args.seed)
    manifest = split_dataset(load_manifest(root / "corpus", name="contract"),
                             seed=args.seed)
    adapter = MockEncoderAdapter(seed=args.seed)
    proj_path = root / "projection.bin"
    save_projection(random_projection(seed=args.seed), proj_path)
    projection = load_projection(proj_path)

    labels = {r.id: r.label for r in manifest.records}
    pairs = {}
    for split in ("train", "val"):
        batch = encode_visual_batch(manifest.split_records(split), adapter, projection)
        pairs[split] = [(e, labels[e.source_id]) for e in batch.embeddings]
    model = train_detector(pairs["train"], pairs["val"],
                           TrainConfig(max_epochs=2, patience=2), seed=args.seed)
    ckpt = root / "checkpoint.bin"
    save_checkpoint(model, ckpt)
    build_snapshot(manifest, ckpt, proj_path, adapter, root / "store",
                   SnapshotConfig(grid_m=8, seed=args.seed, name="contract"))

    client = TestClient(create_app(SnapshotStore(root / "store")))
    base = "/api/v1/snapshots"
    cells = client.get(f"{base}/contract/cells").json()
    cell = max(cells, key=lambda c: len(c["members"]))
    image_id = cell["members"][0]
    row, col = cell["row"], cell["col"]
    annotation = client.post(f"{base}/contract/annotations",
                             json={"cell": [row, col], "text": "contract sample"}).json()
    samples = {
        "snapshots": client.get(base).json(),
        "points": client.get(f"{base}/contract/points").json()[:3],
        "cells": cells[:3],
        "cell": client.get(f"{base}/contract/cells/{row},{col}").json(),
        "layout": client.get(f"{base}/contract/cells/{row},{col}/layout").json(),
        "concepts": client.get(f"{base}/contract/cells/{row},{col}/concepts").json(),
        "contributions": client.get(
            f"{base}/contract/images/{image_id}/contributions").json(),
        "dimensions_global": client.get(f"{base}/contract/dimensions").json(),
        "dimensions_cell": client.get(
            f"{base}/contract/dimensions?scope=cell&cell={row},{col}&filter=all").json(),
        "whatif": client.post(f"{base}/contract/whatif",
                              json={"image_id": image_id}).json(),
        "annotation": annotation,
    }
    args.out.write_text(json.dumps(samples, indent=1, sort_keys=True))
    print(f"wrote {args.out} ({args.out.stat().st_size} bytes)")


if __name__ == "__main__":
    main()
