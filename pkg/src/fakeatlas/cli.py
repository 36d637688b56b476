"""Command-line entry points: train, analyze, serve, export."""

from __future__ import annotations

import json
import shutil
import sys
from pathlib import Path

import click
import numpy as np

from .adapters import build_adapter
from .data import load_manifest, split_dataset
from .detector import TrainConfig, evaluate, distill, load_checkpoint, save_checkpoint, train_detector
from .encoder import (apply_forget_projection, encode_visual_batch, load_projection,
                      random_projection, save_projection)
from .snapshot import SnapshotConfig, SnapshotStore, build_snapshot
from .util import write_json


def _adapter_from_options(name: str, seed: int):
    return build_adapter({"name": name, "seed": seed})


def _resolve_projection(projection: str | None, checkpoint: str | None, seed: int,
                        out_dir: Path | None = None) -> Path:
    """Projection artifact path: explicit flag, checkpoint sibling, or a fresh
    seeded orthonormal artifact written next to the outputs."""
    if projection:
        return Path(projection)
    if checkpoint:
        sibling = Path(checkpoint).parent / "projection.bin"
        if sibling.is_file():
            return sibling
    if out_dir is None:
        raise click.UsageError("no projection artifact found; pass --projection")
    path = out_dir / "projection.bin"
    if not path.is_file():
        save_projection(random_projection(seed=seed), path)
    return path


@click.group()
def main():
    """Real/fake image detector workbench."""


@main.command()
@click.option("--manifest", type=click.Path(exists=True), default=None,
              help="Image manifest (JSONL or real/fake directory).")
@click.option("--embeddings", type=click.Path(exists=True), default=None,
              help="Precomputed visual embeddings (.npz with X, y, optional X_val, y_val).")
@click.option("--out", type=click.Path(), required=True, help="Output directory.")
@click.option("--seed", type=int, default=0, show_default=True)
@click.option("--lambda-bce", type=float, default=3.0, show_default=True)
@click.option("--lambda-ortho", type=float, default=1.0, show_default=True)
@click.option("--batch", type=int, default=32, show_default=True)
@click.option("--lr", type=float, default=1e-3, show_default=True)
@click.option("--epochs", type=int, default=50, show_default=True)
@click.option("--patience", type=int, default=3, show_default=True)
@click.option("--adapter", type=click.Choice(["mock", "tiny", "clip"]), default="mock",
              show_default=True)
@click.option("--projection", type=click.Path(exists=True), default=None,
              help="Projection artifact; defaults to a fresh seeded one.")
@click.option("--split-ratios", default="0.8,0.1,0.1", show_default=True)
def train(manifest, embeddings, out, seed, lambda_bce, lambda_ortho, batch, lr,
          epochs, patience, adapter, projection, split_ratios):
    """Train the distiller + head detector and write a checkpoint."""
    if (manifest is None) == (embeddings is None):
        raise click.UsageError("pass exactly one of --manifest / --embeddings")
    out_dir = Path(out)
    out_dir.mkdir(parents=True, exist_ok=True)
    config = TrainConfig(lambda_bce=lambda_bce, lambda_ortho=lambda_ortho,
                         batch_size=batch, lr=lr, max_epochs=epochs, patience=patience)

    if embeddings:
        blob = np.load(embeddings)
        x, y = blob["X"], blob["y"]
        train_pairs = [(x[i], int(y[i])) for i in range(len(y))]
        if "X_val" in blob:
            xv, yv = blob["X_val"], blob["y_val"]
            val_pairs = [(xv[i], int(yv[i])) for i in range(len(yv))]
        else:
            val_pairs = []
    else:
        data = load_manifest(manifest)
        if not any(r.split for r in data.records):
            ratios = tuple(float(v) for v in split_ratios.split(","))
            data = split_dataset(data, ratios=ratios, seed=seed)
        adapter_obj = _adapter_from_options(adapter, seed)
        proj = load_projection(_resolve_projection(projection, None, seed, out_dir))
        pairs = {}
        for split in ("train", "val"):
            records = data.split_records(split)
            batch_result = encode_visual_batch(records, adapter_obj, proj)
            if batch_result.errors:
                click.echo(f"warning: {len(batch_result.errors)} {split} records "
                           f"failed to encode", err=True)
            labels = {r.id: r.label for r in records}
            pairs[split] = [(e, labels[e.source_id]) for e in batch_result.embeddings]
        train_pairs, val_pairs = pairs["train"], pairs["val"]

    model = train_detector(train_pairs, val_pairs, config, seed=seed)
    save_checkpoint(model, out_dir / "checkpoint.bin")
    if embeddings is None and projection:
        shutil.copyfile(projection, out_dir / "projection.bin")
    write_json(out_dir / "training_report.json", model.training_meta)

    if val_pairs:
        distilled_pairs = [(distill(v, model), lbl) for v, lbl in val_pairs]
        stats = evaluate(distilled_pairs, model)
        click.echo(f"val accuracy {stats.accuracy:.4f} "
                   f"(tp={stats.tp} tn={stats.tn} fp={stats.fp} fn={stats.fn})")
    click.echo(f"checkpoint written to {out_dir / 'checkpoint.bin'}")


@main.command()
@click.option("--manifest", type=click.Path(exists=True), required=True)
@click.option("--checkpoint", type=click.Path(exists=True), required=True)
@click.option("--out", type=click.Path(), required=True, help="Snapshot store directory.")
@click.option("--grid", type=int, default=30, show_default=True)
@click.option("--seed", type=int, default=0, show_default=True)
@click.option("--adapter", type=click.Choice(["mock", "tiny", "clip"]), default="mock",
              show_default=True)
@click.option("--projection", type=click.Path(exists=True), default=None,
              help="Defaults to projection.bin next to the checkpoint.")
@click.option("--name", default=None, help="Snapshot id (default: derived).")
def analyze(manifest, checkpoint, out, grid, seed, adapter, projection, name):
    """Build an immutable analysis snapshot for a corpus."""
    data = load_manifest(manifest)
    adapter_obj = _adapter_from_options(adapter, seed)
    projection_path = _resolve_projection(projection, checkpoint, seed)
    config = SnapshotConfig(grid_m=grid, seed=seed, name=name)
    snap = build_snapshot(data, checkpoint, projection_path, adapter_obj, out, config)
    click.echo(f"snapshot {snap.snapshot_id} written under {out}")


@main.command()
@click.option("--store", type=click.Path(exists=True), required=True)
@click.option("--addr", default="127.0.0.1:8000", show_default=True)
def serve(store, addr):
    """Serve the analysis API over a snapshot store."""
    from .server import serve as run_server

    host, _, port = addr.partition(":")
    run_server(store, host=host or "127.0.0.1", port=int(port or 8000))


@main.command()
@click.option("--snapshot", type=click.Path(exists=True), required=True,
              help="Snapshot directory.")
@click.option("--what", type=click.Choice(["contributions", "relevance", "cells"]),
              required=True)
@click.option("--out", type=click.Path(), default=None,
              help="Output file/directory (default: stdout for cells/contributions).")
def export(snapshot, what, out):
    """Export snapshot artifacts for downstream tooling."""
    from .snapshot import Snapshot

    snap = Snapshot(Path(snapshot))
    if what == "cells":
        payload = json.dumps(snap.cells(), indent=2, sort_keys=True)
        if out:
            Path(out).write_text(payload + "\n", encoding="utf-8")
        else:
            click.echo(payload)
    elif what == "contributions":
        lines = [json.dumps(snap.contributions(p["image_id"]), sort_keys=True)
                 for p in snap.points()]
        text = "\n".join(lines) + "\n"
        if out:
            Path(out).write_text(text, encoding="utf-8")
        else:
            sys.stdout.write(text)
    else:  # relevance: materialize every cache and copy it out
        out_dir = Path(out) if out else Path("relevance-export")
        out_dir.mkdir(parents=True, exist_ok=True)
        for p in snap.points():
            snap.relevance(p["image_id"])
        for cache in sorted((snap.root / "relevance").glob("*.bin")):
            shutil.copyfile(cache, out_dir / cache.name)
        click.echo(f"relevance caches exported to {out_dir}")


if __name__ == "__main__":
    main()
