"""Corpus ingestion: manifests, stratified splits, and pixel preprocessing.

A corpus is described by a JSON-lines manifest (one object per line with keys
``id``, ``path``, ``label`` and optional ``split``) or by a directory tree
with ``real/`` and ``fake/`` subfolders. Images are decoded, bilinearly
resized to the encoder input size, and channel-normalized with the base
encoder's published constants.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, replace
from pathlib import Path

import numpy as np
from PIL import Image, UnidentifiedImageError

from .errors import DataError, DegenerateSplitError

REAL = 0
FAKE = 1
SPLITS = ("train", "val", "test")

# Preprocessing constants published with the CLIP image encoders.
PIXEL_MEAN = np.array([0.48145466, 0.4578275, 0.40821073], dtype=np.float32)
PIXEL_STD = np.array([0.26862954, 0.26130258, 0.27577711], dtype=np.float32)

IMAGE_EXTENSIONS = {".png", ".jpg", ".jpeg", ".bmp", ".webp", ".tiff"}


@dataclass(frozen=True)
class ImageRecord:
    id: str
    path: Path
    label: int
    split: str | None = None
    height: int | None = None
    width: int | None = None


@dataclass
class DatasetManifest:
    name: str
    records: list[ImageRecord]

    @property
    def class_counts(self) -> dict[int, int]:
        counts = {REAL: 0, FAKE: 0}
        for rec in self.records:
            counts[rec.label] += 1
        return counts

    def split_records(self, split: str) -> list[ImageRecord]:
        return [r for r in self.records if r.split == split]

    def by_id(self) -> dict[str, ImageRecord]:
        return {r.id: r for r in self.records}


@dataclass(frozen=True)
class PixelTensor:
    data: np.ndarray  # (H, W, 3) float32, channel-normalized
    source_id: str


def _validate_record(rec: ImageRecord, seen: set[str], where: str) -> None:
    if rec.label not in (REAL, FAKE):
        raise DataError(f"{where}: label must be 0 (real) or 1 (fake), got {rec.label!r}")
    if rec.id in seen:
        raise DataError(f"{where}: duplicate record id {rec.id!r}")
    if rec.split is not None and rec.split not in SPLITS:
        raise DataError(f"{where}: split must be one of {SPLITS}, got {rec.split!r}")
    if not rec.path.is_file():
        raise DataError(f"{where}: image path not resolvable: {rec.path}")
    seen.add(rec.id)


def _load_jsonl_manifest(path: Path, name: str) -> DatasetManifest:
    records: list[ImageRecord] = []
    seen: set[str] = set()
    base = path.parent
    with path.open("r", encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            line = line.strip()
            if not line:
                continue
            where = f"{path.name}:{lineno}"
            try:
                obj = json.loads(line)
            except json.JSONDecodeError as exc:
                raise DataError(f"{where}: invalid JSON: {exc}") from exc
            try:
                rec_path = Path(obj["path"])
                if not rec_path.is_absolute():
                    rec_path = base / rec_path
                rec = ImageRecord(
                    id=str(obj["id"]),
                    path=rec_path,
                    label=obj["label"],
                    split=obj.get("split"),
                )
            except KeyError as exc:
                raise DataError(f"{where}: missing manifest key {exc}") from exc
            _validate_record(rec, seen, where)
            records.append(rec)
    return DatasetManifest(name=name, records=records)


def _load_directory_manifest(root: Path, name: str) -> DatasetManifest:
    records: list[ImageRecord] = []
    seen: set[str] = set()
    for label, folder in ((REAL, "real"), (FAKE, "fake")):
        sub = root / folder
        if not sub.is_dir():
            raise DataError(f"directory manifest needs a {folder}/ subfolder under {root}")
        for file in sorted(sub.rglob("*")):
            if not file.is_file() or file.suffix.lower() not in IMAGE_EXTENSIONS:
                continue
            rec = ImageRecord(
                id=file.relative_to(root).as_posix(),
                path=file,
                label=label,
            )
            _validate_record(rec, seen, str(file))
            records.append(rec)
    return DatasetManifest(name=name, records=records)


def load_manifest(path: Path | str, name: str | None = None) -> DatasetManifest:
    """Load a corpus manifest from a JSON-lines file or a real/fake directory tree."""
    path = Path(path)
    if path.is_dir():
        return _load_directory_manifest(path, name or path.name)
    if not path.is_file():
        raise DataError(f"manifest not found: {path}")
    return _load_jsonl_manifest(path, name or path.stem)


def _split_sizes(n: int, ratios: tuple[float, float, float]) -> list[int]:
    # largest-remainder allocation; ties broken by split order
    quotas = [r * n for r in ratios]
    sizes = [int(np.floor(q)) for q in quotas]
    remainders = [q - s for q, s in zip(quotas, sizes)]
    for _ in range(n - sum(sizes)):
        i = int(np.argmax(remainders))
        sizes[i] += 1
        remainders[i] = -1.0
    return sizes


def split_dataset(
    manifest: DatasetManifest,
    ratios: tuple[float, float, float] = (0.8, 0.1, 0.1),
    seed: int = 0,
) -> DatasetManifest:
    """Assign train/val/test splits, stratified per label, with a seeded shuffle.

    Deterministic: the same manifest, ratios, and seed always produce the
    same assignment. Record order is preserved.
    """
    if len(ratios) != 3 or any(r <= 0 for r in ratios):
        raise ValueError(f"ratios must be three positive fractions, got {ratios}")
    if abs(sum(ratios) - 1.0) > 1e-9:
        raise ValueError(f"ratios must sum to 1, got sum {sum(ratios)!r}")

    rng = np.random.default_rng(seed)
    assignment: dict[str, str] = {}
    for label in (REAL, FAKE):
        ids = [r.id for r in manifest.records if r.label == label]
        if not ids:
            continue
        if len(ids) < len(SPLITS):
            raise DegenerateSplitError(
                f"label {label} has {len(ids)} records, fewer than {len(SPLITS)} splits"
            )
        order = rng.permutation(len(ids))
        sizes = _split_sizes(len(ids), tuple(ratios))
        cursor = 0
        for split, size in zip(SPLITS, sizes):
            for idx in order[cursor : cursor + size]:
                assignment[ids[idx]] = split
            cursor += size

    records = [replace(rec, split=assignment.get(rec.id, rec.split)) for rec in manifest.records]
    return DatasetManifest(name=manifest.name, records=records)


def load_pixels(record: ImageRecord, size: int = 224) -> PixelTensor:
    """Decode an image, resize to size x size (bilinear), and channel-normalize."""
    try:
        with Image.open(record.path) as img:
            img = img.convert("RGB")
            if img.width == 0 or img.height == 0:
                raise DataError(f"zero-area image: {record.path}")
            img = img.resize((size, size), Image.Resampling.BILINEAR)
            raw = np.asarray(img, dtype=np.float32) / 255.0
    except (UnidentifiedImageError, OSError) as exc:
        raise DataError(f"cannot decode image {record.path}: {exc}") from exc
    data = (raw - PIXEL_MEAN) / PIXEL_STD
    return PixelTensor(data=np.ascontiguousarray(data, dtype=np.float32), source_id=record.id)


def save_manifest(manifest: DatasetManifest, path: Path | str) -> None:
    """Write a manifest back out as JSON-lines (paths stored absolute)."""
    lines = []
    for rec in manifest.records:
        obj = {"id": rec.id, "path": str(Path(rec.path).resolve()), "label": rec.label}
        if rec.split is not None:
            obj["split"] = rec.split
        lines.append(json.dumps(obj, sort_keys=True))
    Path(path).write_text("\n".join(lines) + "\n", encoding="utf-8")
