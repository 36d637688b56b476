"""Embedding pipeline: frozen base encoding plus the text-forgetting projection.

Images are first embedded by a frozen base encoder (512-d generic visual
vectors by default) and then mapped through a row-orthonormal "forget"
projection that strips latent text-related directions, yielding 256-d
visual-centric vectors. The projection is normally a loaded artifact; a
simplified trainer is provided for building one from a small corpus of
natural / text-only / text-overlaid images.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .adapters import BaseEncoderAdapter
from .binio import PayloadReader, read_artifact, write_artifact
from .data import DatasetManifest, ImageRecord, PixelTensor, load_pixels
from .errors import AdapterError, DataError, NumericError, TrainingDataError
from .util import orthonormal_rows

DEFAULT_EMBED_DIM = 512
DEFAULT_VISUAL_DIM = 256
ORTHO_DEFECT_MAX = 0.05


@dataclass(frozen=True)
class GenericEmbedding:
    vector: np.ndarray  # (embed_dim,) float32
    source_id: str


@dataclass(frozen=True)
class VisualEmbedding:
    vector: np.ndarray  # (visual_dim,) float32
    source_id: str


@dataclass
class ForgetProjection:
    matrix: np.ndarray  # (visual_dim, embed_dim) float32
    provenance: str  # "loaded" | "trained" | "bypass"

    def __post_init__(self):
        self.matrix = np.ascontiguousarray(self.matrix, dtype=np.float32)
        if self.matrix.ndim != 2:
            raise DataError("projection matrix must be 2-D")
        if self.provenance not in ("loaded", "trained", "bypass"):
            raise DataError(f"unknown projection provenance {self.provenance!r}")
        if self.provenance != "bypass":
            defect = self.orthonormality_defect()
            if defect > ORTHO_DEFECT_MAX:
                raise DataError(
                    f"projection row-orthonormality defect {defect:.4g} exceeds "
                    f"{ORTHO_DEFECT_MAX}"
                )

    def orthonormality_defect(self) -> float:
        m = self.matrix.astype(np.float64)
        gram = m @ m.T
        return float(np.sum((np.eye(m.shape[0]) - gram) ** 2))


def save_projection(projection: ForgetProjection, path: Path | str) -> None:
    rows, cols = projection.matrix.shape
    header = {"rows": rows, "cols": cols, "dtype": "f32", "layout": "row-major"}
    write_artifact(path, header, [projection.matrix])


def load_projection(path: Path | str) -> ForgetProjection:
    header, payload = read_artifact(path)
    for key in ("rows", "cols"):
        if key not in header:
            raise DataError(f"projection artifact missing header key {key!r}: {path}")
    if header.get("dtype") != "f32" or header.get("layout") != "row-major":
        raise DataError(f"unsupported projection encoding in {path}")
    reader = PayloadReader(payload, str(path))
    matrix = reader.take((int(header["rows"]), int(header["cols"])))
    reader.expect_exhausted()
    return ForgetProjection(matrix=matrix, provenance="loaded")


def random_projection(rows: int = DEFAULT_VISUAL_DIM, cols: int = DEFAULT_EMBED_DIM,
                      seed: int = 0) -> ForgetProjection:
    """Seeded row-orthonormal projection (used when no artifact is supplied)."""
    return ForgetProjection(matrix=orthonormal_rows(rows, cols, seed), provenance="trained")


def bypass_projection(rows: int = DEFAULT_VISUAL_DIM,
                      cols: int = DEFAULT_EMBED_DIM) -> ForgetProjection:
    """Leading-rows identity slice; permitted only in tests."""
    matrix = np.eye(rows, cols, dtype=np.float32)
    return ForgetProjection(matrix=matrix, provenance="bypass")


def encode_base(pixels: PixelTensor, adapter: BaseEncoderAdapter) -> GenericEmbedding:
    """Run the frozen base encoder on one preprocessed image."""
    vector = adapter.encode(pixels.data)
    if vector.shape != (adapter.info.embed_dim,):
        raise AdapterError(
            f"adapter {adapter.info.name} returned shape {vector.shape}, "
            f"expected ({adapter.info.embed_dim},)"
        )
    if not np.all(np.isfinite(vector)):
        raise NumericError(f"non-finite embedding for {pixels.source_id}")
    return GenericEmbedding(vector=vector.astype(np.float32), source_id=pixels.source_id)


def apply_forget_projection(embedding: GenericEmbedding,
                            projection: ForgetProjection) -> VisualEmbedding:
    rows, cols = projection.matrix.shape
    if embedding.vector.shape != (cols,):
        raise ValueError(
            f"embedding length {embedding.vector.shape} incompatible with "
            f"projection ({rows}, {cols})"
        )
    out = projection.matrix @ embedding.vector
    if not np.all(np.isfinite(out)):
        raise NumericError(f"non-finite projected embedding for {embedding.source_id}")
    return VisualEmbedding(vector=out.astype(np.float32), source_id=embedding.source_id)


@dataclass
class BatchEncodeResult:
    embeddings: list[VisualEmbedding] = field(default_factory=list)
    errors: list[tuple[str, str]] = field(default_factory=list)  # (record id, message)


def encode_visual_batch(records: list[ImageRecord], adapter: BaseEncoderAdapter,
                        projection: ForgetProjection) -> BatchEncodeResult:
    """Encode many records; failures are collected per record, order preserved."""
    result = BatchEncodeResult()
    for record in records:
        try:
            pixels = load_pixels(record, size=adapter.info.input_size)
            visual = apply_forget_projection(encode_base(pixels, adapter), projection)
        except (DataError, AdapterError, NumericError, ValueError) as exc:
            result.errors.append((record.id, str(exc)))
            continue
        result.embeddings.append(visual)
    return result


def _text_direction_samples(embeddings: dict[str, np.ndarray]) -> np.ndarray:
    """Unit vectors spanning text-related content in base-embedding space.

    Uses text-only embeddings directly plus the offsets of overlaid images
    from the mean natural image.
    """
    natural_mean = embeddings["natural"].mean(axis=0)
    directions = [embeddings["text"], embeddings["overlay"] - natural_mean]
    stacked = np.vstack(directions)
    norms = np.linalg.norm(stacked, axis=1, keepdims=True)
    norms[norms == 0] = 1.0
    return stacked / norms


FORGET_CLASSES = ("natural", "text", "overlay")


def train_forget_projection(
    corpus: Path | str | dict[str, list[Path]],
    adapter: BaseEncoderAdapter,
    seed: int = 0,
    rows: int = DEFAULT_VISUAL_DIM,
    steps: int = 300,
    lr: float = 1e-2,
    text_weight: float = 4.0,
) -> ForgetProjection:
    """Simplified projection trainer (optional mode).

    ``corpus`` is a directory with ``natural/``, ``text/`` and ``overlay/``
    subfolders (or an explicit class -> image paths mapping). The loss keeps
    the rows orthonormal while suppressing the projection's response to
    text-direction samples. A final symmetric orthonormalization pins the
    result onto the orthonormal manifold.
    """
    import torch

    if isinstance(corpus, (str, Path)):
        root = Path(corpus)
        class_paths = {
            cls: sorted(
                p for p in (root / cls).rglob("*") if p.is_file()
            ) if (root / cls).is_dir() else []
            for cls in FORGET_CLASSES
        }
    else:
        class_paths = {cls: list(corpus.get(cls, [])) for cls in FORGET_CLASSES}

    missing = [cls for cls in FORGET_CLASSES if not class_paths[cls]]
    if missing:
        raise TrainingDataError(f"forget-projection corpus missing classes: {missing}")

    size = adapter.info.input_size
    embeddings: dict[str, np.ndarray] = {}
    for cls in FORGET_CLASSES:
        vecs = []
        for idx, path in enumerate(class_paths[cls]):
            record = ImageRecord(id=f"{cls}/{idx}", path=Path(path), label=0)
            vecs.append(encode_base(load_pixels(record, size=size), adapter).vector)
        embeddings[cls] = np.vstack(vecs).astype(np.float64)

    text_dirs = torch.from_numpy(_text_direction_samples(embeddings))
    cols = adapter.info.embed_dim
    m0 = orthonormal_rows(rows, cols, seed).astype(np.float64)
    m = torch.from_numpy(m0).clone().requires_grad_(True)
    eye = torch.eye(rows, dtype=torch.float64)
    opt = torch.optim.Adam([m], lr=lr)
    for _ in range(steps):
        opt.zero_grad()
        gram_defect = ((eye - m @ m.T) ** 2).sum()
        text_leak = ((text_dirs @ m.T) ** 2).sum(dim=1).mean()
        loss = gram_defect + text_weight * text_leak
        loss.backward()
        opt.step()

    with torch.no_grad():
        # symmetric orthonormalization: closest matrix with orthonormal rows
        u, _, vt = torch.linalg.svd(m, full_matrices=False)
        final = (u @ vt).numpy()
    return ForgetProjection(matrix=final.astype(np.float32), provenance="trained")
