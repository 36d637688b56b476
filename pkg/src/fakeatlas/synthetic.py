"""Synthetic desk-scale corpora for tests, demos, and benchmarks.

Real images are smooth gradients with a soft disc; fake images are
high-frequency noise with blocky artifacts. The embedding-space toy corpus is
a pair of unit-covariance Gaussians separated along the first few
coordinates. Everything is seeded and deterministic.
"""

from __future__ import annotations

from pathlib import Path

import numpy as np
from PIL import Image

from .data import DatasetManifest, load_manifest


def two_gaussian_corpus(
    n: int = 2000,
    dims: int = 256,
    informative: int = 8,
    offset: float = 1.0,
    seed: int = 0,
) -> tuple[np.ndarray, np.ndarray]:
    """Two-class Gaussian embedding corpus: means -+offset on the leading
    ``informative`` coordinates, unit covariance. Returns (X, y) shuffled."""
    rng = np.random.default_rng(seed)
    half = n // 2
    mean = np.zeros(dims)
    mean[:informative] = offset
    x_real = rng.standard_normal((half, dims)) - mean
    x_fake = rng.standard_normal((n - half, dims)) + mean
    x = np.vstack([x_real, x_fake]).astype(np.float32)
    y = np.concatenate([np.zeros(half, dtype=np.int64), np.ones(n - half, dtype=np.int64)])
    order = rng.permutation(n)
    return x[order], y[order]


def _real_image(rng: np.random.Generator, size: int) -> np.ndarray:
    ramp = np.linspace(0.0, 1.0, size, dtype=np.float32)
    angle = rng.random() * 2 * np.pi
    yy, xx = np.meshgrid(ramp, ramp, indexing="ij")
    field = np.cos(angle) * xx + np.sin(angle) * yy
    field = (field - field.min()) / (field.max() - field.min() + 1e-9)
    cy, cx = rng.random(2) * 0.6 + 0.2
    disc = np.exp(-(((yy - cy) ** 2 + (xx - cx) ** 2) / (2 * (0.12 ** 2))))
    base = 0.7 * field + 0.3 * disc
    tint = rng.random(3) * 0.4 + 0.5
    img = np.stack([base * t for t in tint], axis=2)
    return (np.clip(img, 0, 1) * 255).astype(np.uint8)


def _fake_image(rng: np.random.Generator, size: int) -> np.ndarray:
    noise = rng.random((size, size, 3)).astype(np.float32)
    block = rng.integers(4, 12)
    reps = size // block + 1
    tiles = rng.random((reps, reps, 3)).astype(np.float32)
    tiled = np.kron(tiles, np.ones((block, block, 1), dtype=np.float32))[:size, :size]
    img = 0.6 * noise + 0.4 * tiled
    return (np.clip(img, 0, 1) * 255).astype(np.uint8)


def write_image_corpus(root: Path | str, n_per_class: int = 200, size: int = 64,
                       seed: int = 0) -> DatasetManifest:
    """Write a real/fake PNG tree under ``root`` and return its manifest."""
    root = Path(root)
    rng = np.random.default_rng(seed)
    for label_dir, maker in (("real", _real_image), ("fake", _fake_image)):
        out = root / label_dir
        out.mkdir(parents=True, exist_ok=True)
        for i in range(n_per_class):
            Image.fromarray(maker(rng, size)).save(out / f"{i:04d}.png")
    return load_manifest(root)


def write_forget_corpus(root: Path | str, n_per_class: int = 20, size: int = 64,
                        seed: int = 0) -> Path:
    """Write natural / text / overlay classes for the projection trainer."""
    root = Path(root)
    rng = np.random.default_rng(seed)

    def glyph_rows(img: np.ndarray) -> np.ndarray:
        # rectangle runs standing in for text lines (font-free)
        out = img.copy()
        for row in range(8, size - 8, 14):
            col = 4
            while col < size - 6:
                width = int(rng.integers(3, 8))
                out[row : row + 6, col : col + width] = 0
                col += width + int(rng.integers(2, 5))
        return out

    for cls in ("natural", "text", "overlay"):
        (root / cls).mkdir(parents=True, exist_ok=True)
    for i in range(n_per_class):
        natural = _real_image(rng, size)
        blank = np.full((size, size, 3), 255, dtype=np.uint8)
        Image.fromarray(natural).save(root / "natural" / f"{i:03d}.png")
        Image.fromarray(glyph_rows(blank)).save(root / "text" / f"{i:03d}.png")
        Image.fromarray(glyph_rows(natural)).save(root / "overlay" / f"{i:03d}.png")
    return root
