"""Per-dimension pixel relevance from last-block attention gradients.

For a distilled dimension d, let A be the last transformer block's attention
tensor and G = dV_d/dA the gradient of that dimension's scalar. The token
relevance grid is the head-average of the positive part of G (.) A (Hadamard
product, negatives clamped per head before averaging), read from the class
token's row. The grid is bilinearly upscaled to image size and min-max
normalized to [0, 1]; a constant grid degenerates to an all-zero map.

An optional multi-block mode accumulates R <- R + A_bar R across blocks,
starting from an all-ones token matrix, before the same class-row extraction.
"""

from __future__ import annotations

from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .adapters import BaseEncoderAdapter
from .binio import PayloadReader, read_artifact, write_artifact
from .data import PixelTensor
from .detector import DetectorModel
from .encoder import ForgetProjection
from .errors import AdapterError, NumericError

CLS_INDEX = 0
ROW_SUM_TOL = 1e-4


@dataclass
class AttentionCapture:
    a_last: np.ndarray  # (heads, n_tokens, n_tokens), rows sum to 1
    grad_a_last: np.ndarray  # same shape
    grid: tuple[int, int]  # patch grid (rows, cols); n_tokens = rows*cols + 1
    target_dim: int  # 1-based distilled dimension

    def __post_init__(self):
        if self.a_last.shape != self.grad_a_last.shape or self.a_last.ndim != 3:
            raise NumericError(
                f"attention/gradient shape mismatch: {self.a_last.shape} vs "
                f"{self.grad_a_last.shape}"
            )
        n = self.a_last.shape[1]
        if self.grid[0] * self.grid[1] + 1 != n:
            raise NumericError(f"grid {self.grid} inconsistent with {n} tokens")
        row_sums = self.a_last.sum(axis=2)
        if np.max(np.abs(row_sums - 1.0)) > ROW_SUM_TOL:
            raise NumericError("attention rows do not sum to 1")


@dataclass(frozen=True)
class TokenRelevanceMap:
    grid: np.ndarray  # (rows, cols) nonnegative float64
    target_dim: int


@dataclass(frozen=True)
class PixelRelevanceMap:
    map: np.ndarray  # (H, W) float32 in [0, 1]
    target_dim: int
    degenerate: bool  # constant source grid -> all zeros


@dataclass
class RelevanceStack:
    maps: list[PixelRelevanceMap]  # exactly one per distilled dimension, in order
    source_id: str

    def __post_init__(self):
        if len(self.maps) != 16:
            raise ValueError(f"relevance stack needs 16 maps, got {len(self.maps)}")
        shapes = {m.map.shape for m in self.maps}
        if len(shapes) != 1:
            raise ValueError(f"inconsistent map shapes in stack: {shapes}")

    @property
    def shape(self) -> tuple[int, int]:
        return self.maps[0].map.shape


def capture_attention(
    pixels: PixelTensor,
    adapter: BaseEncoderAdapter,
    projection: ForgetProjection,
    model: DetectorModel,
    dim: int,
) -> AttentionCapture:
    """Forward + one backward pass from distilled dimension ``dim`` (1-based).

    The scalar being differentiated is v_dim = (W[dim] M) . e where e is the
    base embedding, so the readout handed to the adapter folds the distiller
    row through the forget projection. Adapter parameters are never modified.
    """
    if not adapter.info.supports_attention_capture:
        raise AdapterError(f"adapter {adapter.info.name} cannot capture attention")
    if not 1 <= dim <= model.distill_dim:
        raise ValueError(f"dim must be in 1..{model.distill_dim}, got {dim}")
    readout = model.W[dim - 1].astype(np.float64) @ projection.matrix.astype(np.float64)
    attn, grad, grid = adapter.capture(pixels.data, readout.astype(np.float32))
    return AttentionCapture(
        a_last=np.asarray(attn), grad_a_last=np.asarray(grad),
        grid=grid, target_dim=dim,
    )


def _clamped_head_average(capture: AttentionCapture) -> np.ndarray:
    # clamp each head's G (.) A at zero, then average over heads
    product = capture.grad_a_last.astype(np.float64) * capture.a_last.astype(np.float64)
    return np.clip(product, 0.0, None).mean(axis=0)


def _extract_patch_grid(token_matrix: np.ndarray, grid: tuple[int, int]) -> np.ndarray:
    cls_row = token_matrix[CLS_INDEX]
    patch_values = np.delete(cls_row, CLS_INDEX)
    return patch_values.reshape(grid)


def token_relevance_last(capture: AttentionCapture) -> TokenRelevanceMap:
    """Single-block token relevance: class-token row of mean_h(clamp(G (.) A))."""
    averaged = _clamped_head_average(capture)
    grid = _extract_patch_grid(averaged, capture.grid)
    return TokenRelevanceMap(grid=grid, target_dim=capture.target_dim)


def propagate_relevance_chain(captures: list[AttentionCapture]) -> TokenRelevanceMap:
    """Multi-block accumulation mode (captures ordered last block first)."""
    if not captures:
        raise ValueError("need at least one capture")
    n_tokens = captures[0].a_last.shape[1]
    for cap in captures:
        if cap.a_last.shape[1] != n_tokens:
            raise ValueError("captures disagree on token count")
    relevance = np.ones((n_tokens, n_tokens), dtype=np.float64)
    for cap in captures:
        a_bar = _clamped_head_average(cap)
        relevance = relevance + a_bar @ relevance
    grid = _extract_patch_grid(relevance, captures[0].grid)
    return TokenRelevanceMap(grid=grid, target_dim=captures[0].target_dim)


def pixel_relevance(token_map: TokenRelevanceMap, height: int, width: int) -> PixelRelevanceMap:
    """Bilinear upscale to (height, width), then min-max normalize to [0, 1].

    Min-max normalizing before or after the upscale yields the same final
    map because bilinear interpolation is affine in the values.
    """
    import torch

    rows, cols = token_map.grid.shape
    if height < rows or width < cols:
        raise ValueError(f"target {height}x{width} smaller than grid {rows}x{cols}")
    # degeneracy is a property of the source grid; interpolation of a constant
    # grid carries float rounding wobble that must not get normalized to [0, 1]
    if float(token_map.grid.max()) == float(token_map.grid.min()):
        return PixelRelevanceMap(
            map=np.zeros((height, width), dtype=np.float32),
            target_dim=token_map.target_dim, degenerate=True,
        )
    src = torch.from_numpy(np.ascontiguousarray(token_map.grid, dtype=np.float32))
    upscaled = torch.nn.functional.interpolate(
        src[None, None], size=(height, width), mode="bilinear", align_corners=False
    )[0, 0].numpy()
    lo, hi = float(upscaled.min()), float(upscaled.max())
    if hi - lo == 0.0:
        return PixelRelevanceMap(
            map=np.zeros((height, width), dtype=np.float32),
            target_dim=token_map.target_dim, degenerate=True,
        )
    normalized = (upscaled - lo) / (hi - lo)
    return PixelRelevanceMap(map=normalized.astype(np.float32),
                             target_dim=token_map.target_dim, degenerate=False)


def relevance_stack(
    pixels: PixelTensor,
    adapter: BaseEncoderAdapter,
    projection: ForgetProjection,
    model: DetectorModel,
) -> RelevanceStack:
    """One pixel relevance map per distilled dimension (independent backward passes)."""
    height, width = pixels.data.shape[:2]
    maps = []
    for dim in range(1, model.distill_dim + 1):
        capture = capture_attention(pixels, adapter, projection, model, dim)
        token_map = token_relevance_last(capture)
        maps.append(pixel_relevance(token_map, height, width))
    return RelevanceStack(maps=maps, source_id=pixels.source_id)


def write_relevance_cache(stack: RelevanceStack, path: Path | str, k: int) -> None:
    height, width = stack.shape
    header = {
        "image_id": stack.source_id, "k": k, "H": height, "W": width,
        "dims": len(stack.maps), "dtype": "f32",
    }
    write_artifact(path, header, [m.map for m in stack.maps])


def read_relevance_cache(path: Path | str) -> RelevanceStack:
    header, payload = read_artifact(path)
    height, width, dims = int(header["H"]), int(header["W"]), int(header["dims"])
    reader = PayloadReader(payload, str(path))
    maps = []
    for i in range(dims):
        plane = reader.take((height, width))
        # a non-degenerate plane always attains max 1, so all-zero means degenerate
        maps.append(PixelRelevanceMap(map=plane, target_dim=i + 1,
                                      degenerate=not np.any(plane)))
    reader.expect_exhausted()
    return RelevanceStack(maps=maps, source_id=str(header["image_id"]))
