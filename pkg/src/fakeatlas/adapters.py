"""Frozen base-encoder adapters.

Every adapter maps a preprocessed (H, W, 3) float32 pixel array to a fixed-size
embedding and, when it supports attention capture, can additionally return the
last attention tensor together with the gradient of a linear readout of the
embedding with respect to that tensor. Adapters are frozen: nothing in this
module ever mutates adapter parameters.

Three adapters are provided:

* ``MockEncoderAdapter`` — deterministic, weight-free stand-in used by the
  test suite and desk-scale runs. Embeddings combine coarse image statistics
  with hash-seeded noise; attention tensors are synthesized from the same
  hashes.
* ``TinyViTAdapter`` — a small real vision transformer with seeded weights.
  Attention capture is exact (autograd), which makes it the reference for
  gradient-correctness checks.
* ``ClipVisionAdapter`` — the production CLIP ViT-B/32 image tower (optional;
  requires ``transformers`` and downloaded weights).
"""

from __future__ import annotations

import hashlib
from dataclasses import dataclass

import numpy as np

from .errors import AdapterError

CaptureResult = tuple[np.ndarray, np.ndarray, tuple[int, int]]


@dataclass(frozen=True)
class AdapterInfo:
    name: str
    input_size: int
    embed_dim: int
    patch_grid: int
    heads: int
    supports_attention_capture: bool


class BaseEncoderAdapter:
    """Interface shared by all adapters."""

    info: AdapterInfo

    def encode(self, pixels: np.ndarray) -> np.ndarray:
        """Embed one (input_size, input_size, 3) float32 array into embed_dim floats."""
        raise NotImplementedError

    def capture(self, pixels: np.ndarray, readout: np.ndarray) -> CaptureResult:
        """Return (attention, attention_gradient, patch_grid_shape) for the last block.

        ``attention`` has shape (heads, n_tokens, n_tokens) with rows summing
        to 1; the gradient is d(readout . embedding)/d(attention). Token 0 is
        the class token; the remaining tokens raster-scan the patch grid.
        """
        raise NotImplementedError

    def parameter_checksum(self) -> str:
        """Stable digest of all adapter parameters (frozen-encoder contract)."""
        raise NotImplementedError

    def spec(self) -> dict:
        """JSON-serializable description sufficient to rebuild this adapter."""
        raise NotImplementedError

    def _check_input(self, pixels: np.ndarray) -> None:
        size = self.info.input_size
        if pixels.ndim != 3 or pixels.shape != (size, size, 3):
            raise ValueError(
                f"adapter {self.info.name} expects ({size}, {size}, 3) pixels, "
                f"got {pixels.shape}"
            )


def _digest_seed(*parts: bytes) -> np.random.Generator:
    digest = hashlib.blake2b(b"\x00".join(parts), digest_size=16).digest()
    return np.random.default_rng(int.from_bytes(digest, "little"))


class MockEncoderAdapter(BaseEncoderAdapter):
    """Deterministic pseudo-encoder for tests and offline runs.

    The first 64 embedding dimensions carry standardized 8x8 block means of
    the grayscale image (so embeddings of visually different images differ in
    a structured way); the rest is hash-seeded noise. Attention tensors are
    synthesized: the attention itself depends only on the image, while its
    "gradient" depends on the image and the readout vector and scales with
    the readout norm (so an all-zero readout yields an all-zero gradient,
    matching the behavior of a real linear readout).
    """

    def __init__(self, seed: int = 0, input_size: int = 224, embed_dim: int = 512,
                 patch_grid: int = 7, heads: int = 12):
        self.seed = seed
        self.info = AdapterInfo(
            name="mock",
            input_size=input_size,
            embed_dim=embed_dim,
            patch_grid=patch_grid,
            heads=heads,
            supports_attention_capture=True,
        )

    def _seed_bytes(self) -> bytes:
        return f"mock:{self.seed}:{self.info.input_size}:{self.info.embed_dim}".encode()

    def encode(self, pixels: np.ndarray) -> np.ndarray:
        self._check_input(pixels)
        pixels = np.ascontiguousarray(pixels, dtype=np.float32)
        gray = pixels.mean(axis=2)
        blocks = self.info.input_size // 8
        pooled = gray[: blocks * 8, : blocks * 8].reshape(8, blocks, 8, blocks).mean(axis=(1, 3))
        pooled = pooled.ravel()
        spread = pooled.std()
        pooled = (pooled - pooled.mean()) / (spread if spread > 0 else 1.0)

        rng = _digest_seed(self._seed_bytes(), pixels.tobytes())
        noise = rng.standard_normal(self.info.embed_dim).astype(np.float32)
        vec = noise * 0.5
        vec[:64] += pooled.astype(np.float32)
        return vec

    def capture(self, pixels: np.ndarray, readout: np.ndarray) -> CaptureResult:
        self._check_input(pixels)
        pixels = np.ascontiguousarray(pixels, dtype=np.float32)
        k = self.info.patch_grid
        n = k * k + 1
        attn_rng = _digest_seed(self._seed_bytes(), b"attn", pixels.tobytes())
        attn = attn_rng.random((self.info.heads, n, n)).astype(np.float32) + 1e-3
        attn /= attn.sum(axis=2, keepdims=True)

        readout = np.asarray(readout, dtype=np.float32)
        scale = float(np.linalg.norm(readout))
        if scale == 0.0:
            grad = np.zeros_like(attn)
        else:
            grad_rng = _digest_seed(
                self._seed_bytes(), b"grad", pixels.tobytes(), readout.tobytes()
            )
            grad = grad_rng.standard_normal(attn.shape).astype(np.float32) * scale
        return attn, grad, (k, k)

    def parameter_checksum(self) -> str:
        return hashlib.sha256(self._seed_bytes()).hexdigest()

    def spec(self) -> dict:
        return {
            "name": "mock",
            "seed": self.seed,
            "input_size": self.info.input_size,
            "embed_dim": self.info.embed_dim,
            "patch_grid": self.info.patch_grid,
            "heads": self.info.heads,
        }


class TinyViTAdapter(BaseEncoderAdapter):
    """Small real vision transformer with seeded frozen weights.

    Serves as a genuinely differentiable encoder: ``capture`` runs a forward
    pass, retains the last block's attention, and backpropagates the linear
    readout of the embedding through autograd. ``forward_from_attention``
    recomputes the embedding treating the last attention tensor as a free
    input, which is what a finite-difference check needs.
    """

    def __init__(self, seed: int = 0, input_size: int = 32, patch_size: int = 8,
                 width: int = 32, heads: int = 2, blocks: int = 2,
                 embed_dim: int = 512, dtype: str = "float32"):
        import torch

        if input_size % patch_size != 0:
            raise ValueError("input_size must be a multiple of patch_size")
        if width % heads != 0:
            raise ValueError("width must be a multiple of heads")
        self.torch = torch
        self.seed = seed
        self.patch_size = patch_size
        self.width = width
        self.blocks = blocks
        self.dtype = getattr(torch, dtype)
        self._dtype_name = dtype
        k = input_size // patch_size
        self.info = AdapterInfo(
            name="tiny",
            input_size=input_size,
            embed_dim=embed_dim,
            patch_grid=k,
            heads=heads,
            supports_attention_capture=True,
        )
        gen = torch.Generator().manual_seed(seed)

        def mat(*shape, scale):
            return (torch.randn(*shape, generator=gen, dtype=torch.float32) * scale).to(self.dtype)

        d = width
        self.patch_w = mat(patch_size * patch_size * 3, d, scale=0.2)
        self.cls_tok = mat(d, scale=0.2)
        n_tokens = k * k + 1
        self.pos = mat(n_tokens, d, scale=0.2)
        self.params_per_block = []
        for _ in range(blocks):
            self.params_per_block.append({
                "qkv_w": mat(d, 3 * d, scale=d ** -0.5),
                "qkv_b": mat(3 * d, scale=0.02),
                "proj_w": mat(d, d, scale=d ** -0.5),
                "proj_b": mat(d, scale=0.02),
                "mlp_w1": mat(d, 2 * d, scale=d ** -0.5),
                "mlp_b1": mat(2 * d, scale=0.02),
                "mlp_w2": mat(2 * d, d, scale=(2 * d) ** -0.5),
                "mlp_b2": mat(d, scale=0.02),
            })
        self.head_w = mat(d, embed_dim, scale=d ** -0.5)

    def _tokens(self, pixels) -> "object":
        torch = self.torch
        p = self.patch_size
        x = torch.from_numpy(np.ascontiguousarray(pixels)).to(self.dtype)  # (H, W, 3)
        h, w, _ = x.shape
        if h % p or w % p:
            raise ValueError(f"pixel shape {x.shape} not divisible by patch {p}")
        gh, gw = h // p, w // p
        x = x.reshape(gh, p, gw, p, 3).permute(0, 2, 1, 3, 4).reshape(gh * gw, p * p * 3)
        tok = x @ self.patch_w
        tok = torch.cat([self.cls_tok[None, :], tok], dim=0)
        n = tok.shape[0]
        pos = self.pos[:n] if n <= self.pos.shape[0] else self._extended_pos(n)
        return tok + pos, (gh, gw)

    def _extended_pos(self, n: int):
        torch = self.torch
        gen = torch.Generator().manual_seed(self.seed + 1)
        return (torch.randn(n, self.width, generator=gen, dtype=torch.float32) * 0.2).to(self.dtype)

    @staticmethod
    def _layernorm(x, eps=1e-5):
        mu = x.mean(dim=-1, keepdim=True)
        var = x.var(dim=-1, keepdim=True, unbiased=False)
        return (x - mu) / (var + eps).sqrt()

    def _forward(self, pixels, attn_override=None, retain_last_attn=False):
        torch = self.torch
        tok, grid = self._tokens(pixels)
        n, d = tok.shape
        heads = self.info.heads
        dh = d // heads
        last_attn = None
        for i, prm in enumerate(self.params_per_block):
            h_in = self._layernorm(tok)
            qkv = h_in @ prm["qkv_w"] + prm["qkv_b"]
            q, k, v = qkv.split(d, dim=1)
            q = q.reshape(n, heads, dh).permute(1, 0, 2)
            k = k.reshape(n, heads, dh).permute(1, 0, 2)
            v = v.reshape(n, heads, dh).permute(1, 0, 2)
            if i == self.blocks - 1 and attn_override is not None:
                attn = attn_override
            else:
                scores = (q @ k.transpose(1, 2)) * dh ** -0.5
                attn = torch.softmax(scores, dim=-1)
            if i == self.blocks - 1:
                if retain_last_attn:
                    # make the attention a gradient leaf: the capture gradient
                    # is d(target)/d(A_last) with A_last treated as free input
                    attn = attn.detach().requires_grad_(True)
                last_attn = attn
            out = (attn @ v).permute(1, 0, 2).reshape(n, d)
            tok = tok + out @ prm["proj_w"] + prm["proj_b"]
            h_mid = self._layernorm(tok)
            mlp = torch.nn.functional.gelu(h_mid @ prm["mlp_w1"] + prm["mlp_b1"])
            tok = tok + mlp @ prm["mlp_w2"] + prm["mlp_b2"]
        cls = self._layernorm(tok)[0]
        embedding = cls @ self.head_w
        return embedding, last_attn, grid

    def encode(self, pixels: np.ndarray) -> np.ndarray:
        self._check_input(pixels)
        with self.torch.no_grad():
            embedding, _, _ = self._forward(pixels)
        return embedding.to(self.torch.float32).numpy().copy()

    def capture(self, pixels: np.ndarray, readout: np.ndarray) -> CaptureResult:
        torch = self.torch
        with torch.enable_grad():
            embedding, attn, grid = self._forward(pixels, retain_last_attn=True)
            r = torch.from_numpy(np.asarray(readout)).to(self.dtype)
            target = embedding @ r
            (grad,) = torch.autograd.grad(target, attn)
        return (
            attn.detach().to(torch.float64).numpy().copy(),
            grad.to(torch.float64).numpy().copy(),
            grid,
        )

    def forward_from_attention(self, pixels: np.ndarray, attention: np.ndarray) -> np.ndarray:
        """Embedding computed with the last block's attention replaced by ``attention``."""
        torch = self.torch
        with torch.no_grad():
            attn = torch.from_numpy(np.asarray(attention)).to(self.dtype)
            embedding, _, _ = self._forward(pixels, attn_override=attn)
        return embedding.to(torch.float64).numpy().copy()

    def parameter_checksum(self) -> str:
        h = hashlib.sha256()
        h.update(self.patch_w.numpy().tobytes())
        h.update(self.cls_tok.numpy().tobytes())
        h.update(self.pos.numpy().tobytes())
        for prm in self.params_per_block:
            for key in sorted(prm):
                h.update(prm[key].numpy().tobytes())
        h.update(self.head_w.numpy().tobytes())
        return h.hexdigest()

    def spec(self) -> dict:
        return {
            "name": "tiny",
            "seed": self.seed,
            "input_size": self.info.input_size,
            "patch_size": self.patch_size,
            "width": self.width,
            "heads": self.info.heads,
            "blocks": self.blocks,
            "embed_dim": self.info.embed_dim,
            "dtype": self._dtype_name,
        }


class ClipVisionAdapter(BaseEncoderAdapter):
    """CLIP ViT-B/32 image tower (512-d embeddings, 7x7 patch grid).

    Requires the ``transformers`` package and locally available weights;
    raises AdapterError otherwise. Attention capture uses the eager attention
    path so the probability tensors stay in the autograd graph.
    """

    MODEL_ID = "openai/clip-vit-base-patch32"

    def __init__(self):
        try:
            import torch
            from transformers import CLIPVisionModelWithProjection
        except ImportError as exc:
            raise AdapterError("clip adapter requires the transformers package") from exc
        try:
            self.model = CLIPVisionModelWithProjection.from_pretrained(
                self.MODEL_ID, attn_implementation="eager"
            )
        except Exception as exc:  # weights unavailable, offline, etc.
            raise AdapterError(f"cannot load CLIP weights: {exc}") from exc
        self.model.eval()
        for p in self.model.parameters():
            p.requires_grad_(False)
        self.torch = torch
        self.info = AdapterInfo(
            name="clip-vit-b32",
            input_size=224,
            embed_dim=512,
            patch_grid=7,
            heads=12,
            supports_attention_capture=True,
        )

    def _batch(self, pixels: np.ndarray):
        x = self.torch.from_numpy(np.ascontiguousarray(pixels, dtype=np.float32))
        return x.permute(2, 0, 1)[None, :]

    def encode(self, pixels: np.ndarray) -> np.ndarray:
        self._check_input(pixels)
        with self.torch.no_grad():
            out = self.model(pixel_values=self._batch(pixels))
        return out.image_embeds[0].numpy().copy()

    def capture(self, pixels: np.ndarray, readout: np.ndarray) -> CaptureResult:
        self._check_input(pixels)
        torch = self.torch
        with torch.enable_grad():
            out = self.model(pixel_values=self._batch(pixels), output_attentions=True)
            attn = out.attentions[-1]
            attn.retain_grad()
            r = torch.from_numpy(np.asarray(readout, dtype=np.float32))
            target = out.image_embeds[0] @ r
            target.backward()
        k = self.info.patch_grid
        return (
            attn.detach()[0].to(torch.float64).numpy().copy(),
            attn.grad[0].to(torch.float64).numpy().copy(),
            (k, k),
        )

    def parameter_checksum(self) -> str:
        h = hashlib.sha256()
        for name, p in sorted(self.model.named_parameters()):
            h.update(name.encode())
            h.update(p.detach().numpy().tobytes())
        return h.hexdigest()

    def spec(self) -> dict:
        return {"name": "clip"}


def build_adapter(spec: dict) -> BaseEncoderAdapter:
    """Rebuild an adapter from its ``spec()`` dictionary."""
    kind = spec.get("name")
    if kind == "mock":
        return MockEncoderAdapter(
            seed=spec.get("seed", 0),
            input_size=spec.get("input_size", 224),
            embed_dim=spec.get("embed_dim", 512),
            patch_grid=spec.get("patch_grid", 7),
            heads=spec.get("heads", 12),
        )
    if kind == "tiny":
        return TinyViTAdapter(
            seed=spec.get("seed", 0),
            input_size=spec.get("input_size", 32),
            patch_size=spec.get("patch_size", 8),
            width=spec.get("width", 32),
            heads=spec.get("heads", 2),
            blocks=spec.get("blocks", 2),
            embed_dim=spec.get("embed_dim", 512),
            dtype=spec.get("dtype", "float32"),
        )
    if kind in ("clip", "clip-vit-b32"):
        return ClipVisionAdapter()
    raise AdapterError(f"unknown adapter spec: {spec!r}")
