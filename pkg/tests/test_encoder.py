from __future__ import annotations

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from fakeatlas.adapters import MockEncoderAdapter, TinyViTAdapter, build_adapter
from fakeatlas.data import ImageRecord, PixelTensor
from fakeatlas.encoder import (GenericEmbedding, apply_forget_projection,
                               bypass_projection, encode_base, encode_visual_batch,
                               load_projection, random_projection, save_projection,
                               train_forget_projection)
from fakeatlas.errors import DataError, TrainingDataError
from fakeatlas.synthetic import write_forget_corpus, write_image_corpus

# frozen reference: MockEncoderAdapter(seed=3) on the gradient image below,
# generated once and pinned
PINNED_FIRST8 = [-2.960019, -2.149914, -0.900663, -1.464968,
                 -1.458237, -0.370078, 0.072183, -0.010969]
PINNED_NORM = 13.808564


def _gradient_pixels(size=224):
    yy, xx = np.mgrid[0:size, 0:size].astype(np.float32)
    data = np.stack([yy / size, xx / size, (yy + xx) / (2 * size)], axis=2)
    return PixelTensor(data=data.astype(np.float32), source_id="gradient")


def test_encode_base_shape_and_determinism(mock_adapter):
    pix = _gradient_pixels()
    a = encode_base(pix, mock_adapter)
    assert a.vector.shape == (512,)
    b = encode_base(pix, mock_adapter)
    assert np.array_equal(a.vector, b.vector)


def test_encode_base_pinned_reference():
    adapter = MockEncoderAdapter(seed=3)
    vec = adapter.encode(_gradient_pixels().data)
    assert np.allclose(vec[:8], PINNED_FIRST8, atol=1e-5)
    assert np.linalg.norm(vec) == pytest.approx(PINNED_NORM, abs=1e-4)


def test_encode_base_rejects_bad_shape(mock_adapter):
    bad = PixelTensor(data=np.zeros((64, 64, 3), dtype=np.float32), source_id="bad")
    with pytest.raises(ValueError, match="expects"):
        encode_base(bad, mock_adapter)


def test_adapter_parameters_frozen_across_runs(mock_adapter, projection):
    before = mock_adapter.parameter_checksum()
    encode_base(_gradient_pixels(), mock_adapter)
    mock_adapter.capture(_gradient_pixels().data, np.ones(512, dtype=np.float32))
    assert mock_adapter.parameter_checksum() == before


def test_projection_artifact_roundtrip(tmp_path):
    proj = random_projection(seed=9)
    path = tmp_path / "p.bin"
    save_projection(proj, path)
    loaded = load_projection(path)
    assert loaded.provenance == "loaded"
    assert np.array_equal(loaded.matrix, proj.matrix)
    # byte-stable artifact
    save_projection(loaded, tmp_path / "p2.bin")
    assert (tmp_path / "p.bin").read_bytes() == (tmp_path / "p2.bin").read_bytes()


def test_projection_defect_bound_enforced(tmp_path):
    bad = random_projection(seed=0).matrix * 2.0  # scaled rows break orthonormality
    from fakeatlas.binio import write_artifact

    write_artifact(tmp_path / "bad.bin",
                   {"rows": 256, "cols": 512, "dtype": "f32", "layout": "row-major"},
                   [bad])
    with pytest.raises(DataError, match="defect"):
        load_projection(tmp_path / "bad.bin")


def test_bypass_projection_basis_vector():
    proj = bypass_projection(256, 512)
    e5 = np.zeros(512, dtype=np.float32)
    e5[4] = 1.0
    out = apply_forget_projection(GenericEmbedding(vector=e5, source_id="e5"), proj)
    expected = np.zeros(256, dtype=np.float32)
    expected[4] = 1.0
    assert np.array_equal(out.vector, expected)


def test_zero_embedding_maps_to_zero(projection):
    zero = GenericEmbedding(vector=np.zeros(512, dtype=np.float32), source_id="z")
    assert not apply_forget_projection(zero, projection).vector.any()


@given(alpha=st.floats(-10, 10), beta=st.floats(-10, 10), seed=st.integers(0, 100))
@settings(max_examples=50, deadline=None)
def test_projection_linearity(projection, alpha, beta, seed):
    rng = np.random.default_rng(seed)
    x = rng.standard_normal(512).astype(np.float32)
    y = rng.standard_normal(512).astype(np.float32)

    def f(v):
        return apply_forget_projection(
            GenericEmbedding(vector=v.astype(np.float32), source_id="h"), projection
        ).vector.astype(np.float64)

    lhs = f(alpha * x + beta * y)
    rhs = alpha * f(x) + beta * f(y)
    scale = np.linalg.norm(rhs) + 1.0
    assert np.linalg.norm(lhs - rhs) <= 1e-6 * scale


def test_projection_operator_norm_bound(projection):
    sigma_max = np.linalg.svd(projection.matrix.astype(np.float64), compute_uv=False)[0]
    rng = np.random.default_rng(11)
    for _ in range(20):
        v = rng.standard_normal(512).astype(np.float32)
        out = apply_forget_projection(GenericEmbedding(vector=v, source_id="n"), projection)
        assert np.linalg.norm(out.vector) <= sigma_max * np.linalg.norm(v) * (1 + 1e-5)


def test_encode_visual_batch_matches_singles(mock_adapter, projection, tmp_path):
    write_image_corpus(tmp_path, n_per_class=2, size=32, seed=5)
    from fakeatlas.data import load_manifest, load_pixels

    manifest = load_manifest(tmp_path)
    result = encode_visual_batch(manifest.records, mock_adapter, projection)
    assert not result.errors
    assert len(result.embeddings) == 4
    for rec, emb in zip(manifest.records, result.embeddings):
        single = apply_forget_projection(
            encode_base(load_pixels(rec, size=224), mock_adapter), projection
        )
        assert np.array_equal(single.vector, emb.vector)
        assert emb.source_id == rec.id


def test_encode_visual_batch_empty(mock_adapter, projection):
    result = encode_visual_batch([], mock_adapter, projection)
    assert result.embeddings == [] and result.errors == []


def test_encode_visual_batch_collects_errors(mock_adapter, projection, tmp_path):
    write_image_corpus(tmp_path, n_per_class=1, size=32, seed=5)
    from fakeatlas.data import load_manifest

    manifest = load_manifest(tmp_path)
    broken = ImageRecord(id="broken", path=tmp_path / "missing.png", label=0)
    records = [manifest.records[0], broken, manifest.records[1]]
    result = encode_visual_batch(records, mock_adapter, projection)
    assert len(result.embeddings) == 2
    assert [e.source_id for e in result.embeddings] == [r.id for r in manifest.records]
    assert result.errors and result.errors[0][0] == "broken"


def test_train_forget_projection_invariants(tmp_path, mock_adapter):
    root = write_forget_corpus(tmp_path / "forget", n_per_class=5, seed=0)
    proj = train_forget_projection(root, mock_adapter, seed=4, steps=60)
    assert proj.provenance == "trained"
    assert proj.orthonormality_defect() <= 0.05
    again = train_forget_projection(root, mock_adapter, seed=4, steps=60)
    assert np.array_equal(proj.matrix, again.matrix)


def test_train_forget_projection_missing_class(mock_adapter, tmp_path):
    with pytest.raises(TrainingDataError, match="missing classes"):
        train_forget_projection({"natural": [tmp_path]}, mock_adapter)


def test_build_adapter_roundtrip():
    tiny = TinyViTAdapter(seed=2)
    rebuilt = build_adapter(tiny.spec())
    assert rebuilt.parameter_checksum() == tiny.parameter_checksum()
    mock = MockEncoderAdapter(seed=8)
    assert build_adapter(mock.spec()).parameter_checksum() == mock.parameter_checksum()
