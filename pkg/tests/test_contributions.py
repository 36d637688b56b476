from __future__ import annotations

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from fakeatlas.contributions import (contribution_json, contribution_scores,
                                     waterfall_data, whatif_counterfactual)
from fakeatlas.detector import DetectorModel, predict
from fakeatlas.errors import DegenerateModelError
from fakeatlas.util import orthonormal_rows


def _model(head, bias=0.0):
    head_w = np.zeros(16, dtype=np.float32)
    head_w[: len(head)] = head
    return DetectorModel(W=orthonormal_rows(16, 256, seed=1), head_w=head_w,
                         head_b=bias)


def _vec(*values):
    v = np.zeros(16)
    v[: len(values)] = values
    return v


# --- contribution scores -----------------------------------------------------

def test_single_term_normalization():
    contrib = contribution_scores(_vec(2.0), _model([0.5]))
    assert contrib.s[0] == pytest.approx(1.0)
    assert contrib.c[0] == pytest.approx(1.0)
    assert not contrib.c[1:].any()


def test_hand_arithmetic_example():
    contrib = contribution_scores(_vec(2.0, -1.0, 1.0), _model([0.5, 1.0, -0.5]))
    assert np.allclose(contrib.s[:3], [1.0, -1.0, -0.5])
    assert np.abs(contrib.s).sum() == pytest.approx(2.5)
    assert np.allclose(contrib.c[:3], [0.4, -0.4, -0.2])


def test_equal_positive_terms():
    model = DetectorModel(W=orthonormal_rows(16, 256, seed=1),
                          head_w=np.full(16, 0.5, dtype=np.float32), head_b=0.0)
    contrib = contribution_scores(np.full(16, 2.0), model)
    assert np.allclose(contrib.c, 1 / 16)


def test_all_zero_degenerate():
    contrib = contribution_scores(np.zeros(16), _model([1.0]))
    assert not contrib.s.any() and not contrib.c.any()
    assert not contrib.low_magnitude


def test_low_magnitude_flag():
    contrib = contribution_scores(_vec(1e-12), _model([1e-3]))
    assert contrib.low_magnitude
    assert np.abs(contrib.c).sum() == pytest.approx(1.0)


@given(seed=st.integers(0, 10_000))
@settings(max_examples=100, deadline=None)
def test_contribution_properties(seed):
    rng = np.random.default_rng(seed)
    v = rng.standard_normal(16)
    w = rng.standard_normal(16).astype(np.float32)
    model = DetectorModel(W=orthonormal_rows(16, 256, seed=0), head_w=w, head_b=0.0)
    contrib = contribution_scores(v, model)
    assert np.abs(contrib.c).sum() == pytest.approx(1.0, abs=1e-6)
    s = v * w.astype(np.float64)
    nonzero = s != 0
    assert np.array_equal(np.sign(contrib.c[nonzero]), np.sign(s[nonzero]))
    # positive scaling of v leaves c unchanged
    alpha = float(rng.uniform(0.1, 50.0))
    scaled = contribution_scores(alpha * v, model)
    assert np.allclose(scaled.c, contrib.c, atol=1e-9)


# --- waterfall -----------------------------------------------------------------

def test_waterfall_zero_is_flat():
    rows = waterfall_data(contribution_scores(np.zeros(16), _model([1.0])))
    assert [r[2] for r in rows] == [0.0] * 16


def test_waterfall_running_sums():
    contrib = contribution_scores(_vec(2.0, -1.0, 1.0), _model([0.5, 1.0, -0.5]))
    rows = waterfall_data(contrib)
    assert [r[0] for r in rows] == list(range(1, 17))
    assert rows[0][2] == pytest.approx(0.4)
    assert rows[1][2] == pytest.approx(0.0, abs=1e-12)
    assert rows[2][2] == pytest.approx(-0.2)
    assert rows[15][2] == pytest.approx(contrib.c.sum())


def test_waterfall_final_sign_matches_score_sum():
    rng = np.random.default_rng(3)
    for _ in range(20):
        v = rng.standard_normal(16)
        w = rng.standard_normal(16).astype(np.float32)
        model = DetectorModel(W=orthonormal_rows(16, 256, seed=0), head_w=w, head_b=0.0)
        contrib = contribution_scores(v, model)
        final = waterfall_data(contrib)[-1][2]
        assert np.sign(final) == np.sign(contrib.s.sum())


# --- what-if --------------------------------------------------------------------

def test_whatif_closed_form_example():
    model = _model([3.0, 4.0])
    v = _vec(1.0, 1.0)
    result = whatif_counterfactual(v, model, epsilon=1e-3)
    assert result.old_prediction.logit == pytest.approx(7.0)
    assert np.allclose(result.delta[:2], [-(7 / 25) * 1.001 * 3, -(7 / 25) * 1.001 * 4],
                       atol=1e-9)
    assert result.new_prediction.logit == pytest.approx(-7e-3, abs=1e-9)
    assert result.new_prediction.label == 0


def test_whatif_double_application_returns_to_original_label():
    model = _model([2.0, -1.0], bias=0.3)
    v = _vec(0.8, 0.2)
    once = whatif_counterfactual(v, model)
    assert once.new_prediction.label != once.old_prediction.label
    twice = whatif_counterfactual(once.new_values, model)
    assert twice.new_prediction.label == once.old_prediction.label


def test_whatif_norm_identity():
    rng = np.random.default_rng(8)
    for _ in range(25):
        head = rng.standard_normal(4)
        model = _model(head, bias=float(rng.standard_normal()))
        v = rng.standard_normal(16)
        result = whatif_counterfactual(v, model, epsilon=1e-3)
        logit = result.old_prediction.logit
        w_norm = np.linalg.norm(model.head_w.astype(np.float64))
        assert np.linalg.norm(result.delta) == pytest.approx(
            1.001 * abs(logit) / w_norm, rel=1e-9)
        # delta is (anti)parallel to the head weights
        cos = abs(result.delta @ model.head_w.astype(np.float64)) / (
            np.linalg.norm(result.delta) * w_norm)
        assert cos == pytest.approx(1.0, abs=1e-12)


def test_whatif_single_axis_mode():
    model = _model([0.5, 4.0])
    v = _vec(2.0, 1.0)  # logit = 5
    result = whatif_counterfactual(v, model, mode="single_axis")
    # axis 1 is cheapest: |5 / 4| < |5 / 0.5|
    assert result.delta[0] == 0.0
    assert result.delta[1] == pytest.approx(-1.001 * 5 / 4)
    assert result.new_prediction.label != result.old_prediction.label
    assert np.count_nonzero(result.delta) == 1


def test_whatif_degenerate_head():
    model = DetectorModel(W=orthonormal_rows(16, 256, seed=1),
                          head_w=np.zeros(16, dtype=np.float32), head_b=1.0)
    with pytest.raises(DegenerateModelError):
        whatif_counterfactual(np.ones(16), model)


def test_whatif_boundary_logit_rejected():
    model = _model([1.0])
    with pytest.raises(ValueError, match="boundary"):
        whatif_counterfactual(np.zeros(16), model)


def test_contribution_json_payload():
    model = _model([1.0, -2.0])
    v = _vec(0.5, 0.25)
    contrib = contribution_scores(v, model, source_id="img9")
    payload = contribution_json("img9", contrib, predict(v, model))
    assert payload["image_id"] == "img9"
    assert len(payload["s"]) == 16 and len(payload["c"]) == 16
    assert payload["label"] in (0, 1)
    assert payload["logit"] == pytest.approx(0.0, abs=1e-12) or isinstance(payload["logit"], float)
