"""Uniform per-dimension contribution scores and what-if counterfactuals.

For a distilled vector v and head weights w, the raw score of dimension i is
s_i = v_i * w_i and its normalized contribution is c_i = s_i / sum_j |s_j|.
The sign is preserved (positive pushes toward fake, negative toward real) and
the magnitudes sum to 1 unless every s_i is zero. The what-if counterfactual
is the smallest distilled-space perturbation that crosses the head's linear
decision boundary, overshooting it by a relative margin epsilon.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .detector import DetectorModel, DistilledVector, Prediction, predict
from .errors import DegenerateModelError

LOW_MAGNITUDE_FLOOR = 1e-8


@dataclass(frozen=True)
class ContributionVector:
    s: np.ndarray  # (distill_dim,) raw scores v_i * w_i, float64
    c: np.ndarray  # (distill_dim,) normalized, sum |c_i| = 1 unless degenerate
    source_id: str
    low_magnitude: bool  # sum |s_i| below floor but nonzero: c is noise-amplified


@dataclass(frozen=True)
class WhatIfResult:
    delta: np.ndarray  # perturbation applied to the distilled vector
    new_values: np.ndarray
    old_prediction: Prediction
    new_prediction: Prediction
    epsilon: float
    mode: str  # "joint" | "single_axis"


def _distilled_values(v: DistilledVector | np.ndarray) -> np.ndarray:
    values = v.values if isinstance(v, DistilledVector) else np.asarray(v)
    return values.astype(np.float64)


def contribution_scores(v: DistilledVector | np.ndarray, model: DetectorModel,
                        source_id: str | None = None) -> ContributionVector:
    values = _distilled_values(v)
    s = values * model.head_w.astype(np.float64)
    denom = float(np.sum(np.abs(s)))
    if denom == 0.0:
        c = np.zeros_like(s)
        low = False
    else:
        c = s / denom
        low = denom < LOW_MAGNITUDE_FLOOR
    sid = source_id or getattr(v, "source_id", "")
    return ContributionVector(s=s, c=c, source_id=sid, low_magnitude=low)


def waterfall_data(contrib: ContributionVector) -> list[tuple[int, float, float]]:
    """(dimension, c_i, running total) in dimension order 1..n."""
    rows = []
    total = 0.0
    for i, value in enumerate(contrib.c, start=1):
        total += float(value)
        rows.append((i, float(value), total))
    return rows


def whatif_counterfactual(
    v: DistilledVector | np.ndarray,
    model: DetectorModel,
    epsilon: float = 1e-3,
    mode: str = "joint",
) -> WhatIfResult:
    """Minimal perturbation of the distilled vector that flips the prediction.

    ``joint`` moves along the head-weight direction (the exact minimal-L2
    crossing of the hyperplane head_w . v + head_b = 0, scaled past it by
    epsilon). ``single_axis`` instead changes the one dimension with the
    cheapest axis-aligned flip.
    """
    values = _distilled_values(v)
    head_w = model.head_w.astype(np.float64)
    w_norm_sq = float(head_w @ head_w)
    if w_norm_sq == 0.0:
        raise DegenerateModelError("head weights are all zero; no boundary to cross")
    old = predict(values, model)
    if old.logit == 0.0:
        raise ValueError("logit is exactly 0: prediction is on the boundary already")

    if mode == "joint":
        delta = -(1.0 + epsilon) * (old.logit / w_norm_sq) * head_w
    elif mode == "single_axis":
        with np.errstate(divide="ignore"):
            costs = np.where(head_w != 0.0, np.abs(old.logit / head_w), np.inf)
        axis = int(np.argmin(costs))
        delta = np.zeros_like(head_w)
        delta[axis] = -(1.0 + epsilon) * old.logit / head_w[axis]
    else:
        raise ValueError(f"unknown what-if mode {mode!r}")

    new_values = values + delta
    new = predict(new_values, model)
    return WhatIfResult(delta=delta, new_values=new_values, old_prediction=old,
                        new_prediction=new, epsilon=epsilon, mode=mode)


def contribution_json(image_id: str, contrib: ContributionVector,
                      prediction: Prediction) -> dict:
    """Per-image export payload."""
    return {
        "image_id": image_id,
        "s": [float(x) for x in contrib.s],
        "c": [float(x) for x in contrib.c],
        "logit": prediction.logit,
        "label": prediction.label,
        "low_magnitude": contrib.low_magnitude,
    }
