"""Two-layer linear real/fake detector.

The distiller maps 256-d visual embeddings to a 16-d distilled vector through
a bias-free linear layer whose rows are pushed toward orthonormality by the
penalty ||I - W W^T||_F^2; the classification head maps the distilled vector
to a single logit. Training minimizes

    lambda_bce * BCE(y, sigmoid(logit)) + lambda_ortho * ||I - W W^T||_F^2

with Adam, batch size 32, learning rate 1e-3 by default (lambda_bce=3,
lambda_ortho=1). The distiller is initialized with orthonormal rows from the
QR of a seeded Gaussian. Labels follow the convention fake=1=positive.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .binio import PayloadReader, read_artifact, write_artifact
from .encoder import VisualEmbedding
from .errors import DataError, NumericError, TrainingDataError
from .util import orthonormal_rows, sigmoid

DISTILL_DIM = 16
VISUAL_DIM = 256


@dataclass
class TrainConfig:
    lambda_bce: float = 3.0
    lambda_ortho: float = 1.0
    batch_size: int = 32
    lr: float = 1e-3
    max_epochs: int = 50
    patience: int = 3
    distill_dim: int = DISTILL_DIM


@dataclass
class DetectorModel:
    W: np.ndarray  # (distill_dim, visual_dim) float32, bias-free distiller
    head_w: np.ndarray  # (distill_dim,) float32
    head_b: float
    lambda_bce: float = 3.0
    lambda_ortho: float = 1.0
    training_meta: dict = field(default_factory=dict)

    @property
    def distill_dim(self) -> int:
        return self.W.shape[0]

    @property
    def input_dim(self) -> int:
        return self.W.shape[1]


@dataclass(frozen=True)
class DistilledVector:
    values: np.ndarray  # (distill_dim,) float32
    source_id: str


@dataclass(frozen=True)
class Prediction:
    logit: float
    prob_fake: float
    label: int  # 0 real, 1 fake
    confidence: float  # max(prob_fake, 1 - prob_fake), in [0.5, 1]


@dataclass(frozen=True)
class ConfusionStats:
    tp: int
    tn: int
    fp: int
    fn: int
    accuracy: float
    sensitivity: float | None  # tp / (tp + fn), None when no fakes evaluated
    specificity: float | None  # tn / (tn + fp), None when no reals evaluated


def orthogonality_penalty(W: np.ndarray) -> float:
    """||I - W W^T||_F^2 computed in float64."""
    W = np.asarray(W, dtype=np.float64)
    if W.ndim != 2:
        raise ValueError(f"W must be 2-D, got shape {W.shape}")
    gram = W @ W.T
    return float(np.sum((np.eye(W.shape[0]) - gram) ** 2))


def orthogonality_penalty_grad(W: np.ndarray) -> np.ndarray:
    """Analytic gradient of the penalty: -4 (I - W W^T) W."""
    W = np.asarray(W, dtype=np.float64)
    if W.ndim != 2:
        raise ValueError(f"W must be 2-D, got shape {W.shape}")
    residual = np.eye(W.shape[0]) - W @ W.T
    return -4.0 * residual @ W


def _values(vec: VisualEmbedding | DistilledVector | np.ndarray) -> np.ndarray:
    if isinstance(vec, (VisualEmbedding, DistilledVector)):
        return vec.vector if isinstance(vec, VisualEmbedding) else vec.values
    return np.asarray(vec)


def distill(embedding: VisualEmbedding | np.ndarray, model: DetectorModel,
            source_id: str | None = None) -> DistilledVector:
    """Apply the bias-free distiller: values = W @ embedding."""
    vec = _values(embedding)
    if vec.shape != (model.input_dim,):
        raise ValueError(
            f"embedding shape {vec.shape} incompatible with distiller "
            f"({model.distill_dim}, {model.input_dim})"
        )
    values = model.W.astype(np.float64) @ vec.astype(np.float64)
    if not np.all(np.isfinite(values)):
        raise NumericError("non-finite distilled vector")
    sid = source_id or getattr(embedding, "source_id", "")
    return DistilledVector(values=values.astype(np.float32), source_id=sid)


def predict(distilled: DistilledVector | np.ndarray, model: DetectorModel) -> Prediction:
    """Head logit + sigmoid probability. Ties at logit exactly 0 predict real."""
    values = _values(distilled).astype(np.float64)
    logit = float(values @ model.head_w.astype(np.float64) + model.head_b)
    prob = sigmoid(logit)
    # label from the logit sign: identical to prob > 0.5 but exact when the
    # sigmoid rounds to 0.5 for tiny |logit|
    label = 1 if logit > 0.0 else 0
    return Prediction(logit=logit, prob_fake=prob, label=label,
                      confidence=max(prob, 1.0 - prob))


def evaluate(pairs: list[tuple[DistilledVector | np.ndarray, int]],
             model: DetectorModel) -> ConfusionStats:
    """Confusion counts over (distilled vector, label) pairs, fake=positive."""
    if not pairs:
        raise ValueError("cannot evaluate an empty split")
    tp = tn = fp = fn = 0
    for vec, label in pairs:
        pred = predict(vec, model).label
        if label == 1:
            tp += pred == 1
            fn += pred == 0
        else:
            tn += pred == 0
            fp += pred == 1
    total = tp + tn + fp + fn
    return ConfusionStats(
        tp=tp, tn=tn, fp=fp, fn=fn,
        accuracy=(tp + tn) / total,
        sensitivity=tp / (tp + fn) if (tp + fn) else None,
        specificity=tn / (tn + fp) if (tn + fp) else None,
    )


def train_detector(
    train: list[tuple[VisualEmbedding | np.ndarray, int]],
    val: list[tuple[VisualEmbedding | np.ndarray, int]],
    config: TrainConfig | None = None,
    seed: int = 0,
) -> DetectorModel:
    """Train distiller + head; deterministic given seed and inputs.

    Early-stops on validation BCE (patience from config, best weights kept).
    Per-epoch loss decomposition is stored in ``training_meta["history"]``.
    """
    import torch

    config = config or TrainConfig()
    if not train:
        raise TrainingDataError("empty training set")
    labels = {label for _, label in train}
    if labels != {0, 1}:
        raise TrainingDataError(f"training set must contain both classes, got labels {sorted(labels)}")

    x_train = torch.from_numpy(np.vstack([_values(v) for v, _ in train]).astype(np.float32))
    y_train = torch.tensor([float(lbl) for _, lbl in train])
    n, input_dim = x_train.shape
    if val:
        x_val = torch.from_numpy(np.vstack([_values(v) for v, _ in val]).astype(np.float32))
        y_val = torch.tensor([float(lbl) for _, lbl in val])

    w0 = orthonormal_rows(config.distill_dim, input_dim, seed)
    weights = torch.from_numpy(w0.copy()).requires_grad_(True)
    gen = torch.Generator().manual_seed(seed)
    head_w = (torch.randn(config.distill_dim, generator=gen) * config.distill_dim ** -0.5
              ).requires_grad_(True)
    head_b = torch.zeros(1, requires_grad=True)
    eye = torch.eye(config.distill_dim)
    opt = torch.optim.Adam([weights, head_w, head_b], lr=config.lr)

    def penalty():
        return ((eye - weights @ weights.T) ** 2).sum()

    def val_bce() -> float:
        with torch.no_grad():
            logits = (x_val @ weights.T) @ head_w + head_b
            return float(torch.nn.functional.binary_cross_entropy_with_logits(logits, y_val))

    history: list[dict] = []
    best = float("inf")
    best_state = None
    wait = 0
    epochs_run = 0
    for epoch in range(config.max_epochs):
        perm = torch.randperm(n, generator=gen)
        bce_sum = 0.0
        for start in range(0, n, config.batch_size):
            idx = perm[start : start + config.batch_size]
            logits = (x_train[idx] @ weights.T) @ head_w + head_b
            bce = torch.nn.functional.binary_cross_entropy_with_logits(logits, y_train[idx])
            loss = config.lambda_bce * bce + config.lambda_ortho * penalty()
            if not torch.isfinite(loss):
                raise NumericError(f"training loss diverged at epoch {epoch}")
            opt.zero_grad()
            loss.backward()
            opt.step()
            bce_sum += float(bce.detach()) * len(idx)
        entry = {
            "epoch": epoch,
            "train_bce": bce_sum / n,
            "train_ortho": float(penalty().detach()),
        }
        entry["train_total"] = (config.lambda_bce * entry["train_bce"]
                                + config.lambda_ortho * entry["train_ortho"])
        epochs_run = epoch + 1
        if val:
            entry["val_bce"] = val_bce()
            history.append(entry)
            if entry["val_bce"] < best - 1e-6:
                best = entry["val_bce"]
                best_state = (weights.detach().clone(), head_w.detach().clone(),
                              head_b.detach().clone())
                wait = 0
            else:
                wait += 1
                if wait >= config.patience:
                    break
        else:
            history.append(entry)

    if best_state is not None:
        weights_f, head_w_f, head_b_f = best_state
    else:
        weights_f, head_w_f, head_b_f = weights.detach(), head_w.detach(), head_b.detach()

    model = DetectorModel(
        W=weights_f.numpy().astype(np.float32),
        head_w=head_w_f.numpy().astype(np.float32),
        head_b=float(head_b_f),
        lambda_bce=config.lambda_bce,
        lambda_ortho=config.lambda_ortho,
        training_meta={
            "seed": seed,
            "epochs_run": epochs_run,
            "config": {
                "batch_size": config.batch_size, "lr": config.lr,
                "max_epochs": config.max_epochs, "patience": config.patience,
            },
            "history": history,
        },
    )
    if not np.any(model.head_w):
        raise NumericError("trained head collapsed to all-zero weights")
    return model


def save_checkpoint(model: DetectorModel, path: Path | str) -> None:
    header = {
        "schema": 1,
        "dims": {"in": model.input_dim, "distill": model.distill_dim},
        "lambda_bce": model.lambda_bce,
        "lambda_ortho": model.lambda_ortho,
        "seed": model.training_meta.get("seed", 0),
    }
    write_artifact(path, header, [model.W, model.head_w,
                                  np.array([model.head_b], dtype=np.float32)])


def load_checkpoint(path: Path | str) -> DetectorModel:
    header, payload = read_artifact(path)
    if header.get("schema") != 1:
        raise DataError(f"unsupported checkpoint schema in {path}")
    dims = header.get("dims", {})
    distill_dim, input_dim = int(dims.get("distill", 0)), int(dims.get("in", 0))
    if distill_dim <= 0 or input_dim <= 0:
        raise DataError(f"checkpoint missing dims: {path}")
    reader = PayloadReader(payload, str(path))
    W = reader.take((distill_dim, input_dim))
    head_w = reader.take((distill_dim,))
    head_b = float(reader.take((1,))[0])
    reader.expect_exhausted()
    model = DetectorModel(
        W=W, head_w=head_w, head_b=head_b,
        lambda_bce=float(header.get("lambda_bce", 3.0)),
        lambda_ortho=float(header.get("lambda_ortho", 1.0)),
        training_meta={"seed": header.get("seed", 0)},
    )
    defect = orthogonality_penalty(model.W)
    if defect > 0.05:
        raise DataError(f"checkpoint distiller defect {defect:.4g} exceeds 0.05: {path}")
    if not np.any(model.head_w):
        raise DataError(f"checkpoint head weights are all zero: {path}")
    return model
