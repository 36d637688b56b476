"""fakeatlas: distilled real/fake image detection with pixel-group attribution."""

__version__ = "0.1.0"

from .data import DatasetManifest, ImageRecord, PixelTensor, load_manifest, load_pixels, split_dataset
from .detector import (ConfusionStats, DetectorModel, DistilledVector, Prediction,
                       TrainConfig, distill, evaluate, load_checkpoint,
                       orthogonality_penalty, predict, save_checkpoint, train_detector)
from .encoder import (ForgetProjection, GenericEmbedding, VisualEmbedding,
                      apply_forget_projection, encode_base, encode_visual_batch,
                      load_projection, random_projection, save_projection,
                      train_forget_projection)
from .contributions import (ContributionVector, WhatIfResult, contribution_scores,
                            waterfall_data, whatif_counterfactual)
from .relevance import (AttentionCapture, PixelRelevanceMap, RelevanceStack,
                        TokenRelevanceMap, capture_attention, pixel_relevance,
                        propagate_relevance_chain, relevance_stack, token_relevance_last)
from .snapshot import Snapshot, SnapshotConfig, SnapshotStore, build_snapshot

__all__ = [name for name in dir() if not name.startswith("_")]
