"""Contrastive training of segment embeddings.

Two regimes on top of the disentangled autoencoder: joint training (the
mined-pair contrastive loss is added to the encoder objective, variant c)
and post-hoc refinement (the base model is frozen and a residual transform
of the phonetic vectors is trained with the contrastive loss alone,
variant d).
"""

import csv
from dataclasses import dataclass

import numpy as np

from . import _trainer
from ._trainer import (  # noqa: F401 (public API)
    DisentangledModel,
    RefineModel,
    load_refine_model,
    save_refine_model,
)
from .corpus import Corpus
from .errors import ConfigError, DataError
from .pairmine import PairSets

MINING_MODES = ("topk_global", "knn_graph")


@dataclass(frozen=True)
class SiameseConfig:
    """Settings for contrastive (joint or refinement) training."""

    margin: float = 1.0
    k: int = 8  # pairs per batch (topk_global) or neighbors per point (knn_graph)
    mining_mode: str = "topk_global"
    gamma: float = 1.0  # joint-training weight of the contrastive term
    epochs: int = 20
    batch_size: int = 32
    seed: int = 0
    learning_rate: float = 1e-3
    refine_hidden: int = 128
    drop_last: bool = True

    def __post_init__(self):
        if self.margin <= 0 or self.k < 1:
            raise ConfigError("margin must be > 0 and k >= 1")
        if self.mining_mode not in MINING_MODES:
            raise ConfigError(f"mining_mode must be one of {MINING_MODES}")
        if self.gamma < 0:
            raise ConfigError("gamma must be >= 0")
        if self.epochs < 1 or self.batch_size < 2:
            raise ConfigError("epochs >= 1 and batch_size >= 2 required")


def contrastive_loss(vectors, pairs: PairSets, margin: float) -> float:
    """Sum over positive pairs of squared distance plus sum over negative
    pairs of max(margin - distance, 0)^2, divided by the total pair count."""
    if margin <= 0:
        raise ConfigError("margin must be > 0")
    mat = np.asarray(vectors, dtype=np.float64)
    n_pairs = len(pairs.positives) + len(pairs.negatives)
    if n_pairs == 0:
        raise DataError("contrastive loss needs at least one pair")
    high = max((j for _, j in pairs.positives + pairs.negatives), default=0)
    if mat.ndim != 2 or high >= mat.shape[0]:
        raise DataError("pair indices out of range for the vector list")
    total = 0.0
    for i, j in pairs.positives:
        total += float(np.sum((mat[i] - mat[j]) ** 2))
    for i, j in pairs.negatives:
        dist = float(np.linalg.norm(mat[i] - mat[j]))
        total += max(margin - dist, 0.0) ** 2
    return total / n_pairs


def train_joint(corpus: Corpus, cfg_d, cfg_s: SiameseConfig):
    """Variant (c): disentanglement losses plus gamma times the contrastive
    loss over pairs mined on each batch's current phonetic embeddings.

    With gamma = 0 this is bit-identical to train_disentangle under the
    same seeds. Returns (DisentangledModel, loss log rows).
    """
    return _trainer.run_disentangle_training(corpus, cfg_d, cfg_s=cfg_s)


def train_refine(corpus: Corpus, base: DisentangledModel, cfg_s: SiameseConfig):
    """Variant (d): freeze the base model, precompute phonetic embeddings,
    and train the residual refinement transform with the contrastive loss
    over pairs mined on the frozen embeddings.

    Returns (RefineModel, loss log rows).
    """
    if base.dims.feature_dim != corpus.feature_dim:
        raise ConfigError(
            f"model expects feature_dim {base.dims.feature_dim}, "
            f"corpus has {corpus.feature_dim}"
        )
    return _trainer.run_refine_training(corpus, base, cfg_s)


def embed_corpus(model: DisentangledModel, corpus: Corpus, variant: str,
                 refine: RefineModel | None = None):
    """One (segment_id, vector) per segment, ordered by segment_id.

    Variants a, b, c emit phonetic vectors of the given model (what differs
    is how the model was trained); variant d additionally applies the
    refinement transform.
    """
    return _trainer.embed_entries(model, corpus, variant, refine)


def write_training_report(path, rows) -> None:
    """Per-epoch CSV of contrastive training (loss terms and pair counts)."""
    if not rows:
        raise DataError("no rows to write")
    columns = list(rows[0].keys())
    with open(path, "w", encoding="utf-8", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(columns)
        for row in rows:
            writer.writerow(
                [repr(row[c]) if isinstance(row[c], float) else row[c]
                 for c in columns]
            )
