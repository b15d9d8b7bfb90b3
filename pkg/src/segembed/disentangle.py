"""Speaker-disentangled autoencoder training.

The encoder/decoder objective is reconstruction plus a same/different
speaker contrastive loss on the speaker vectors plus an adversarial term
that rewards the phonetic encoder for fooling a speaker discriminator.
When true speaker ids are missing, segments of one utterance are treated
as one speaker.
"""

import csv
from dataclasses import dataclass

import numpy as np

from . import _trainer
from ._trainer import (  # noqa: F401 (public API)
    DisentangledModel,
    effective_speakers,
    load_model,
    save_model,
)
from .corpus import Corpus
from .errors import ConfigError, DataError, DimensionError, NumericError
from .seeding import rng_for

LOSS_LOG_COLUMNS = ("epoch", "recon", "spk", "adv", "disc")


@dataclass(frozen=True)
class DisentangleConfig:
    """Training settings for the disentangled autoencoder."""

    epochs: int = 30
    batch_size: int = 32
    margin: float = 1.0  # speaker-contrastive margin
    alpha_spk: float = 1.0
    alpha_adv: float = 1.0
    disc_steps: int = 1  # discriminator updates per encoder update
    disc_warmup_epochs: int = 0  # epochs of discriminator-only adversarial play
    seed: int = 0
    embed_dim: int = 256
    enc_hidden: int = 128
    dec_hidden: int = 128
    disc_hidden: int = 128
    encoder_mode: str = "pool"
    learning_rate: float = 1e-3
    disc_learning_rate: float | None = None  # defaults to learning_rate
    drop_last: bool = True

    def __post_init__(self):
        if self.epochs < 1 or self.batch_size < 2 or self.disc_steps < 1:
            raise ConfigError("epochs >= 1, batch_size >= 2, disc_steps >= 1 required")
        if self.margin <= 0:
            raise ConfigError("speaker margin must be > 0")
        if self.alpha_spk < 0 or self.alpha_adv < 0:
            raise ConfigError("loss weights must be >= 0")
        if self.disc_warmup_epochs < 0:
            raise ConfigError("disc_warmup_epochs must be >= 0")
        if self.disc_learning_rate is None:
            object.__setattr__(self, "disc_learning_rate", self.learning_rate)


# -- loss operations ---------------------------------------------------------


def reconstruction_loss(x, x_rec) -> float:
    """Mean squared error over all T x F entries."""
    x = np.asarray(x, dtype=np.float64)
    x_rec = np.asarray(x_rec, dtype=np.float64)
    if x.shape != x_rec.shape:
        raise DimensionError(f"shape mismatch {x.shape} vs {x_rec.shape}")
    return float(np.mean((x - x_rec) ** 2))


def speaker_contrastive_loss(vectors, speaker_ids, margin: float) -> float:
    """Over all unordered pairs: squared distance for same-speaker pairs,
    squared hinge max(margin - distance, 0)^2 otherwise; sum / pair count."""
    mat = np.asarray(vectors, dtype=np.float64)
    if mat.ndim != 2 or mat.shape[0] < 2:
        raise DataError("need at least 2 vectors of equal dimension")
    if len(speaker_ids) != mat.shape[0]:
        raise DataError("one speaker id per vector required")
    if margin <= 0:
        raise ConfigError("margin must be > 0")
    n = mat.shape[0]
    total = 0.0
    count = 0
    for i in range(n):
        for j in range(i + 1, n):
            dist = float(np.linalg.norm(mat[i] - mat[j]))
            if speaker_ids[i] == speaker_ids[j]:
                total += dist * dist
            else:
                total += max(margin - dist, 0.0) ** 2
            count += 1
    return total / count


def _check_probs(probs, flags):
    probs = np.asarray(probs, dtype=np.float64)
    if probs.ndim != 1 or len(flags) != probs.shape[0]:
        raise DataError("probs and flags must be equal-length 1-D sequences")
    if probs.size == 0:
        raise DataError("need at least one probability")
    if np.any(probs <= 0.0) or np.any(probs >= 1.0):
        raise NumericError("probabilities must lie strictly inside (0, 1)")
    return probs, np.asarray(flags, dtype=bool)


def discriminator_loss(probs, same_speaker) -> float:
    """Mean binary cross-entropy, target 1 for same-speaker pairs."""
    probs, flags = _check_probs(probs, same_speaker)
    return float(-np.mean(np.where(flags, np.log(probs), np.log1p(-probs))))


def adversarial_loss(probs, same_speaker) -> float:
    """Mean binary cross-entropy against flipped targets: the phonetic
    encoder is rewarded exactly when the discriminator is wrong."""
    probs, flags = _check_probs(probs, same_speaker)
    return float(-np.mean(np.where(flags, np.log1p(-probs), np.log(probs))))


# -- training -----------------------------------------------------------------


def train_disentangle(corpus: Corpus, cfg: DisentangleConfig):
    """Train encoders, decoder, and discriminator on one corpus.

    Deterministic in (corpus, cfg). Returns (DisentangledModel, loss log
    rows); one row per epoch with keys epoch/recon/spk/adv/disc.
    """
    return _trainer.run_disentangle_training(corpus, cfg, cfg_s=None)


def write_loss_log(path, rows) -> None:
    """Per-epoch loss log as CSV with columns epoch, recon, spk, adv, disc."""
    with open(path, "w", encoding="utf-8", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(LOSS_LOG_COLUMNS)
        for row in rows:
            writer.writerow([repr(row[c]) if c != "epoch" else row[c]
                             for c in LOSS_LOG_COLUMNS])


def speaker_embeddings(model: DisentangledModel, corpus: Corpus) -> np.ndarray:
    """(M, d) speaker-vector matrix in corpus order."""
    return _trainer.compute_embeddings(model, corpus, which="speaker")


def phonetic_embeddings(model: DisentangledModel, corpus: Corpus) -> np.ndarray:
    """(M, d) phonetic-vector matrix in corpus order."""
    return _trainer.compute_embeddings(model, corpus, which="phonetic")


def linear_probe_accuracy(vectors, labels, seed: int,
                          train_fraction: float = 0.5,
                          steps: int = 300) -> float:
    """Held-out accuracy of a seeded linear softmax probe.

    Diagnostic for disentanglement: a probe reading speaker identity from
    the speaker vectors should beat one reading it from the phonetic
    vectors.
    """
    mat = np.asarray(vectors, dtype=np.float64)
    if mat.ndim != 2 or mat.shape[0] != len(labels):
        raise DataError("vectors must be (N, d) with one label per row")
    classes = sorted(set(labels))
    y = np.asarray([classes.index(l) for l in labels])
    n = mat.shape[0]
    order = rng_for(seed, "probe:split").permutation(n)
    n_train = max(len(classes), int(round(n * train_fraction)))
    train_idx, test_idx = order[:n_train], order[n_train:]
    if len(test_idx) == 0:
        raise DataError("probe needs a non-empty held-out split")

    mu = mat[train_idx].mean(axis=0)
    sd = np.maximum(mat[train_idx].std(axis=0), 1e-8)
    x_train = np.hstack([(mat[train_idx] - mu) / sd, np.ones((len(train_idx), 1))])
    x_test = np.hstack([(mat[test_idx] - mu) / sd, np.ones((len(test_idx), 1))])

    k = len(classes)
    w = np.zeros((x_train.shape[1], k))
    onehot = np.eye(k)[y[train_idx]]
    m = np.zeros_like(w)
    v = np.zeros_like(w)
    for t in range(1, steps + 1):
        logits = x_train @ w
        logits -= logits.max(axis=1, keepdims=True)
        p = np.exp(logits)
        p /= p.sum(axis=1, keepdims=True)
        g = x_train.T @ (p - onehot) / len(train_idx)
        m = 0.9 * m + 0.1 * g
        v = 0.999 * v + 0.001 * g * g
        w -= 0.1 * (m / (1 - 0.9**t)) / (np.sqrt(v / (1 - 0.999**t)) + 1e-8)
    pred = np.argmax(x_test @ w, axis=1)
    return float(np.mean(pred == y[test_idx]))
