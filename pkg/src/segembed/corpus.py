"""Segment corpus: data model, JSONL ingestion/serialization, synthetic
corpus generation, and mini-batch construction.

A corpus file is UTF-8 JSON-lines, one object per segment with keys
``segment_id``, ``utterance_id``, ``speaker_id`` (nullable), ``unit_label``
(nullable), ``level``, ``features`` (array of T arrays of F numbers).
An embedding file is JSON-lines with keys ``segment_id`` and ``vector``.
Both round-trip bit-exactly at double precision.
"""

import json
from dataclasses import dataclass, field

import numpy as np

from .errors import (
    ConfigError,
    DataError,
    DimensionError,
    EmptyCorpusError,
    ParseError,
)
from .seeding import rng_for

LEVELS = ("word", "syllable", "phoneme")

UTTERANCE_GROUP = 10  # segments per synthetic utterance


def validate_features(frames, segment_id: str = "?") -> np.ndarray:
    """Check a feature matrix: 2-D, T >= 1, all values finite."""
    arr = np.asarray(frames, dtype=np.float64)
    if arr.ndim != 2:
        raise DimensionError(
            f"segment {segment_id!r}: features must be a T x F matrix, "
            f"got ndim={arr.ndim}"
        )
    if arr.shape[0] < 1 or arr.shape[1] < 1:
        raise DataError(f"segment {segment_id!r}: empty feature matrix {arr.shape}")
    if not np.all(np.isfinite(arr)):
        raise DataError(f"segment {segment_id!r}: non-finite feature values")
    return arr


@dataclass(frozen=True)
class Segment:
    """One spoken linguistic unit: features plus metadata."""

    segment_id: str
    utterance_id: str
    speaker_id: str | None
    unit_label: str | None
    level: str
    features: np.ndarray

    def __post_init__(self):
        if self.level not in LEVELS:
            raise DataError(
                f"segment {self.segment_id!r}: level must be one of {LEVELS}, "
                f"got {self.level!r}"
            )
        object.__setattr__(
            self, "features", validate_features(self.features, self.segment_id)
        )

    @property
    def n_frames(self) -> int:
        return self.features.shape[0]


@dataclass(frozen=True)
class Corpus:
    """Ordered, immutable collection of segments with a common feature dim."""

    segments: tuple
    feature_dim: int = field(init=False)
    level: str = field(init=False)

    def __post_init__(self):
        segments = tuple(self.segments)
        if not segments:
            raise EmptyCorpusError("corpus contains no segments")
        dims = {s.features.shape[1] for s in segments}
        if len(dims) != 1:
            raise DimensionError(f"mixed feature dimensions in corpus: {sorted(dims)}")
        levels = {s.level for s in segments}
        if len(levels) != 1:
            raise DataError(f"mixed segment levels in corpus: {sorted(levels)}")
        ids = [s.segment_id for s in segments]
        if len(set(ids)) != len(ids):
            seen, dup = set(), None
            for i in ids:
                if i in seen:
                    dup = i
                    break
                seen.add(i)
            raise DataError(f"duplicate segment_id {dup!r}")
        object.__setattr__(self, "segments", segments)
        object.__setattr__(self, "feature_dim", dims.pop())
        object.__setattr__(self, "level", levels.pop())

    def __len__(self) -> int:
        return len(self.segments)

    @property
    def size(self) -> int:
        return len(self.segments)

    def __getitem__(self, i: int) -> Segment:
        return self.segments[i]


@dataclass(frozen=True)
class MiniBatch:
    """Distinct corpus positions forming one training batch."""

    indices: tuple

    def __post_init__(self):
        idx = tuple(int(i) for i in self.indices)
        if len(idx) < 2:
            raise DataError(f"mini-batch needs at least 2 indices, got {len(idx)}")
        if len(set(idx)) != len(idx):
            raise DataError("mini-batch indices must be distinct")
        object.__setattr__(self, "indices", idx)

    @property
    def size(self) -> int:
        return len(self.indices)


@dataclass(frozen=True)
class SynthConfig:
    """Synthetic corpus generator settings.

    Each unit has a random prototype frame sequence; each speaker has a
    fixed affine channel transform (gain near identity plus bias, both
    scaled by ``speaker_shift_scale``). An instance is the prototype
    nearest-frame resampled to a random length in ``length_range``, passed
    through the speaker transform, plus Gaussian noise of ``noise_scale``.
    """

    n_units: int = 20
    n_speakers: int = 8
    instances_per_unit_speaker: int = 20
    length_range: tuple = (6, 12)
    feature_dim: int = 39
    speaker_shift_scale: float = 0.5
    noise_scale: float = 0.05
    level: str = "word"

    def __post_init__(self):
        if min(self.n_units, self.n_speakers, self.instances_per_unit_speaker) < 1:
            raise ConfigError("synth counts must all be >= 1")
        t_min, t_max = self.length_range
        if not (1 <= t_min <= t_max):
            raise ConfigError(f"invalid length_range {self.length_range}")
        if self.feature_dim < 1:
            raise ConfigError("feature_dim must be >= 1")
        if self.speaker_shift_scale < 0 or self.noise_scale < 0:
            raise ConfigError("scales must be >= 0")
        if self.level not in LEVELS:
            raise ConfigError(f"level must be one of {LEVELS}")


def _resample_nearest(proto: np.ndarray, length: int) -> np.ndarray:
    """Nearest-frame resampling of a prototype to the target length."""
    src = proto.shape[0]
    pick = np.minimum((np.arange(length) * src) // length, src - 1)
    return proto[pick]


def synth_corpus(cfg: SynthConfig, seed: int) -> Corpus:
    """Generate a labeled synthetic corpus; pure function of (cfg, seed).

    Segments are ordered speaker-major so that each speaker's segments are
    consecutive; each run of UTTERANCE_GROUP consecutive segments of one
    speaker forms one utterance (all segments of an utterance therefore
    share a speaker).
    """
    t_min, t_max = cfg.length_range
    f_dim = cfg.feature_dim

    proto_rng = rng_for(seed, "synth:prototypes")
    proto_lens = proto_rng.integers(t_min, t_max + 1, size=cfg.n_units)
    prototypes = [
        proto_rng.normal(size=(int(n), f_dim)) for n in proto_lens
    ]

    # the additive bias is kept subtler than the multiplicative gain so the
    # speaker confound is not dominated by one trivially-separable direction
    bias_sigma = 0.3
    spk_rng = rng_for(seed, "synth:speakers")
    gains, biases = [], []
    for _ in range(cfg.n_speakers):
        g = spk_rng.normal(size=(f_dim, f_dim)) / np.sqrt(f_dim)
        gains.append(np.eye(f_dim) + cfg.speaker_shift_scale * g)
        biases.append(cfg.speaker_shift_scale * bias_sigma * spk_rng.normal(size=f_dim))

    inst_rng = rng_for(seed, "synth:instances")
    segments = []
    for s in range(cfg.n_speakers):
        speaker = f"spk{s:03d}"
        per_speaker = 0
        for rep in range(cfg.instances_per_unit_speaker):
            for u in range(cfg.n_units):
                length = int(inst_rng.integers(t_min, t_max + 1))
                frames = _resample_nearest(prototypes[u], length)
                frames = frames @ gains[s].T + biases[s]
                if cfg.noise_scale > 0:
                    frames = frames + cfg.noise_scale * inst_rng.normal(
                        size=frames.shape
                    )
                else:
                    # keep the noise stream position independent of values
                    frames = frames.copy()
                utt = per_speaker // UTTERANCE_GROUP
                segments.append(
                    Segment(
                        segment_id=f"seg-{len(segments):06d}",
                        utterance_id=f"utt-{speaker}-{utt:04d}",
                        speaker_id=speaker,
                        unit_label=f"u{u:03d}",
                        level=cfg.level,
                        features=frames,
                    )
                )
                per_speaker += 1
    return Corpus(tuple(segments))


def load_corpus(path) -> Corpus:
    """Read a JSON-lines corpus file, preserving record order."""
    segments = []
    with open(path, "r", encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            if not line.strip():
                continue
            try:
                rec = json.loads(line)
            except json.JSONDecodeError as exc:
                raise ParseError(f"{path}:{lineno}: invalid JSON: {exc}") from exc
            try:
                seg = Segment(
                    segment_id=rec["segment_id"],
                    utterance_id=rec["utterance_id"],
                    speaker_id=rec.get("speaker_id"),
                    unit_label=rec.get("unit_label"),
                    level=rec["level"],
                    features=rec["features"],
                )
            except KeyError as exc:
                raise ParseError(f"{path}:{lineno}: missing key {exc}") from exc
            except (DataError, DimensionError) as exc:
                raise type(exc)(f"{path}:{lineno}: {exc}") from exc
            segments.append(seg)
    if not segments:
        raise EmptyCorpusError(f"{path}: no segments")
    return Corpus(tuple(segments))


def save_corpus(path, corpus: Corpus) -> None:
    """Write a corpus as JSON-lines; round-trips through load_corpus."""
    with open(path, "w", encoding="utf-8") as fh:
        for seg in corpus.segments:
            rec = {
                "segment_id": seg.segment_id,
                "utterance_id": seg.utterance_id,
                "speaker_id": seg.speaker_id,
                "unit_label": seg.unit_label,
                "level": seg.level,
                "features": seg.features.tolist(),
            }
            fh.write(json.dumps(rec) + "\n")


def save_embeddings(path, entries) -> None:
    """Write (segment_id, vector) entries as JSON-lines, order preserved.

    All vectors must share one dimension. Values are written with full
    double precision (shortest round-tripping decimal form).
    """
    entries = [(sid, np.asarray(v, dtype=np.float64)) for sid, v in entries]
    dims = {v.shape for _, v in entries}
    if any(len(shape) != 1 for shape in dims):
        raise DimensionError("embedding vectors must be 1-D")
    if len(dims) > 1:
        raise DimensionError(f"mixed embedding dimensions: {sorted(d[0] for d in dims)}")
    with open(path, "w", encoding="utf-8") as fh:
        for sid, vec in entries:
            fh.write(json.dumps({"segment_id": sid, "vector": vec.tolist()}) + "\n")


def load_embeddings(path):
    """Read a JSON-lines embedding file -> list of (segment_id, vector)."""
    out = []
    dim = None
    with open(path, "r", encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            if not line.strip():
                continue
            try:
                rec = json.loads(line)
                sid, vec = rec["segment_id"], np.asarray(rec["vector"], np.float64)
            except (json.JSONDecodeError, KeyError) as exc:
                raise ParseError(f"{path}:{lineno}: {exc}") from exc
            if vec.ndim != 1:
                raise DimensionError(f"{path}:{lineno}: vector must be 1-D")
            if dim is None:
                dim = vec.shape[0]
            elif vec.shape[0] != dim:
                raise DimensionError(
                    f"{path}:{lineno}: dimension {vec.shape[0]} != {dim}"
                )
            out.append((sid, vec))
    return out


def make_batches(corpus: Corpus, batch_size: int, seed: int, drop_last: bool = True):
    """Seeded uniform shuffle of corpus indices, cut into consecutive batches.

    With drop_last, every batch has exactly batch_size elements. Otherwise a
    shorter final batch is kept; a final batch of a single element is merged
    into the previous batch so that every batch supports pair mining.
    """
    if batch_size < 2:
        raise ConfigError(f"batch_size must be >= 2, got {batch_size}")
    m = len(corpus)
    order = np.random.default_rng(seed).permutation(m)
    batches = []
    for start in range(0, m, batch_size):
        chunk = order[start : start + batch_size]
        if len(chunk) < batch_size and drop_last:
            break
        if len(chunk) == 1:
            if batches:
                merged = batches.pop().indices + (int(chunk[0]),)
                batches.append(MiniBatch(merged))
            else:
                raise DataError("corpus too small to form a batch of >= 2 segments")
            break
        batches.append(MiniBatch(tuple(int(i) for i in chunk)))
    return batches


def split_corpus(corpus: Corpus, test_fraction: float, seed: int):
    """Seeded shuffle split -> (train Corpus, test Corpus)."""
    if not 0.0 < test_fraction < 1.0:
        raise ConfigError("test_fraction must be in (0, 1)")
    m = len(corpus)
    order = rng_for(seed, "split").permutation(m)
    n_test = max(1, int(round(m * test_fraction)))
    if n_test >= m:
        raise DataError("split leaves no training segments")
    test_idx = set(int(i) for i in order[:n_test])
    train = [corpus[i] for i in range(m) if i not in test_idx]
    test = [corpus[i] for i in range(m) if i in test_idx]
    return Corpus(tuple(train)), Corpus(tuple(test))
