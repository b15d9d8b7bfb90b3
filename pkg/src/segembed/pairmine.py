"""Positive/negative pair mining inside one mini-batch.

Two miners over the batch's embedding vectors: an undirected k-nearest
neighbor graph (positives = union of each point's k nearest neighbors,
negatives = everything else), and the unbalanced-data variant (positives =
the k globally shortest pairs of the fully-connected batch graph,
negatives = k seeded uniform draws from the remaining pairs).

Distances are Euclidean. All tie-breaking is lexicographic by
(distance, i, j) so results are reproducible bit-for-bit.
"""

import json
from dataclasses import dataclass

import numpy as np

from .errors import DataError, DimensionError


class DistanceCounter:
    """Tally of pairwise-distance evaluations, for complexity accounting."""

    def __init__(self):
        self.count = 0

    def add(self, n: int) -> None:
        self.count += int(n)


@dataclass(frozen=True)
class PairSets:
    """Positive and negative unordered index pairs within one mini-batch."""

    positives: tuple
    negatives: tuple
    k: int

    def __post_init__(self):
        pos = tuple((int(i), int(j)) for i, j in self.positives)
        neg = tuple((int(i), int(j)) for i, j in self.negatives)
        for i, j in pos + neg:
            if i >= j or i < 0:
                raise DataError(f"pair ({i}, {j}) must satisfy 0 <= i < j")
        if len(set(pos)) != len(pos) or len(set(neg)) != len(neg):
            raise DataError("duplicate pairs within a pair list")
        if set(pos) & set(neg):
            raise DataError("positive and negative pair sets must be disjoint")
        object.__setattr__(self, "positives", pos)
        object.__setattr__(self, "negatives", neg)


def _as_matrix(vectors) -> np.ndarray:
    try:
        mat = np.asarray(vectors, dtype=np.float64)
    except ValueError as exc:
        raise DimensionError(f"vectors must share one dimension: {exc}") from exc
    if mat.ndim != 2:
        lengths = {np.asarray(v).shape for v in vectors}
        raise DimensionError(f"vectors must share one dimension, got {sorted(lengths)}")
    if mat.shape[0] < 2:
        raise DataError("need at least 2 vectors")
    return mat


def pairwise_distances(vectors, counter: DistanceCounter | None = None) -> np.ndarray:
    """Symmetric Euclidean distance matrix with a zero diagonal."""
    mat = _as_matrix(vectors)
    n = mat.shape[0]
    sq = np.sum(mat * mat, axis=1)
    d2 = sq[:, None] + sq[None, :] - 2.0 * (mat @ mat.T)
    np.maximum(d2, 0.0, out=d2)
    dist = np.sqrt(d2)
    dist = 0.5 * (dist + dist.T)
    np.fill_diagonal(dist, 0.0)
    if counter is not None:
        counter.add(n * (n - 1) // 2)
    return dist


def _all_pairs(n: int):
    return [(i, j) for i in range(n) for j in range(i + 1, n)]


def knn_graph_pairs(
    vectors,
    k: int,
    counter: DistanceCounter | None = None,
    negative_cap: int | None = None,
    seed: int | None = None,
) -> PairSets:
    """Undirected k-NN graph of the batch.

    Positives: deduplicated union over points of their k nearest neighbors
    (ties by smaller index). Negatives: all remaining unordered pairs, or,
    with ``negative_cap``, a seeded per-point sample of that many.
    """
    dist = pairwise_distances(vectors, counter)
    n = dist.shape[0]
    if not 1 <= k <= n - 1:
        raise DataError(f"k must satisfy 2 <= k+1 <= batch size; got k={k}, |B|={n}")
    positives = set()
    for i in range(n):
        order = sorted((dist[i, j], j) for j in range(n) if j != i)
        for _, j in order[:k]:
            positives.add((min(i, j), max(i, j)))
    remaining = [p for p in _all_pairs(n) if p not in positives]
    if negative_cap is None:
        negatives = remaining
    else:
        if seed is None:
            raise DataError("negative_cap requires a seed")
        rng = np.random.default_rng(seed)
        chosen = set()
        for i in range(n):
            mine = [p for p in remaining if i in p and p not in chosen]
            take = min(negative_cap, len(mine))
            if take:
                for idx in rng.choice(len(mine), size=take, replace=False):
                    chosen.add(mine[int(idx)])
        negatives = sorted(chosen)
    return PairSets(tuple(sorted(positives)), tuple(negatives), k)


def topk_global_pairs(
    vectors, k: int, seed: int, counter: DistanceCounter | None = None
) -> PairSets:
    """Fully-connected batch graph: top-k shortest pairs as positives and
    k seeded uniform draws (without replacement) from the rest as negatives.
    """
    dist = pairwise_distances(vectors, counter)
    n = dist.shape[0]
    total = n * (n - 1) // 2
    if k < 1 or total < 2 * k:
        raise DataError(
            f"need |B|(|B|-1)/2 >= 2k: batch of {n} has {total} pairs, k={k}"
        )
    ranked = sorted((dist[i, j], i, j) for i, j in _all_pairs(n))
    positives = tuple((i, j) for _, i, j in ranked[:k])
    rest = [(i, j) for _, i, j in ranked[k:]]
    rng = np.random.default_rng(seed)
    pick = rng.choice(len(rest), size=k, replace=False)
    negatives = tuple(rest[int(i)] for i in sorted(pick))
    return PairSets(positives, negatives, k)


def write_pair_dump(path, records) -> None:
    """Audit file: one JSON object per batch with the batch's corpus indices
    and its mined within-batch positive/negative pairs."""
    with open(path, "w", encoding="utf-8") as fh:
        for rec in records:
            fh.write(
                json.dumps(
                    {
                        "indices": [int(i) for i in rec["indices"]],
                        "positives": [[int(i), int(j)] for i, j in rec["positives"]],
                        "negatives": [[int(i), int(j)] for i, j in rec["negatives"]],
                    }
                )
                + "\n"
            )
