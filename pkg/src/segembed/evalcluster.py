"""Embedding-quality analysis: intra/inter cosine statistics and k-means
clustering accuracy.

The cosine gap report gives exact means over all same-label and
different-label unordered pairs (computed via the norm-of-summed-unit-
vectors identity, so no quadratic pair enumeration is needed). Clustering
accuracy normalizes a label x cluster confusion matrix, picks each label's
best cluster, and sums that mass.
"""

import csv
from dataclasses import dataclass

import numpy as np

from .errors import DataError, EvaluationError, NumericError
from .seeding import derive_seed


def cosine(a, b) -> float:
    """Cosine similarity of two equal-length nonzero vectors."""
    a = np.asarray(a, dtype=np.float64)
    b = np.asarray(b, dtype=np.float64)
    if a.shape != b.shape or a.ndim != 1:
        raise DataError(f"vectors must be 1-D of equal length: {a.shape} vs {b.shape}")
    na, nb = np.linalg.norm(a), np.linalg.norm(b)
    if na == 0.0 or nb == 0.0:
        raise NumericError("cosine undefined for a zero vector")
    return float(np.clip(np.dot(a, b) / (na * nb), -1.0, 1.0))


@dataclass(frozen=True)
class CosineGapReport:
    """Mean cosine over intra-class pairs, inter-class pairs, and the gap."""

    intra: float
    inter: float
    intra_pairs: int
    inter_pairs: int

    @property
    def delta(self) -> float:
        return self.intra - self.inter


def intra_inter_stats(vectors, labels) -> CosineGapReport:
    """Exact mean cosine similarity over all same-label and different-label
    unordered pairs of the labeled embeddings."""
    mat = np.asarray(vectors, dtype=np.float64)
    if mat.ndim != 2 or mat.shape[0] != len(labels):
        raise DataError("vectors must be (N, d) with one label per row")
    n = mat.shape[0]
    if n < 2:
        raise EvaluationError("need at least 2 labeled points")
    norms = np.linalg.norm(mat, axis=1)
    if np.any(norms == 0.0):
        raise NumericError("cosine statistics undefined with zero vectors")
    unit = mat / norms[:, None]

    # sum of pairwise dots within a set = (||sum||^2 - count) / 2 on unit rows
    labels = np.asarray(labels)
    intra_sum = 0.0
    intra_count = 0
    for label in np.unique(labels):
        rows = unit[labels == label]
        if rows.shape[0] < 2:
            continue
        s = rows.sum(axis=0)
        intra_sum += (float(s @ s) - rows.shape[0]) / 2.0
        intra_count += rows.shape[0] * (rows.shape[0] - 1) // 2
    s_all = unit.sum(axis=0)
    total_sum = (float(s_all @ s_all) - n) / 2.0
    total_count = n * (n - 1) // 2
    inter_count = total_count - intra_count
    if intra_count == 0:
        raise EvaluationError("no intra-class pair (all labels are singletons)")
    if inter_count == 0:
        raise EvaluationError("no inter-class pair (single label)")
    return CosineGapReport(
        intra=intra_sum / intra_count,
        inter=(total_sum - intra_sum) / inter_count,
        intra_pairs=intra_count,
        inter_pairs=inter_count,
    )


# -- k-means -------------------------------------------------------------


def _plus_plus_init(mat: np.ndarray, n_clusters: int, rng) -> np.ndarray:
    n = mat.shape[0]
    centers = np.empty((n_clusters, mat.shape[1]))
    centers[0] = mat[int(rng.integers(n))]
    d2 = np.sum((mat - centers[0]) ** 2, axis=1)
    for c in range(1, n_clusters):
        total = d2.sum()
        if total > 0:
            idx = int(rng.choice(n, p=d2 / total))
        else:
            idx = int(rng.integers(n))
        centers[c] = mat[idx]
        d2 = np.minimum(d2, np.sum((mat - centers[c]) ** 2, axis=1))
    return centers


def _assign(mat: np.ndarray, centers: np.ndarray) -> np.ndarray:
    d2 = (
        np.sum(mat * mat, axis=1)[:, None]
        - 2.0 * mat @ centers.T
        + np.sum(centers * centers, axis=1)[None, :]
    )
    return np.argmin(d2, axis=1)


def kmeans(vectors, n_clusters: int, seed: int, max_iter: int = 100,
           tol: float = 1e-6, return_history: bool = False):
    """Lloyd iterations from seeded k-means++ initialization.

    Runs until the largest center movement drops below tol or max_iter is
    reached; empty clusters are repaired by reassigning the point currently
    farthest from its center. Returns one cluster id in [0, n) per point
    (with return_history, also the point-to-center cost after each step).
    """
    mat = np.asarray(vectors, dtype=np.float64)
    if mat.ndim != 2:
        raise DataError("vectors must be (N, d)")
    n = mat.shape[0]
    if not 1 <= n_clusters <= n:
        raise DataError(f"need 1 <= n_clusters <= {n}, got {n_clusters}")
    rng = np.random.default_rng(seed)
    centers = _plus_plus_init(mat, n_clusters, rng)
    assign = _repair_empty(mat, centers, _assign(mat, centers), n_clusters)
    cost = lambda: float(np.sum((mat - centers[assign]) ** 2))
    history = [cost()]
    for _ in range(max_iter):
        new_centers = centers.copy()
        for c in range(n_clusters):
            members = mat[assign == c]
            if members.shape[0]:
                new_centers[c] = members.mean(axis=0)
        movement = np.sqrt(np.sum((new_centers - centers) ** 2, axis=1)).max()
        centers = new_centers
        assign = _repair_empty(mat, centers, _assign(mat, centers), n_clusters)
        history.append(cost())
        if movement < tol:
            break
    return (assign, history) if return_history else assign


def _repair_empty(mat, centers, assign, n_clusters):
    counts = np.bincount(assign, minlength=n_clusters)
    for c in np.flatnonzero(counts == 0):
        dist = np.sqrt(np.sum((mat - centers[assign]) ** 2, axis=1))
        donors = counts[assign] > 1
        if not donors.any():
            donors = np.ones(len(assign), dtype=bool)
        dist = np.where(donors, dist, -1.0)
        mover = int(np.argmax(dist))
        counts[assign[mover]] -= 1
        assign = assign.copy()
        assign[mover] = c
        centers[c] = mat[mover]
        counts[c] += 1
    return assign


def within_cluster_ss(vectors, assignments, n_clusters: int) -> float:
    """Within-cluster sum of squares for given assignments."""
    mat = np.asarray(vectors, dtype=np.float64)
    total = 0.0
    for c in range(n_clusters):
        members = mat[np.asarray(assignments) == c]
        if members.shape[0]:
            total += float(np.sum((members - members.mean(axis=0)) ** 2))
    return total


# -- confusion matrix and accuracy -----------------------------------------


def confusion_matrix(labels, assignments, label_universe, n_clusters: int):
    """Count matrix C with C[i, j] = points of label i assigned to cluster j."""
    if len(labels) != len(assignments):
        raise DataError("labels and assignments must have equal length")
    if len(labels) == 0:
        raise DataError("empty inputs")
    index = {label: i for i, label in enumerate(label_universe)}
    counts = np.zeros((len(label_universe), n_clusters), dtype=np.int64)
    for label, cluster in zip(labels, assignments):
        if label not in index:
            raise DataError(f"unknown label {label!r}")
        c = int(cluster)
        if not 0 <= c < n_clusters:
            raise DataError(f"cluster id {c} outside [0, {n_clusters})")
        counts[index[label], c] += 1
    return counts


def cluster_accuracy(counts) -> float:
    """Normalize counts, take each label's best cluster, sum that mass.

    Equals sum_i max_j C[i, j] / sum C. The degenerate everything-in-one-
    cluster solution scores 1.0: several labels may share a best cluster.
    """
    counts = np.asarray(counts)
    if counts.ndim != 2 or np.any(counts < 0):
        raise DataError("counts must be a nonnegative matrix")
    total = counts.sum()
    if total == 0:
        raise DataError("all-zero confusion matrix")
    # argmax of c(i, j) = C[i, j] / total equals argmax of C[i, j]; summing
    # the counts before the one division keeps the result exact
    best = np.argmax(counts, axis=1)  # ties -> smallest cluster index
    return float(sum(counts[i, best[i]] for i in range(counts.shape[0])) / total)


def select_top_labels(labels, m: int):
    """The m most frequent labels (ties broken lexicographically)."""
    counts = {}
    for label in labels:
        if label is not None:
            counts[label] = counts.get(label, 0) + 1
    if m < 1 or m > len(counts):
        raise DataError(f"m must be in [1, {len(counts)}], got {m}")
    ranked = sorted(counts.items(), key=lambda kv: (-kv[1], kv[0]))
    return tuple(label for label, _ in ranked[:m])


def accuracy_curve(vectors, labels, m: int, n_values, seed: int):
    """Clustering accuracy at each cluster count n, over the points bearing
    the top-m most frequent labels. Returns [(n, accuracy), ...]."""
    universe = select_top_labels(labels, m)
    keep = [i for i, label in enumerate(labels) if label in set(universe)]
    mat = np.asarray(vectors, dtype=np.float64)[keep]
    kept_labels = [labels[i] for i in keep]
    out = []
    for n in n_values:
        assign = kmeans(mat, n, derive_seed(seed, f"kmeans:n={n}"))
        counts = confusion_matrix(kept_labels, assign, universe, n)
        out.append((int(n), cluster_accuracy(counts)))
    return out


# -- CSV reports -------------------------------------------------------------


def write_cosine_gap_csv(path, rows) -> None:
    """Rows of (variant, level, CosineGapReport) -> cosine-gap table."""
    with open(path, "w", encoding="utf-8", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["variant", "level", "intra", "inter", "delta"])
        for variant, level, report in rows:
            writer.writerow(
                [variant, level, repr(report.intra), repr(report.inter),
                 repr(report.delta)]
            )


def write_accuracy_curve_csv(path, curves) -> None:
    """Mapping variant -> [(n, acc), ...] -> accuracy-vs-n table."""
    with open(path, "w", encoding="utf-8", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["variant", "n_clusters", "accuracy"])
        for variant in sorted(curves):
            for n, acc in curves[variant]:
                writer.writerow([variant, n, repr(acc)])
