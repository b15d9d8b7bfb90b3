"""Cosine statistics, k-means, and clustering-accuracy oracles."""

import itertools
import math

import numpy as np
import pytest

from segembed.errors import DataError, EvaluationError, NumericError
from segembed.evalcluster import (
    accuracy_curve,
    cluster_accuracy,
    confusion_matrix,
    cosine,
    intra_inter_stats,
    kmeans,
    select_top_labels,
    within_cluster_ss,
)

RNG = np.random.default_rng(41)


class TestCosine:
    def test_identical_is_one(self):
        v = RNG.normal(size=5)
        assert cosine(v, v) == pytest.approx(1.0)

    def test_orthogonal_is_zero(self):
        assert cosine([1.0, 0.0], [0.0, 1.0]) == 0.0

    def test_antipodal_is_minus_one(self):
        assert cosine([1.0, 0.0], [-1.0, 0.0]) == -1.0

    def test_scale_invariance(self):
        a, b = RNG.normal(size=4), RNG.normal(size=4)
        assert cosine(2.5 * a, 0.3 * b) == pytest.approx(cosine(a, b), abs=1e-12)

    def test_zero_vector_rejected(self):
        with pytest.raises(NumericError):
            cosine(np.zeros(3), np.ones(3))


def brute_intra_inter(vectors, labels):
    intra, inter = [], []
    for i in range(len(vectors)):
        for j in range(i + 1, len(vectors)):
            c = cosine(vectors[i], vectors[j])
            (intra if labels[i] == labels[j] else inter).append(c)
    return float(np.mean(intra)), float(np.mean(inter))


class TestIntraInterStats:
    def test_hand_example(self):
        vectors = np.array([[1.0, 0.0], [1.0, 0.0], [0.0, 1.0]])
        report = intra_inter_stats(vectors, ["A", "A", "B"])
        assert report.intra == pytest.approx(1.0)
        assert report.inter == pytest.approx(0.0, abs=1e-12)
        assert report.delta == pytest.approx(1.0)
        assert report.intra_pairs == 1 and report.inter_pairs == 2

    def test_all_identical_points(self):
        vectors = np.tile([0.3, 0.4], (4, 1))
        report = intra_inter_stats(vectors, ["A", "A", "B", "B"])
        assert report.intra == pytest.approx(1.0)
        assert report.inter == pytest.approx(1.0)
        assert report.delta == pytest.approx(0.0)

    def test_matches_pairwise_enumeration(self):
        for trial in range(30):
            rng = np.random.default_rng(trial)
            n = int(rng.integers(4, 12))
            vectors = rng.normal(size=(n, 3))
            labels = [str(rng.integers(3)) for _ in range(n)]
            if len(set(labels)) < 2 or all(labels.count(l) < 2 for l in labels):
                continue
            report = intra_inter_stats(vectors, labels)
            intra, inter = brute_intra_inter(vectors, labels)
            assert report.intra == pytest.approx(intra, abs=1e-10)
            assert report.inter == pytest.approx(inter, abs=1e-10)

    def test_all_singletons_rejected(self):
        with pytest.raises(EvaluationError):
            intra_inter_stats(RNG.normal(size=(3, 2)), ["a", "b", "c"])

    def test_single_label_rejected(self):
        with pytest.raises(EvaluationError):
            intra_inter_stats(RNG.normal(size=(3, 2)), ["a", "a", "a"])


class TestKmeans:
    def test_two_clump_example_matches_brute_force_optimum(self):
        points = np.array([[0.0, 0.0], [0.0, 0.1], [10.0, 10.0], [10.0, 10.1]])
        assign = kmeans(points, 2, seed=0)
        got = frozenset(
            frozenset(int(i) for i in np.flatnonzero(assign == c)) for c in (0, 1)
        )
        # brute force over all 2-partitions of 4 points
        best, best_cost = None, np.inf
        for bits in itertools.product([0, 1], repeat=4):
            if len(set(bits)) < 2:
                continue
            cost = within_cluster_ss(points, np.asarray(bits), 2)
            if cost < best_cost:
                best_cost = cost
                best = frozenset(
                    frozenset(i for i in range(4) if bits[i] == c) for c in (0, 1)
                )
        assert got == best == frozenset(
            [frozenset({0, 1}), frozenset({2, 3})]
        )

    def test_n_equals_point_count(self):
        points = RNG.normal(size=(6, 2))
        assign = kmeans(points, 6, seed=1)
        assert sorted(assign) == list(range(6))

    def test_deterministic(self):
        points = RNG.normal(size=(20, 3))
        assert np.array_equal(kmeans(points, 4, seed=7), kmeans(points, 4, seed=7))

    def test_all_ids_in_range_and_nonempty(self):
        points = RNG.normal(size=(15, 2))
        assign = kmeans(points, 5, seed=2)
        assert set(assign) == set(range(5))

    def test_cost_never_increases(self):
        for seed in range(5):
            points = np.random.default_rng(seed).normal(size=(30, 3))
            _, history = kmeans(points, 4, seed=seed, return_history=True)
            diffs = np.diff(history)
            assert np.all(diffs <= 1e-9)

    def test_too_many_clusters_rejected(self):
        with pytest.raises(DataError):
            kmeans(RNG.normal(size=(3, 2)), 4, seed=0)

    def test_duplicate_points_still_fill_clusters(self):
        points = np.array([[0.0, 0.0]] * 3 + [[1.0, 1.0]] * 3)
        assign = kmeans(points, 3, seed=0)
        assert set(assign) == {0, 1, 2}


class TestConfusionMatrix:
    def test_counting_example(self):
        counts = confusion_matrix(["A", "A", "B"], [0, 0, 1], ("A", "B"), 2)
        assert np.array_equal(counts, [[2, 0], [0, 1]])

    def test_empty_rejected(self):
        with pytest.raises(DataError):
            confusion_matrix([], [], ("A",), 1)

    def test_unknown_label_rejected(self):
        with pytest.raises(DataError):
            confusion_matrix(["C"], [0], ("A", "B"), 1)

    def test_conservation(self):
        rng = np.random.default_rng(3)
        labels = [str(rng.integers(4)) for _ in range(50)]
        assigns = rng.integers(0, 6, size=50)
        counts = confusion_matrix(labels, assigns, tuple(sorted(set(labels))), 6)
        assert counts.sum() == 50


class TestClusterAccuracy:
    def test_perfect_diagonal(self):
        assert cluster_accuracy([[5, 0], [0, 5]]) == 1.0

    def test_hand_example(self):
        assert cluster_accuracy([[3, 1], [0, 4]]) == pytest.approx(0.875)

    def test_degenerate_single_cluster_scores_one(self):
        assert cluster_accuracy([[5, 0], [5, 0]]) == 1.0

    def test_all_zero_rejected(self):
        with pytest.raises(DataError):
            cluster_accuracy(np.zeros((2, 2), dtype=int))

    def test_matches_restatement_on_random_matrices(self):
        rng = np.random.default_rng(4)
        for _ in range(200):
            m = int(rng.integers(1, 11))
            n = int(rng.integers(1, 21))
            counts = rng.integers(0, 9, size=(m, n))
            if counts.sum() == 0:
                counts[0, 0] = 1
            expected = counts.max(axis=1).sum() / counts.sum()
            assert cluster_accuracy(counts) == pytest.approx(expected, abs=1e-15)

    def test_column_permutation_invariance(self):
        rng = np.random.default_rng(5)
        counts = rng.integers(0, 9, size=(4, 6))
        counts[0, 0] += 1
        perm = rng.permutation(6)
        assert cluster_accuracy(counts) == pytest.approx(
            cluster_accuracy(counts[:, perm]), abs=1e-15
        )

    def test_count_scaling_invariance(self):
        counts = np.array([[3, 1], [0, 4]])
        assert cluster_accuracy(counts) == cluster_accuracy(counts * 7)


class TestProtocol:
    def test_select_top_labels(self):
        labels = ["a"] * 3 + ["b"] * 5 + ["c"] * 3 + [None]
        assert select_top_labels(labels, 2) == ("b", "a")

    def test_accuracy_curve_shape_and_range(self):
        rng = np.random.default_rng(6)
        centers = rng.normal(size=(3, 4)) * 5
        labels = [str(i % 3) for i in range(60)]
        vectors = np.stack(
            [centers[int(l)] + 0.1 * rng.normal(size=4) for l in labels]
        )
        curve = accuracy_curve(vectors, labels, m=3, n_values=(3, 6), seed=0)
        assert [n for n, _ in curve] == [3, 6]
        assert all(0.0 < acc <= 1.0 for _, acc in curve)
        assert curve[0][1] > 0.9  # well-separated clumps recovered at n = m
