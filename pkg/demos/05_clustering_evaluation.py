"""Clustering-based evaluation of embedding quality.

k-means clusters the embeddings at several cluster counts; a label-by-
cluster confusion matrix is normalized, each label claims its best cluster,
and the claimed mass summed over labels gives the accuracy. Well-separated
embeddings approach 1.0 as soon as the cluster count reaches the label
count.
"""

import numpy as np

from segembed import (
    accuracy_curve,
    cluster_accuracy,
    confusion_matrix,
    kmeans,
    select_top_labels,
)

rng = np.random.default_rng(0)

print("=== hand-sized example ===")
counts = confusion_matrix(["A", "A", "A", "B", "B"], [0, 0, 1, 1, 1], ("A", "B"), 2)
print(f"confusion matrix:\n{counts}")
print(f"accuracy: {cluster_accuracy(counts):.3f} "
      "(label A claims cluster 0 with mass 2/5, B claims cluster 1 with 2/5)")
print(f"degenerate single-cluster case [[5,0],[5,0]]: "
      f"{cluster_accuracy([[5, 0], [5, 0]])} (both labels share one cluster)")

print("\n=== synthetic embedding clouds ===")
n_labels = 6
centers = rng.normal(size=(n_labels, 5)) * 4.0
labels = [f"unit{i % n_labels}" for i in range(240)]
tight = np.stack([centers[i % n_labels] + 0.15 * rng.normal(size=5)
                  for i in range(240)])
smeared = np.stack([centers[i % n_labels] + 2.5 * rng.normal(size=5)
                    for i in range(240)])

top = select_top_labels(labels, n_labels)
print(f"evaluated labels: {top}")
for name, cloud in (("tight clusters", tight), ("smeared clusters", smeared)):
    curve = accuracy_curve(cloud, labels, m=n_labels,
                           n_values=(n_labels, 2 * n_labels, 4 * n_labels), seed=3)
    row = "  ".join(f"n={n}: {acc:.3f}" for n, acc in curve)
    print(f"{name:>17}: {row}")

print("\n=== k-means behavior ===")
points = np.vstack([rng.normal(size=(30, 2)), rng.normal(size=(30, 2)) + 8.0])
assign, history = kmeans(points, 2, seed=0, return_history=True)
print(f"two clumps of 30 -> cluster sizes {np.bincount(assign).tolist()}")
print(f"objective trajectory (never increases): "
      f"{[round(h, 1) for h in history]}")
