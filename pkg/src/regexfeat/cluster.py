"""Unsupervised path: 2-D embedding, density clustering, best-match accuracy.

The embedder is a small interface (anything producing an Embedding2D);
the principal-component projection below is the deterministic reference
implementation.  Density clustering follows the classic core/border/noise
semantics with a documented tie-break: clusters are numbered in discovery
order (ascending seed index), and a border point reachable from several
clusters belongs to the one discovered first.

Cluster result JSON: ``{"eps": float, "min_pts": int, "assignment": [int|-1, ...]}``
with -1 encoding noise.  Embedding CSV: ``sample_id,x,y,label``.
"""

from __future__ import annotations

import csv
import json
import logging
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .errors import DataError
from .matcher import FeatureMatrix

log = logging.getLogger(__name__)

NOISE = -1


@dataclass(eq=False)
class Embedding2D:
    points: np.ndarray  # (n, 2), all finite
    method: str
    corpus_fingerprint: str


@dataclass(eq=False)
class ClusterResult:
    assignment: np.ndarray  # (n,) cluster id 0..c-1, or NOISE
    eps: float
    min_pts: int

    @property
    def n_clusters(self) -> int:
        non_noise = self.assignment[self.assignment != NOISE]
        return int(non_noise.max()) + 1 if non_noise.size else 0


@dataclass(frozen=True)
class AssignmentResult:
    mapping: dict[int, str]  # injective cluster id -> class label
    accuracy: float  # correctly mapped / all points, noise always wrong


def pca_embed(matrix: FeatureMatrix) -> Embedding2D:
    """Project mean-centered rows onto the top-2 covariance eigenvectors.

    Sign convention pins the eigenvector ambiguity: each component's
    largest-magnitude loading is positive.  Raises on rank-0 input (all
    rows identical).
    """
    x = np.asarray(matrix.values, dtype=np.float64)
    n, d = x.shape
    if n < 3:
        raise ValueError(f"need at least 3 rows, got {n}")
    if d < 2:
        raise ValueError(f"need at least 2 feature dimensions, got {d}")
    centered = x - x.mean(axis=0)
    if not np.any(np.abs(centered) > 1e-15):
        raise DataError("cannot embed: all rows are identical (rank 0)")
    cov = centered.T @ centered / (n - 1)
    eigvals, eigvecs = np.linalg.eigh(cov)  # ascending
    components = []
    for which in (-1, -2):
        vec = eigvecs[:, which]
        peak = np.argmax(np.abs(vec))
        if vec[peak] < 0:
            vec = -vec
        components.append(vec)
    points = centered @ np.stack(components, axis=1)
    return Embedding2D(points=points, method="pca",
                       corpus_fingerprint=matrix.corpus_fingerprint)


def default_eps(points) -> float:
    """Declared heuristic: 5% of the bounding-box diagonal."""
    pts = getattr(points, "points", points)
    spans = pts.max(axis=0) - pts.min(axis=0)
    diagonal = float(np.sqrt((spans**2).sum()))
    return max(0.05 * diagonal, 1e-12)


def dbscan(points, eps: float, min_pts: int) -> ClusterResult:
    """Density clustering; neighborhoods are closed Euclidean balls and a
    point counts itself, so a core point has >= min_pts points within eps."""
    if eps <= 0:
        raise ValueError("eps must be > 0")
    if min_pts < 1:
        raise ValueError("min_pts must be >= 1")
    pts = np.asarray(getattr(points, "points", points), dtype=np.float64)
    n = pts.shape[0]
    eps_sq = eps * eps

    def neighbors(i: int) -> np.ndarray:
        d_sq = ((pts - pts[i]) ** 2).sum(axis=1)
        return np.flatnonzero(d_sq <= eps_sq)

    UNSEEN = -2
    labels = np.full(n, UNSEEN, dtype=np.int64)
    cluster = 0
    for i in range(n):
        if labels[i] != UNSEEN:
            continue
        seed_neighbors = neighbors(i)
        if seed_neighbors.size < min_pts:
            labels[i] = NOISE  # may become a border point later
            continue
        labels[i] = cluster
        queue = list(seed_neighbors)
        head = 0
        while head < len(queue):
            q = queue[head]
            head += 1
            if labels[q] == NOISE:
                labels[q] = cluster  # border point claimed by first cluster
            if labels[q] != UNSEEN:
                continue
            labels[q] = cluster
            q_neighbors = neighbors(q)
            if q_neighbors.size >= min_pts:
                queue.extend(q_neighbors)
        cluster += 1
    return ClusterResult(assignment=labels, eps=float(eps), min_pts=int(min_pts))


def _min_cost_assignment(cost: np.ndarray) -> list[int]:
    """Column assigned to each row of a square cost matrix, minimizing the
    total; potentials + shortest augmenting paths, O(n^3)."""
    n = cost.shape[0]
    INF = float("inf")
    u = [0.0] * (n + 1)
    v = [0.0] * (n + 1)
    row_of_col = [0] * (n + 1)  # 1-based rows; 0 means free
    way = [0] * (n + 1)
    for row in range(1, n + 1):
        row_of_col[0] = row
        j0 = 0
        min_to = [INF] * (n + 1)
        used = [False] * (n + 1)
        while True:
            used[j0] = True
            i0 = row_of_col[j0]
            delta = INF
            j1 = 0
            for j in range(1, n + 1):
                if used[j]:
                    continue
                reduced = cost[i0 - 1, j - 1] - u[i0] - v[j]
                if reduced < min_to[j]:
                    min_to[j] = reduced
                    way[j] = j0
                if min_to[j] < delta:
                    delta = min_to[j]
                    j1 = j
            for j in range(n + 1):
                if used[j]:
                    u[row_of_col[j]] += delta
                    v[j] -= delta
                else:
                    min_to[j] -= delta
            j0 = j1
            if row_of_col[j0] == 0:
                break
        while j0:
            j1 = way[j0]
            row_of_col[j0] = row_of_col[j1]
            j0 = j1
    col_of_row = [0] * n
    for j in range(1, n + 1):
        col_of_row[row_of_col[j] - 1] = j - 1
    return col_of_row


def best_match_accuracy(clusters: ClusterResult, gold_labels) -> AssignmentResult:
    """Injective cluster-to-class mapping maximizing matched points.

    Built from the cluster x class contingency matrix over non-noise
    points (padded square for the assignment); the accuracy denominator
    is ALL points, so noise is always scored wrong.
    """
    gold = list(gold_labels)
    assignment = clusters.assignment
    if len(gold) != assignment.shape[0]:
        raise ValueError(
            f"length mismatch: {assignment.shape[0]} points vs {len(gold)} labels"
        )
    c = clusters.n_clusters
    if c == 0:
        raise DataError("every point is noise; nothing to match")
    classes = tuple(sorted(set(gold)))
    class_index = {name: j for j, name in enumerate(classes)}
    k = len(classes)
    contingency = np.zeros((c, k), dtype=np.int64)
    for cluster_id, label in zip(assignment, gold):
        if cluster_id != NOISE:
            contingency[cluster_id, class_index[label]] += 1
    side = max(c, k)
    padded = np.zeros((side, side), dtype=np.float64)
    padded[:c, :k] = contingency
    col_of_row = _min_cost_assignment(padded.max() - padded)
    mapping = {i: classes[col_of_row[i]] for i in range(c) if col_of_row[i] < k}
    matched = sum(int(contingency[i, class_index[mapping[i]]]) for i in mapping)
    return AssignmentResult(mapping=mapping, accuracy=matched / len(gold))


# --- interchange -------------------------------------------------------------


def write_embedding_csv(
    embedding: Embedding2D, sample_ids, labels, path: str | Path
) -> None:
    """Rows of sample_id,x,y,label; label cell empty when unlabeled."""
    labels = [""] * len(sample_ids) if labels is None else [l or "" for l in labels]
    with open(path, "w", encoding="utf-8", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(["sample_id", "x", "y", "label"])
        for sid, (x, y), label in zip(sample_ids, embedding.points, labels):
            writer.writerow([sid, repr(float(x)), repr(float(y)), label])


def write_cluster_json(result: ClusterResult, path: str | Path) -> None:
    doc = {
        "eps": result.eps,
        "min_pts": result.min_pts,
        "assignment": [int(a) for a in result.assignment],
    }
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(doc, fh)
        fh.write("\n")
