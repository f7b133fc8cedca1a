"""Hierarchical agglomerative clustering on a precomputed distance matrix.

Inter-cluster distances are maintained with the Lance-Williams update
formulas. A per-row nearest-neighbour cache keeps the merge loop close to
O(n^2) for the usual inputs instead of rescanning the whole matrix.

Cluster ids follow the usual dendrogram convention: the n input points are
clusters 0..n-1 and the cluster created by merge ``s`` gets id ``n + s``.
Among pairs at the same distance the one with the smallest
(min id, max id) is merged first.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass
from typing import Hashable, Mapping, NamedTuple, Optional

import numpy as np

from .errors import ConfigError, DimensionError

logger = logging.getLogger(__name__)

METRICS = ("euclidean", "manhattan", "cosine")
LINKAGES = ("single", "complete", "average", "ward")


@dataclass(frozen=True)
class DistanceMatrix:
    d: np.ndarray
    metric: str
    ids: Optional[tuple] = None

    @property
    def n(self) -> int:
        return self.d.shape[0]


def pairwise_distances(matrix, metric: str) -> DistanceMatrix:
    """Distances between all rows of a FeatureMatrix or 2-D array.

    Cosine distance involving a zero vector is 1.0.
    """
    ids = getattr(matrix, "instance_ids", None)
    X = np.asarray(getattr(matrix, "values", matrix), dtype=np.float64)
    if X.ndim != 2 or X.shape[0] < 1:
        raise DimensionError(f"expected a non-empty 2-D matrix, got shape {X.shape}")
    if not np.all(np.isfinite(X)):
        raise ValueError("feature matrix contains non-finite values")
    if metric not in METRICS:
        raise ConfigError(f"unknown metric {metric!r}; choose from {', '.join(METRICS)}")

    n = X.shape[0]
    d = np.zeros((n, n))
    if metric == "cosine":
        norms = np.linalg.norm(X, axis=1)
        safe = np.where(norms == 0, 1.0, norms)
        U = X / safe[:, None]
    for i in range(n - 1):
        rest = X[i + 1:]
        if metric == "euclidean":
            row = np.sqrt(((rest - X[i]) ** 2).sum(axis=1))
        elif metric == "manhattan":
            row = np.abs(rest - X[i]).sum(axis=1)
        else:
            row = 1.0 - U[i + 1:] @ U[i]
            row[(norms[i + 1:] == 0) | (norms[i] == 0)] = 1.0
            # rounding can leave ~1e-16 between identical vectors
            row[np.all(rest == X[i], axis=1) & (norms[i] > 0)] = 0.0
            row = np.clip(row, 0.0, 2.0)
        d[i, i + 1:] = row
    d = d + d.T
    return DistanceMatrix(d, metric, tuple(ids) if ids is not None else None)


class Merge(NamedTuple):
    left: int
    right: int
    height: float
    new_id: int
    size: int


@dataclass(frozen=True)
class Dendrogram:
    n: int
    merges: tuple[Merge, ...]

    def inversions(self) -> list[int]:
        """Indices of merges lower than the merge before them."""
        return [i for i in range(1, len(self.merges))
                if self.merges[i].height < self.merges[i - 1].height]

    def cut(self, k: int) -> np.ndarray:
        """Dense labels (first-appearance order) after all but the last k-1 merges."""
        if not 1 <= k <= self.n:
            raise ValueError(f"k must lie in 1..{self.n}, got {k}")
        parent = list(range(2 * self.n - 1))

        def find(x):
            while parent[x] != x:
                parent[x] = parent[parent[x]]
                x = parent[x]
            return x

        for m in self.merges[:self.n - k]:
            parent[find(m.left)] = m.new_id
            parent[find(m.right)] = m.new_id
        roots = [find(i) for i in range(self.n)]
        dense: dict[int, int] = {}
        return np.array([dense.setdefault(r, len(dense)) for r in roots], dtype=int)

    def to_tsv(self) -> str:
        lines = ["merge_index\tleft\tright\theight\tsize"]
        lines += [f"{i}\t{m.left}\t{m.right}\t{m.height!r}\t{m.size}" for i, m in enumerate(self.merges)]
        return "\n".join(lines) + "\n"


def _lance_williams(linkage, d_p, d_q, d_pq, n_p, n_q, n_r):
    if linkage == "single":
        return np.minimum(d_p, d_q)
    if linkage == "complete":
        return np.maximum(d_p, d_q)
    if linkage == "average":
        return (n_p * d_p + n_q * d_q) / (n_p + n_q)
    # ward, on squared euclidean distances
    return ((n_p + n_r) * d_p + (n_q + n_r) * d_q - n_r * d_pq) / (n_p + n_q + n_r)


def linkage_tree(dist: DistanceMatrix, linkage: str) -> Dendrogram:
    """Full merge history (n-1 merges) for the given linkage."""
    if linkage not in LINKAGES:
        raise ConfigError(f"unknown linkage {linkage!r}; choose from {', '.join(LINKAGES)}")
    if linkage == "ward" and dist.metric != "euclidean":
        raise ConfigError(f"ward requires euclidean affinity, got {dist.metric}")
    n = dist.n
    D = np.array(dist.d, dtype=np.float64)
    if D.shape != (n, n) or not np.all(np.isfinite(D)):
        raise DimensionError("distance matrix must be square and finite")
    if linkage == "ward":
        D = D ** 2
    np.fill_diagonal(D, np.inf)

    ids = np.arange(n)
    size = np.ones(n, dtype=np.int64)
    active = np.ones(n, dtype=bool)
    nn = np.full(n, -1)
    nn_dist = np.full(n, np.inf)

    def refresh(i):
        row = D[i]
        m = row.min()
        if m == np.inf:
            nn[i], nn_dist[i] = -1, np.inf
            return
        cands = np.flatnonzero(row == m)
        # for a fixed row, the smallest partner id gives the smallest (min, max) pair
        nn[i] = cands[np.argmin(ids[cands])]
        nn_dist[i] = m

    for i in range(n):
        refresh(i)

    merges = []
    for step in range(n - 1):
        rows = np.flatnonzero(active)
        best = nn_dist[rows].min()
        tied = rows[nn_dist[rows] == best]
        a, b = ids[tied], ids[nn[tied]]
        lo, hi = np.minimum(a, b), np.maximum(a, b)
        p = tied[np.lexsort((hi, lo))[0]]
        q = nn[p]

        others = rows[(rows != p) & (rows != q)]
        new = _lance_williams(linkage, D[p, others], D[q, others], D[p, q],
                              size[p], size[q], size[others])
        height = float(np.sqrt(max(best, 0.0))) if linkage == "ward" else float(best)
        new_id = n + step
        merges.append(Merge(int(min(ids[p], ids[q])), int(max(ids[p], ids[q])), height,
                            new_id, int(size[p] + size[q])))

        active[q] = False
        D[q, :] = np.inf
        D[:, q] = np.inf
        D[p, others] = new
        D[others, p] = new
        ids[p] = new_id
        size[p] += size[q]
        nn[q], nn_dist[q] = -1, np.inf

        refresh(p)
        stale = others[(nn[others] == p) | (nn[others] == q)]
        for r in stale:
            refresh(r)
        fresh = others[(nn[others] != p) & (nn[others] != q)]
        # the new cluster has the largest id, so it only displaces on strict improvement
        closer = fresh[D[fresh, p] < nn_dist[fresh]]
        nn[closer] = p
        nn_dist[closer] = D[closer, p]

    tree = Dendrogram(n, tuple(merges))
    inv = tree.inversions()
    if inv:
        logger.warning("%s linkage produced %d height inversions (first at merge %d)",
                       linkage, len(inv), inv[0])
    return tree


def agglomerate(dist: DistanceMatrix, linkage: str, k: int) -> tuple[Dendrogram, dict]:
    """Cluster into k groups. Returns the full dendrogram and {id: label}.

    Labels are dense integers in order of first appearance. Ids come from
    the distance matrix, or are row positions when it carries none.
    """
    if not 1 <= k <= dist.n:
        raise ValueError(f"k must lie in 1..{dist.n}, got {k}")
    tree = linkage_tree(dist, linkage)
    labels = tree.cut(k)
    ids = dist.ids if dist.ids is not None else range(dist.n)
    return tree, {i: int(label) for i, label in zip(ids, labels)}


def relabel_dense(clustering: Mapping[Hashable, Hashable]) -> dict:
    """Renumber labels 0..k-1 in order of first appearance."""
    dense: dict = {}
    return {i: dense.setdefault(label, len(dense)) for i, label in clustering.items()}
