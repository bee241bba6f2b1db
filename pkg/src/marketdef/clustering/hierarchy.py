"""Complete-linkage agglomerative clustering and dendrogram cuts.

This is the first half of the two-step approach: the tree is read for
plausible cluster counts, which then seed the k-means stage.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from marketdef.clustering.kmeans import as_points
from marketdef.errors import DimensionError, DomainError


@dataclass(frozen=True)
class Merge:
    left: int
    right: int
    height: float
    size: int


@dataclass(frozen=True)
class Dendrogram:
    """Merge sequence in the usual linkage-matrix numbering.

    Leaves are ``0..n-1``; the cluster created by merge ``i`` is node
    ``n + i``.
    """

    n: int
    merges: tuple[Merge, ...]

    @property
    def heights(self) -> np.ndarray:
        return np.array([m.height for m in self.merges])

    def linkage_matrix(self) -> np.ndarray:
        return np.array([[m.left, m.right, m.height, m.size] for m in self.merges], dtype=float)

    def _labels_after(self, n_merges: int) -> np.ndarray:
        parent = list(range(self.n + n_merges))

        def find(a):
            while parent[a] != a:
                parent[a] = parent[parent[a]]
                a = parent[a]
            return a

        for i, m in enumerate(self.merges[:n_merges]):
            parent[find(m.left)] = self.n + i
            parent[find(m.right)] = self.n + i
        roots = [find(i) for i in range(self.n)]
        # number clusters by their lowest member
        ids: dict[int, int] = {}
        return np.array([ids.setdefault(r, len(ids)) for r in roots])

    def cut(self, n_clusters: int) -> np.ndarray:
        if not 1 <= n_clusters <= self.n:
            raise DomainError(f"n_clusters must be in [1, {self.n}]")
        return self._labels_after(self.n - n_clusters)

    def cut_height(self, h: float) -> np.ndarray:
        """Partition obtained by undoing every merge above height ``h``."""
        n_merges = int(np.searchsorted(self.heights, h, side="right"))
        return self._labels_after(n_merges)


def hclust_complete(data) -> Dendrogram:
    """Agglomerate on Euclidean distance, cluster distance = farthest pair.

    Ties between equally close pairs go to the pair that comes first in
    row-major order of the current cluster slots.
    """
    x = as_points(data)
    n = len(x)
    if n < 2:
        raise DimensionError("hierarchical clustering needs at least 2 points")
    diff = x[:, None, :] - x[None, :, :]
    dist = np.sqrt(np.einsum("ijd,ijd->ij", diff, diff))
    np.fill_diagonal(dist, np.inf)
    active = np.ones(n, dtype=bool)
    node = list(range(n))
    size = [1] * n
    merges = []
    for step in range(n - 1):
        masked = np.where(active[:, None] & active[None, :], dist, np.inf)
        masked = np.triu(masked, 1) + np.tril(np.full((n, n), np.inf))
        flat = int(np.argmin(masked))
        i, j = divmod(flat, n)
        h = float(dist[i, j])
        a, b = sorted((node[i], node[j]))
        merges.append(Merge(a, b, h, size[i] + size[j]))
        row = np.maximum(dist[i], dist[j])
        dist[i, :] = row
        dist[:, i] = row
        dist[i, i] = np.inf
        active[j] = False
        node[i] = n + step
        size[i] += size[j]
    return Dendrogram(n, tuple(merges))


def candidate_k(d: Dendrogram, max_candidates: int = 3) -> list[int]:
    """Cluster counts from cutting the tree in its widest height gaps.

    The gap between merge ``i`` and merge ``i + 1`` (0-based) corresponds to
    ``n - i - 1`` clusters.  Equal gaps prefer the smaller cluster count.
    """
    if max_candidates < 1:
        raise DomainError("max_candidates must be at least 1")
    h = d.heights
    gaps = np.diff(h)
    options = [(-float(g), d.n - i - 1) for i, g in enumerate(gaps)]
    options.sort()
    return sorted(k for _, k in options[:max_candidates])
