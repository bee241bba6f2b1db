"""k-means with k-means++ seeding, Lloyd iteration and best-of-restarts.

Conventions:

* Nearest-center ties go to the lowest center index.
* An empty cluster is repaired by moving into it the point that lies
  farthest from its current center (taken from a cluster with at least two
  members), which keeps ``k`` fixed and lowers the objective.
* Restart ``r`` draws from sub-stream ``r`` of the supplied seed, so the
  best-of-restarts result does not depend on execution order.
"""

from __future__ import annotations

from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

import numpy as np

from marketdef.dataset import ProductFeatureMatrix
from marketdef.errors import DimensionError, DomainError, InfeasibleError
from marketdef.rng import RngSeed, as_seed

SEEDINGS = ("kmeanspp", "uniform_rows")


def as_points(data) -> np.ndarray:
    if isinstance(data, ProductFeatureMatrix):
        x = np.asarray(data.values, dtype=float)
    else:
        x = np.asarray(data, dtype=float)
    if x.ndim == 1:
        x = x[:, None]
    if x.ndim != 2:
        raise DimensionError("data must be a 2-D matrix")
    return x


def euclid_sq(a, b) -> float:
    a = np.asarray(a, dtype=float)
    b = np.asarray(b, dtype=float)
    if a.shape != b.shape or a.ndim != 1:
        raise DimensionError(f"vector shapes differ: {a.shape} vs {b.shape}")
    diff = a - b
    return float(diff @ diff)


def sq_distances(x: np.ndarray, centers: np.ndarray) -> np.ndarray:
    """``(n, k)`` matrix of squared Euclidean distances."""
    diff = x[:, None, :] - centers[None, :, :]
    return np.einsum("nkd,nkd->nk", diff, diff)


def nearest_sq_distance(x, centers) -> np.ndarray:
    """D(x)^2: squared distance from each row to its closest center."""
    x = as_points(x)
    centers = np.atleast_2d(np.asarray(centers, dtype=float))
    return sq_distances(x, centers).min(axis=1)


def seeding_probabilities(x, centers) -> np.ndarray:
    """Probability of each row becoming the next k-means++ center."""
    d2 = nearest_sq_distance(x, centers)
    total = d2.sum()
    if total <= 0:
        raise InfeasibleError("all points coincide with the chosen centers")
    return d2 / total


def seeding_cumulative(x, centers) -> np.ndarray:
    """Running sums of :func:`seeding_probabilities` (the roulette wheel).

    Accumulates D(x)^2 before dividing, so integer-valued distances give
    correctly rounded fractions.
    """
    d2 = nearest_sq_distance(x, centers)
    total = d2.sum()
    if total <= 0:
        raise InfeasibleError("all points coincide with the chosen centers")
    return np.cumsum(d2) / total


def _roulette(weights: np.ndarray, u: float) -> int:
    cum = np.cumsum(weights)
    idx = int(np.searchsorted(cum, u * cum[-1], side="right"))
    idx = min(idx, len(weights) - 1)
    while weights[idx] <= 0:
        idx -= 1
    return idx


def _n_distinct(x: np.ndarray) -> int:
    return len(np.unique(x, axis=0))


def kmeanspp_indices(data, k: int, rng, anchor: int | None = None) -> list[int]:
    """Row indices chosen by k-means++ seeding (first is ``anchor`` if given)."""
    x = as_points(data)
    n = len(x)
    if not 1 <= k <= n:
        raise InfeasibleError(f"cannot choose {k} centers from {n} points")
    gen = as_seed(rng).generator()
    if anchor is None:
        first = int(gen.integers(n))
    else:
        first = int(anchor)
        if not 0 <= first < n:
            raise DomainError(f"anchor index {anchor} out of range")
    chosen = [first]
    d2 = sq_distances(x, x[[first]])[:, 0]
    while len(chosen) < k:
        u = gen.random()
        if d2.sum() > 0:
            nxt = _roulette(d2, u)
        else:
            if _n_distinct(x) < k:
                raise InfeasibleError(f"fewer than {k} distinct rows")
            rest = np.setdiff1d(np.arange(n), chosen)
            nxt = int(rest[min(int(u * len(rest)), len(rest) - 1)])
        chosen.append(nxt)
        d2 = np.minimum(d2, sq_distances(x, x[[nxt]])[:, 0])
        d2[chosen] = 0.0
    return chosen


def kmeanspp_seed(data, k: int, rng, anchor: int | None = None) -> np.ndarray:
    x = as_points(data)
    return x[kmeanspp_indices(x, k, rng, anchor)].copy()


def uniform_row_seed(data, k: int, rng, anchor: int | None = None) -> np.ndarray:
    """k distinct rows drawn uniformly; the anchor, if given, is row 0."""
    x = as_points(data)
    n = len(x)
    if not 1 <= k <= n:
        raise InfeasibleError(f"cannot choose {k} centers from {n} points")
    gen = as_seed(rng).generator()
    if anchor is None:
        idx = gen.choice(n, size=k, replace=False)
    else:
        rest = np.delete(np.arange(n), anchor)
        idx = np.concatenate([[anchor], gen.choice(rest, size=k - 1, replace=False)])
    return x[idx].copy()


@dataclass(frozen=True)
class ClusterAssignment:
    labels: np.ndarray
    centers: np.ndarray
    within_ss: np.ndarray
    tot_within_ss: float
    iterations: int
    k: int
    converged: bool = True
    trace: tuple[float, ...] = ()

    @property
    def sizes(self) -> np.ndarray:
        return np.bincount(self.labels, minlength=self.k)

    def to_dict(self) -> dict:
        return {
            "centers": self.centers.tolist(),
            "converged": self.converged,
            "iterations": self.iterations,
            "k": self.k,
            "labels": self.labels.tolist(),
            "sizes": self.sizes.tolist(),
            "tot_within_ss": self.tot_within_ss,
            "within_ss": self.within_ss.tolist(),
        }


def summarize(x: np.ndarray, labels: np.ndarray, k: int, **kw) -> ClusterAssignment:
    """Build an assignment record with centroid centers for ``labels``."""
    labels = np.asarray(labels, dtype=np.int64)
    centers = np.zeros((k, x.shape[1]))
    wss = np.zeros(k)
    for j in range(k):
        members = x[labels == j]
        if len(members):
            centers[j] = members.mean(axis=0)
            wss[j] = ((members - centers[j]) ** 2).sum()
    for a in (labels, centers, wss):
        a.setflags(write=False)
    return ClusterAssignment(labels, centers, wss, float(wss.sum()), k=k, **kw)


def _repair_empty(x, labels, dist_own, k):
    counts = np.bincount(labels, minlength=k)
    for j in np.flatnonzero(counts == 0):
        movable = counts[labels] > 1
        cand = np.where(movable, dist_own, -np.inf)
        i = int(np.argmax(cand))
        counts[labels[i]] -= 1
        labels[i] = j
        counts[j] = 1
        dist_own[i] = 0.0
    return labels, dist_own


def _centroids(x, labels, k):
    onehot = labels[:, None] == np.arange(k)[None, :]
    return (onehot.T @ x) / onehot.sum(axis=0)[:, None]


def lloyd(data, init_centers, max_iter: int = 100) -> ClusterAssignment:
    """Alternate nearest-center assignment and centroid update.

    Stops when the assignment no longer changes or after ``max_iter``
    centroid updates.  ``trace`` holds the objective after every
    assignment step and is non-increasing.
    """
    if max_iter < 1:
        raise DomainError("max_iter must be at least 1")
    x = as_points(data)
    centers = np.array(init_centers, dtype=float, ndmin=2)
    if centers.shape[1] != x.shape[1]:
        raise DimensionError(f"centers have {centers.shape[1]} columns, data has {x.shape[1]}")
    k = len(centers)
    if k > len(x):
        raise InfeasibleError(f"k={k} exceeds n={len(x)}")

    def assign(c):
        d = sq_distances(x, c)
        lab = d.argmin(axis=1)
        own = d[np.arange(len(x)), lab]
        return _repair_empty(x, lab, own, k)

    labels, own = assign(centers)
    trace = [float(own.sum())]
    converged = False
    it = 0
    while it < max_iter:
        it += 1
        centers = _centroids(x, labels, k)
        new, own = assign(centers)
        trace.append(float(own.sum()))
        if np.array_equal(new, labels):
            converged = True
            break
        labels = new
    return summarize(x, labels, k, iterations=it, converged=converged, trace=tuple(trace))


def kmeans_once(data, k, rng, anchor=None, seeding="kmeanspp", max_iter=100) -> ClusterAssignment:
    if seeding == "kmeanspp":
        init = kmeanspp_seed(data, k, rng, anchor)
    elif seeding == "uniform_rows":
        init = uniform_row_seed(data, k, rng, anchor)
    else:
        raise DomainError(f"unknown seeding {seeding!r}")
    return lloyd(data, init, max_iter)


def kmeans_restarts(
    data,
    k: int,
    restarts: int = 100,
    rng=0,
    anchor: int | None = None,
    seeding: str = "kmeanspp",
    max_iter: int = 100,
    workers: int | None = None,
) -> ClusterAssignment:
    """Best (lowest total within-SS) of ``restarts`` seeded Lloyd runs.

    Ties go to the lowest restart index.  ``workers > 1`` runs restarts on a
    thread pool; the result is identical either way.
    """
    if restarts < 1:
        raise DomainError("restarts must be at least 1")
    x = as_points(data)
    seed = as_seed(rng)

    def run(r):
        return kmeans_once(x, k, seed.child(r), anchor, seeding, max_iter)

    if workers and workers > 1 and restarts > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            results = list(pool.map(run, range(restarts)))
    else:
        results = [run(r) for r in range(restarts)]
    best = 0
    for r in range(1, restarts):
        if results[r].tot_within_ss < results[best].tot_within_ss:
            best = r
    return results[best]
