"""Choosing k: within-cluster dispersion, the elbow rule and the gap statistic."""

from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

import numpy as np

from marketdef.clustering.kmeans import as_points, kmeans_restarts
from marketdef.dataset import principal_axes
from marketdef.errors import DomainError, ReferenceDataError
from marketdef.rng import as_seed

REFERENCES = ("uniform_box", "pca_box")


def pairwise_wk(data, labels) -> float:
    """W_K = sum over clusters of D_r / (2 n_r).

    D_r sums squared distances over all ordered pairs inside cluster r.
    Singleton clusters contribute 0.
    """
    x = as_points(data)
    labels = np.asarray(labels)
    total = 0.0
    for j in np.unique(labels):
        members = x[labels == j]
        m = len(members)
        if m == 1:
            continue
        diff = members[:, None, :] - members[None, :, :]
        total += np.einsum("ijd,ijd->", diff, diff) / (2 * m)
    return float(total)


def centroid_ss(data, labels) -> float:
    x = as_points(data)
    labels = np.asarray(labels)
    total = 0.0
    for j in np.unique(labels):
        members = x[labels == j]
        total += ((members - members.mean(axis=0)) ** 2).sum()
    return float(total)


def _wk_curve(x, k_max, restarts, seed, seeding, workers=None):
    out = []
    for k in range(1, k_max + 1):
        a = kmeans_restarts(x, k, restarts, seed.child(k), seeding=seeding, workers=workers)
        out.append(pairwise_wk(x, a.labels))
    return out


def elbow_wk(data, k_max: int, restarts: int = 100, rng=0, seeding: str = "kmeanspp",
             workers: int | None = None) -> list[float]:
    """W_K for k = 1..k_max from the best-of-restarts partition at each k.

    The run at ``k`` uses sub-stream ``k`` of ``rng``.
    """
    x = as_points(data)
    if not 1 <= k_max <= len(x):
        raise DomainError(f"k_max must be in [1, {len(x)}]")
    return _wk_curve(x, k_max, restarts, as_seed(rng), seeding, workers)


def select_k_elbow(wk, threshold: float = 0.2) -> int | None:
    """Smallest k >= 2 after which the relative drop in W falls below ``threshold``.

    ``wk[0]`` is W at k = 1.  Returns None when every successive drop stays
    at or above the threshold.

    >>> select_k_elbow([100, 40, 35, 33, 32], 0.2)
    2
    """
    wk = [float(w) for w in wk]
    if len(wk) < 3:
        raise DomainError("need W for at least k = 1, 2, 3")
    if any(not w > 0 for w in wk):
        raise DomainError("W values must be positive")
    for k in range(2, len(wk)):
        drop = (wk[k - 1] - wk[k]) / wk[k - 1]
        if drop < threshold:
            return k
    return None


GAP_RULES = ("first_se_max", "global_se_max", "tibs2001")


def select_k_gap(gap, se, rule: str = "first_se_max") -> int:
    """Pick k from a gap curve (``gap[0]`` is k = 1).

    ``first_se_max``: find the first local maximum k* (the first k whose
    successor does not increase the gap, else k_max), then return the
    smallest k <= k* with ``gap[k] >= gap[k*] - se[k*]``.

    ``global_se_max``: same, with k* the global maximum.

    ``tibs2001``: smallest k with ``gap[k] >= gap[k+1] - se[k+1]``, else
    k_max.
    """
    gap = np.asarray(gap, dtype=float)
    se = np.asarray(se, dtype=float)
    k_max = len(gap)
    if rule == "tibs2001":
        for k in range(1, k_max):
            if gap[k - 1] >= gap[k] - se[k]:
                return k
        return k_max
    if rule == "first_se_max":
        decr = np.flatnonzero(np.diff(gap) <= 0)
        top = int(decr[0]) if len(decr) else k_max - 1
    elif rule == "global_se_max":
        top = int(np.argmax(gap))
    else:
        raise DomainError(f"unknown gap rule {rule!r}")
    return int(np.flatnonzero(gap[: top + 1] >= gap[top] - se[top])[0]) + 1


def reference_sample(x: np.ndarray, gen: np.random.Generator, reference: str) -> np.ndarray:
    """One null dataset: uniform over the data's bounding box.

    ``pca_box`` takes the box in the principal-axis frame and rotates back.
    Constant coordinates stay fixed at their value.
    """
    if reference == "uniform_box":
        center, axes = 0.0, None
        z = x
    elif reference == "pca_box":
        center, axes, _ = principal_axes(x)
        z = (x - center) @ axes
    else:
        raise DomainError(f"unknown reference {reference!r}")
    lo, hi = z.min(axis=0), z.max(axis=0)
    span = hi - lo
    # rounding noise in a rotated frame is not a real spread
    span[span <= 1e-12 * max(1.0, float(np.abs(z).max()))] = 0.0
    if not np.any(span > 0):
        raise ReferenceDataError("every column is constant; no reference box")
    u = gen.random(z.shape)
    ref = lo + u * span
    if axes is None:
        return ref
    return ref @ axes.T + center


@dataclass(frozen=True)
class KSelectionReport:
    k_range: tuple[int, ...]
    wk: tuple[float, ...]
    log_wk: tuple[float, ...]
    e_log_wk: tuple[float, ...]
    gap: tuple[float, ...]
    se: tuple[float, ...]
    selected_k_elbow: int | None
    selected_k_gap: int
    reference: str = "uniform_box"
    B: int = 0
    rule: str = "first_se_max"

    def to_dict(self) -> dict:
        return {
            "B": self.B,
            "e_log_wk": list(self.e_log_wk),
            "gap": list(self.gap),
            "k_range": list(self.k_range),
            "log_wk": list(self.log_wk),
            "reference": self.reference,
            "rule": self.rule,
            "se": list(self.se),
            "selected_k_elbow": self.selected_k_elbow,
            "selected_k_gap": self.selected_k_gap,
            "wk": list(self.wk),
        }


def gap_statistic(
    data,
    k_max: int,
    B: int = 30,
    restarts: int = 10,
    rng=0,
    reference: str = "uniform_box",
    seeding: str = "kmeanspp",
    elbow_threshold: float = 0.2,
    rule: str = "first_se_max",
    workers: int | None = None,
) -> KSelectionReport:
    """Monte-Carlo gap statistic for k = 1..k_max.

    Stream layout under ``rng``: sub-stream 0 clusters the data (one
    further sub-stream per k); sub-stream ``b + 1`` is reference replicate
    ``b``, whose child 0 generates the points and child ``k`` clusters them.
    """
    x = as_points(data)
    n = len(x)
    if B < 2:
        raise DomainError("B must be at least 2")
    if not 1 <= k_max < n:
        raise DomainError(f"k_max must be in [1, {n - 1}]")
    if rule not in GAP_RULES:
        raise DomainError(f"unknown gap rule {rule!r}")
    if reference not in REFERENCES:
        raise DomainError(f"unknown reference {reference!r}")
    seed = as_seed(rng)

    wk = _wk_curve(x, k_max, restarts, seed.child(0), seeding)
    if any(not w > 0 for w in wk):
        raise DomainError("zero within-cluster dispersion; duplicate rows leave log W undefined")
    log_wk = [math.log(w) for w in wk]

    def replicate(b):
        node = seed.child(b + 1)
        ref = reference_sample(x, node.child(0).generator(), reference)
        return [math.log(w) for w in _wk_curve(ref, k_max, restarts, node, seeding)]

    if workers and workers > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            ref_logs = np.array(list(pool.map(replicate, range(B))))
    else:
        ref_logs = np.array([replicate(b) for b in range(B)])

    e_log = ref_logs.mean(axis=0)
    sd = ref_logs.std(axis=0, ddof=1)
    se = sd * math.sqrt(1 + 1 / B)
    gap = [float(e - l) for e, l in zip(e_log, log_wk)]
    elbow = select_k_elbow(wk, elbow_threshold) if k_max >= 3 else None
    return KSelectionReport(
        k_range=tuple(range(1, k_max + 1)),
        wk=tuple(wk),
        log_wk=tuple(log_wk),
        e_log_wk=tuple(float(v) for v in e_log),
        gap=tuple(gap),
        se=tuple(float(v) for v in se),
        selected_k_elbow=elbow,
        selected_k_gap=select_k_gap(gap, se, rule),
        reference=reference,
        B=B,
        rule=rule,
    )
