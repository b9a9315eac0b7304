"""Density-based clustering of embeddings, plus epsilon selection helpers."""

from __future__ import annotations

import math
import os
from collections import deque
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Optional, Sequence

import numpy as np

from .embed import Embeddings
from .index import build_index, row_distances

DEFAULT_EPS = 0.9
DEFAULT_MIN_PTS = 25
NOISE = -1


@dataclass(frozen=True)
class ClusterParams:
    eps: float = DEFAULT_EPS
    min_pts: int = DEFAULT_MIN_PTS
    min_cluster_size: Optional[int] = None

    def __post_init__(self):
        if isinstance(self.eps, bool) or not isinstance(self.eps, (int, float)):
            raise TypeError(f"eps must be a number, got {self.eps!r}")
        if not (math.isfinite(self.eps) and self.eps > 0):
            raise ValueError(f"eps must be finite and > 0, got {self.eps}")
        if int(self.min_pts) != self.min_pts or self.min_pts < 1:
            raise ValueError(f"min_pts must be a positive integer, got {self.min_pts}")
        if self.min_cluster_size is None:
            object.__setattr__(self, "min_cluster_size", int(self.min_pts))
        elif int(self.min_cluster_size) != self.min_cluster_size or self.min_cluster_size < 1:
            raise ValueError(f"min_cluster_size must be >= 1, got {self.min_cluster_size}")

    def to_dict(self) -> dict:
        return {"eps": self.eps, "min_pts": self.min_pts, "min_cluster_size": self.min_cluster_size}


@dataclass(frozen=True)
class ClusteringResult:
    """Disjoint clusters of face ids (cluster id = list position) and the noise set."""

    clusters: tuple[tuple[str, ...], ...]
    noise: tuple[str, ...]
    params: Optional[ClusterParams] = field(default=None, compare=False)

    def __post_init__(self):
        seen = set()
        for members in (*self.clusters, self.noise):
            for face_id in members:
                if face_id in seen:
                    raise ValueError(f"face {face_id!r} assigned twice")
                seen.add(face_id)

    @property
    def ids(self) -> list[str]:
        return [f for c in self.clusters for f in c] + list(self.noise)

    def labels(self) -> dict[str, int]:
        out = {f: NOISE for f in self.noise}
        for k, members in enumerate(self.clusters):
            for f in members:
                out[f] = k
        return out

    @classmethod
    def from_labels(cls, ids: Sequence[str], labels, params=None) -> "ClusteringResult":
        """Group ids by integer label; clusters are numbered by first appearance, -1 is noise."""
        groups: dict[int, list[str]] = {}
        noise = []
        for face_id, lab in zip(ids, labels):
            if lab == NOISE:
                noise.append(face_id)
            else:
                groups.setdefault(int(lab), []).append(face_id)
        clusters = tuple(tuple(groups[k]) for k in sorted(groups))
        return cls(clusters, tuple(noise), params)


def _threads() -> int:
    raw = os.environ.get("ATELIER_THREADS")
    if raw:
        try:
            return max(1, int(raw))
        except ValueError:
            pass
    return os.cpu_count() or 1


def region_query(points, i: int, eps: float) -> np.ndarray:
    """Indices of points within ``eps`` of point ``i`` (closed ball, ``i`` included)."""
    x = np.asarray(points, dtype=np.float64)
    if not 0 <= i < len(x):
        raise IndexError(f"point index {i} out of range for {len(x)} points")
    if not eps > 0:
        raise ValueError(f"eps must be > 0, got {eps}")
    return np.flatnonzero(row_distances(x, x[i]) <= eps)


def neighborhoods(points: np.ndarray, eps: float, backend: str = "auto") -> list[np.ndarray]:
    """Region query for every point, optionally spread over ``ATELIER_THREADS`` workers."""
    index = build_index(points, backend)
    n = len(points)
    workers = min(_threads(), max(1, n // 256))
    if workers <= 1:
        return [index.query_radius(points[i], eps) for i in range(n)]
    with ThreadPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(lambda i: index.query_radius(points[i], eps), range(n)))


def dbscan_labels(points, params: ClusterParams, backend: str = "auto") -> np.ndarray:
    """Integer DBSCAN labels (``-1`` for noise), deterministic in input order.

    Clusters are seeded from core points in input order and expanded
    breadth-first through core points; a border point joins the first
    cluster that reaches it. Clusters with fewer than
    ``params.min_cluster_size`` members are dissolved into noise and the
    survivors renumbered consecutively.
    """
    x = np.asarray(points, dtype=np.float64)
    if x.ndim != 2:
        if x.size == 0:
            return np.empty(0, dtype=np.intp)
        raise ValueError(f"points must be 2-D, got shape {x.shape}")
    if not np.all(np.isfinite(x)):
        raise ValueError("points contain non-finite coordinates")
    n = len(x)
    labels = np.full(n, NOISE, dtype=np.intp)
    if n == 0:
        return labels

    neigh = neighborhoods(np.ascontiguousarray(x), params.eps, backend)
    core = np.array([len(nb) >= params.min_pts for nb in neigh])

    cluster = 0
    for seed in range(n):
        if not core[seed] or labels[seed] != NOISE:
            continue
        labels[seed] = cluster
        queue = deque([seed])
        while queue:
            p = queue.popleft()
            for q in neigh[p]:
                if labels[q] != NOISE:
                    continue
                labels[q] = cluster
                if core[q]:
                    queue.append(q)
        cluster += 1

    if params.min_cluster_size > 1 and cluster:
        sizes = np.bincount(labels[labels != NOISE], minlength=cluster)
        keep = sizes >= params.min_cluster_size
        remap = np.full(cluster, NOISE, dtype=np.intp)
        remap[keep] = np.arange(int(keep.sum()))
        labels = np.where(labels == NOISE, NOISE, remap[labels])
    return labels


def dbscan(embeddings: Embeddings, params: ClusterParams, backend: str = "auto") -> ClusteringResult:
    labels = dbscan_labels(embeddings.vectors, params, backend)
    return ClusteringResult.from_labels(embeddings.ids, labels, params)


def core_mask(points, eps: float, min_pts: int) -> np.ndarray:
    x = np.asarray(points, dtype=np.float64)
    return np.array([len(region_query(x, i, eps)) >= min_pts for i in range(len(x))], dtype=bool)


def kdistance_profile(points, k: int) -> np.ndarray:
    """Ascending distances from each point to its k-th nearest other point."""
    x = np.asarray(points, dtype=np.float64)
    n = len(x)
    if k < 1:
        raise ValueError(f"k must be >= 1, got {k}")
    if k >= n:
        raise ValueError(f"k={k} requires more than {k} points, got {n}")
    out = np.empty(n)
    for i in range(n):
        d = row_distances(x, x[i])
        d = np.delete(d, i)
        out[i] = np.partition(d, k - 1)[k - 1]
    return np.sort(out)


def elbow_index(profile) -> int:
    """Position of the sharpest bend in an ascending curve.

    Uses the point farthest below the chord joining the curve's endpoints,
    after scaling both axes to [0, 1]. Flat or two-point curves give the
    last position.
    """
    y = np.asarray(profile, dtype=np.float64)
    n = len(y)
    if n == 0:
        raise ValueError("empty profile")
    span = y[-1] - y[0]
    if n < 3 or span <= 0:
        return n - 1
    t = np.linspace(0.0, 1.0, n)
    yn = (y - y[0]) / span
    gap = t - yn  # chord is yn == t; convex curves sit below it
    return int(np.argmax(gap))


def elbow_eps(points, k: int) -> float:
    """Epsilon at the elbow of the k-distance profile."""
    profile = kdistance_profile(points, k)
    eps = float(profile[elbow_index(profile)])
    if not eps > 0:
        raise ValueError("k-distance elbow is zero; points are duplicated at this k")
    return eps
