"""Exact fixed-radius neighbor search.

Two interchangeable backends: a brute-force scan and a vantage-point tree.
Both compute distances with :func:`row_distances`, so for the points the
tree does not prune the float comparison against ``eps`` is the very same
one the scan makes. Pruning uses the triangle inequality with a small
outward slack, which can only widen the search.
"""

from __future__ import annotations

import numpy as np

AUTO_TREE_THRESHOLD = 2000
DEFAULT_LEAF_SIZE = 16
_PRUNE_SLACK = 1e-9

_LEAF = -1


def row_distances(points: np.ndarray, q: np.ndarray) -> np.ndarray:
    """Euclidean distance from ``q`` to every row of ``points``."""
    diff = points - q
    return np.sqrt(np.einsum("ij,ij->i", diff, diff))


def _as_points(points) -> np.ndarray:
    x = np.asarray(points, dtype=np.float64)
    if x.ndim == 1 and x.size == 0:
        x = x.reshape(0, 0)
    if x.ndim != 2:
        raise ValueError(f"points must be a 2-D array, got shape {x.shape}")
    if not np.all(np.isfinite(x)):
        raise ValueError("points contain non-finite values")
    return np.ascontiguousarray(x)


class BruteForceIndex:
    def __init__(self, points):
        self.points = _as_points(points)

    def __len__(self) -> int:
        return self.points.shape[0]

    @property
    def dim(self) -> int:
        return self.points.shape[1]

    def _check_query(self, q, eps):
        q = np.asarray(q, dtype=np.float64)
        if len(self) and q.shape != (self.dim,):
            raise ValueError(f"query has shape {q.shape}, index dimension is {self.dim}")
        if not eps > 0:
            raise ValueError(f"eps must be > 0, got {eps}")
        return q

    def query_radius(self, q, eps: float) -> np.ndarray:
        """Sorted indices of all points within distance ``eps`` of ``q`` (inclusive)."""
        q = self._check_query(q, eps)
        if not len(self):
            return np.empty(0, dtype=np.intp)
        return np.flatnonzero(row_distances(self.points, q) <= eps)


class VPTree(BruteForceIndex):
    """Vantage-point tree over a fixed point set.

    Each internal node holds one vantage point and the median distance
    ``mu`` of its remaining points; points at distance ``<= mu`` go to the
    inside child, the rest outside. Leaves hold up to ``leaf_size`` points
    scanned directly. The build is deterministic in the input order.
    """

    def __init__(self, points, leaf_size: int = DEFAULT_LEAF_SIZE):
        super().__init__(points)
        if leaf_size < 1:
            raise ValueError("leaf_size must be >= 1")
        self.leaf_size = leaf_size
        # flat node arrays; leaves have vantage == _LEAF and own perm[start:end]
        self._vantage: list[int] = []
        self._mu: list[float] = []
        self._inside: list[int] = []
        self._outside: list[int] = []
        self._start: list[int] = []
        self._end: list[int] = []
        self._perm: list[int] = []
        if len(self):
            self._build(np.arange(len(self)))
        self.perm = np.asarray(self._perm, dtype=np.intp)

    def _new_node(self) -> int:
        for arr, fill in (
            (self._vantage, _LEAF), (self._mu, 0.0), (self._inside, -1),
            (self._outside, -1), (self._start, 0), (self._end, 0),
        ):
            arr.append(fill)
        return len(self._vantage) - 1

    def _build(self, idx: np.ndarray) -> int:
        node = self._new_node()
        if len(idx) <= self.leaf_size:
            self._start[node] = len(self._perm)
            self._perm.extend(int(i) for i in idx)
            self._end[node] = len(self._perm)
            return node
        # vantage point: the member farthest from the first member
        d0 = row_distances(self.points[idx], self.points[idx[0]])
        vp_pos = int(np.argmax(d0))
        vp = int(idx[vp_pos])
        rest = np.delete(idx, vp_pos)
        d = row_distances(self.points[rest], self.points[vp])
        mu = float(np.median(d))
        inner = rest[d <= mu]
        outer = rest[d > mu]
        self._vantage[node] = vp
        self._mu[node] = mu
        self._inside[node] = self._build(inner) if len(inner) else -1
        self._outside[node] = self._build(outer) if len(outer) else -1
        return node

    def structure(self) -> tuple:
        """Flat description of the tree, for determinism checks."""
        return (
            tuple(self._vantage), tuple(self._mu), tuple(self._inside),
            tuple(self._outside), tuple(self._start), tuple(self._end), tuple(self._perm),
        )

    def query_radius(self, q, eps: float) -> np.ndarray:
        q = self._check_query(q, eps)
        if not len(self):
            return np.empty(0, dtype=np.intp)
        hits = []
        stack = [0]
        while stack:
            node = stack.pop()
            vp = self._vantage[node]
            if vp == _LEAF:
                members = self.perm[self._start[node]:self._end[node]]
                d = row_distances(self.points[members], q)
                hits.append(members[d <= eps])
                continue
            d = float(row_distances(self.points[vp:vp + 1], q)[0])
            if d <= eps:
                hits.append(np.array([vp], dtype=np.intp))
            mu = self._mu[node]
            slack = _PRUNE_SLACK * (1.0 + d + eps + mu)
            if self._inside[node] >= 0 and d - eps <= mu + slack:
                stack.append(self._inside[node])
            if self._outside[node] >= 0 and d + eps >= mu - slack:
                stack.append(self._outside[node])
        if not hits:
            return np.empty(0, dtype=np.intp)
        return np.sort(np.concatenate(hits))


def build_index(points, backend: str = "auto", leaf_size: int = DEFAULT_LEAF_SIZE):
    """Pick a neighbor index: ``"brute"``, ``"tree"``, or ``"auto"`` (tree from 2000 points)."""
    if backend == "auto":
        backend = "tree" if len(points) >= AUTO_TREE_THRESHOLD else "brute"
    if backend == "brute":
        return BruteForceIndex(points)
    if backend == "tree":
        return VPTree(points, leaf_size=leaf_size)
    raise ValueError(f"unknown index backend {backend!r}")
