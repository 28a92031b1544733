"""Nearest neighbours restricted to coordinate subsets."""

from __future__ import annotations

import numpy as np
from scipy.spatial import cKDTree

from .distributions import as_subset


def squared_distances(points_v, query_v):
    """Squared Euclidean distances, the single formula shared with the brute-force path."""
    diff = points_v - query_v
    return np.einsum("...j,...j->...", diff, diff)


def _order(d2, idx, self_index):
    # distance first, then the query point itself, then lowest index
    return np.lexsort((idx, idx != self_index, d2))


class SubspaceKNN:
    """Exact k-nearest-neighbour search among stored points, projected on ``v``.

    ``query(l, k)`` returns ``k`` distinct indices; the first one is ``l``
    itself and ties are broken by the lowest index.
    """

    def __init__(self, points, v):
        points = np.asarray(points, dtype=float)
        if points.ndim != 2:
            raise ValueError("points must be an (N, d) array")
        self.v = as_subset(v, points.shape[1])
        self.points_v = np.ascontiguousarray(points[:, list(self.v)])
        self.n = points.shape[0]
        self.tree = cKDTree(self.points_v)

    def _exact_row(self, l, k, cand):
        d2 = squared_distances(self.points_v[cand], self.points_v[l])
        order = _order(d2, cand, l)
        return cand[order[:k]], d2[order]

    def query(self, rows, k: int, slack: int = 4):
        """Indices of the ``k`` nearest stored points to each stored point in ``rows``."""
        rows = np.atleast_1d(np.asarray(rows, dtype=np.intp))
        if not 1 <= k <= self.n:
            raise ValueError(f"k must lie in [1, {self.n}]")
        m = min(self.n, k + slack)
        _, cand = self.tree.query(self.points_v[rows], k=m)
        cand = np.asarray(cand).reshape(len(rows), m)
        d2 = squared_distances(self.points_v[cand], self.points_v[rows][:, None, :])
        order = np.lexsort((cand, cand != rows[:, None], d2), axis=-1)
        cand = np.take_along_axis(cand, order, axis=-1)
        d2 = np.take_along_axis(d2, order, axis=-1)
        out = cand[:, :k].copy()
        if m == self.n:
            return out
        kth = d2[:, k - 1]
        # boundary may be shared with points the tree did not return
        unsure = ~(d2[:, -1] > kth * (1 + 1e-9) + 1e-300)
        for r in np.nonzero(unsure)[0]:
            l = rows[r]
            radius = np.sqrt(kth[r]) * (1 + 1e-6) + 1e-150
            ball = np.asarray(self.tree.query_ball_point(self.points_v[l], radius), dtype=np.intp)
            out[r] = self._exact_row(l, k, ball)[0]
        return out


def brute_force_neighbours(points, v, rows, k):
    """Reference implementation: full sort of all distances."""
    points_v = np.asarray(points, dtype=float)[:, list(v)]
    idx = np.arange(points_v.shape[0])
    out = []
    for l in np.atleast_1d(rows):
        d2 = squared_distances(points_v, points_v[l])
        out.append(idx[_order(d2, idx, l)[:k]])
    return np.array(out, dtype=np.intp)


class NeighbourCache:
    """One ``SubspaceKNN`` per subset of a fixed point cloud, built on demand."""

    def __init__(self, points):
        self.points = np.asarray(points, dtype=float)
        self._trees = {}

    def __getitem__(self, v) -> SubspaceKNN:
        v = as_subset(v, self.points.shape[1])
        if v not in self._trees:
            self._trees[v] = SubspaceKNN(self.points, v)
        return self._trees[v]

    def query(self, v, rows, k):
        return self[v].query(rows, k)
