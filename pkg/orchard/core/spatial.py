#!/usr/bin/env python3
"""
Exact nearest-neighbour queries over a fixed point set
"""

from typing import Tuple

import numpy as np
from scipy.spatial import cKDTree

from ..exceptions import EmptyInput

# neighbours fetched per query before widening the search for ties
_TIE_K = 8


class NearestIndex:
    """Immutable k-d tree over points; ties resolve to the lowest point index"""

    def __init__(self, points: np.ndarray):
        self.points = np.asarray(points, dtype=np.float64).reshape(-1, 3)
        if len(self.points) == 0:
            raise EmptyInput("cannot index an empty point set")
        self._tree = cKDTree(self.points)

    def __len__(self) -> int:
        return len(self.points)

    def query(self, queries: np.ndarray) -> Tuple[np.ndarray, np.ndarray]:
        """(indices, distances) of the nearest indexed point to each query"""
        queries = np.asarray(queries, dtype=np.float64).reshape(-1, 3)
        if len(queries) == 0:
            return np.zeros(0, dtype=np.int64), np.zeros(0)
        n = len(self.points)
        best = np.empty(len(queries), dtype=np.int64)
        first = np.empty(len(queries))
        pending = np.arange(len(queries))
        k = min(n, _TIE_K)
        # widen k for queries whose k nearest are all tied
        while len(pending):
            dist, idx = self._tree.query(queries[pending], k=k)
            dist = np.asarray(dist).reshape(len(pending), k)
            idx = np.asarray(idx).reshape(len(pending), k)
            tied = dist <= dist[:, :1]
            best[pending] = np.where(tied, idx, np.iinfo(np.int64).max).min(axis=1)
            first[pending] = dist[:, 0]
            pending = pending[tied[:, -1]] if k < n else pending[:0]
            k = min(n, 2 * k)
        return best, first

    def nearest(self, query) -> Tuple[int, float]:
        idx, dist = self.query(np.asarray(query, dtype=np.float64).reshape(1, 3))
        return int(idx[0]), float(dist[0])

    def within(self, queries: np.ndarray, radius: float):
        """Indices of indexed points within ``radius`` of each query"""
        queries = np.asarray(queries, dtype=np.float64).reshape(-1, 3)
        return self._tree.query_ball_point(queries, r=radius)

    def any_within(self, queries: np.ndarray, radius: float) -> np.ndarray:
        """Boolean mask: query has an indexed point strictly closer than ``radius``"""
        queries = np.asarray(queries, dtype=np.float64).reshape(-1, 3)
        if len(queries) == 0:
            return np.zeros(0, dtype=bool)
        dist, _ = self._tree.query(queries, k=1, distance_upper_bound=radius)
        return dist < radius


def nearest_point(index: NearestIndex, query) -> Tuple[int, float]:
    """Closest indexed point to ``query`` as (index, distance)"""
    return index.nearest(query)
