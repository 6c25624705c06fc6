#!/usr/bin/env python3
"""
Voxel topology: thinning, 26-connectivity, breadth-first paths.

Every routine here works on sparse (M, 3) integer voxel arrays; dense arrays are
only materialized per connected component, cropped to its bounding box.
"""

import logging
from dataclasses import dataclass
from functools import cached_property
from typing import List, Optional

import numpy as np
from scipy.sparse import coo_matrix, csr_matrix
from scipy.sparse.csgraph import connected_components as _csgraph_components
from scipy.sparse.csgraph import shortest_path as _csgraph_shortest_path
from scipy.spatial import cKDTree
from skimage.morphology import skeletonize as _thin

from ..exceptions import EmptyInput, NotConnected
from .cloud import VoxelGrid

logger = logging.getLogger(__name__)

# 26-neighborhood in lexicographic order; BFS visits neighbors in this order
NEIGHBOR_OFFSETS = np.array(
    [(i, j, k) for i in (-1, 0, 1) for j in (-1, 0, 1) for k in (-1, 0, 1) if (i, j, k) != (0, 0, 0)],
    dtype=np.int64,
)

# squared distances 1, 2 and 3 are 26-adjacent, 4 is not
_ADJACENCY_RADIUS = 1.75


class VoxelLookup:
    """Vectorized voxel -> row index lookup over a fixed voxel array"""

    def __init__(self, voxels: np.ndarray):
        self.voxels = np.asarray(voxels, dtype=np.int64).reshape(-1, 3)
        if len(self.voxels):
            self._lo = self.voxels.min(axis=0) - 1
            self._span = self.voxels.max(axis=0) - self._lo + 2
        else:
            self._lo = np.zeros(3, dtype=np.int64)
            self._span = np.ones(3, dtype=np.int64)
        keys = self._encode(self.voxels)
        self._order = np.argsort(keys, kind="stable")
        self._sorted = keys[self._order]

    def _encode(self, voxels: np.ndarray) -> np.ndarray:
        v = voxels - self._lo
        return (v[..., 0] * self._span[1] + v[..., 1]) * self._span[2] + v[..., 2]

    def find(self, voxels: np.ndarray) -> np.ndarray:
        """Row index of each query voxel, -1 where absent"""
        voxels = np.asarray(voxels, dtype=np.int64)
        shape = voxels.shape[:-1]
        flat = voxels.reshape(-1, 3)
        result = np.full(len(flat), -1, dtype=np.int64)
        if len(self.voxels) == 0 or len(flat) == 0:
            return result.reshape(shape)
        inside = np.all((flat > self._lo) & (flat < self._lo + self._span - 1), axis=1)
        keys = self._encode(flat[inside])
        pos = np.searchsorted(self._sorted, keys)
        pos = np.clip(pos, 0, len(self._sorted) - 1)
        hit = self._sorted[pos] == keys
        found = np.full(len(keys), -1, dtype=np.int64)
        found[hit] = self._order[pos[hit]]
        result[inside] = found
        return result.reshape(shape)

    def contains(self, voxels: np.ndarray) -> np.ndarray:
        return self.find(voxels) >= 0


@dataclass(frozen=True)
class Skeleton:
    """One-voxel-thick voxel set tied to the grid it was thinned from"""

    voxels: np.ndarray
    grid: VoxelGrid

    def __post_init__(self):
        voxels = np.asarray(self.voxels, dtype=np.int64).reshape(-1, 3)
        object.__setattr__(self, "voxels", voxels)

    def __len__(self) -> int:
        return len(self.voxels)

    @cached_property
    def lookup(self) -> VoxelLookup:
        return VoxelLookup(self.voxels)

    @cached_property
    def neighbor_table(self) -> np.ndarray:
        """(M, 26) neighbor row indices in lexicographic offset order, -1 where empty"""
        return self.lookup.find(self.voxels[:, None, :] + NEIGHBOR_OFFSETS[None, :, :])

    @property
    def degrees(self) -> np.ndarray:
        return (self.neighbor_table >= 0).sum(axis=1)

    def centers(self) -> np.ndarray:
        return self.grid.centers(self.voxels)

    def index_of(self, voxel) -> int:
        idx = int(self.lookup.find(np.asarray(voxel, dtype=np.int64).reshape(1, 3))[0])
        if idx < 0:
            raise KeyError(f"voxel {tuple(np.asarray(voxel).tolist())} not in skeleton")
        return idx

    def subset(self, selection) -> "Skeleton":
        return Skeleton(self.voxels[selection], self.grid)

    @cached_property
    def adjacency(self) -> csr_matrix:
        """Symmetric (M, M) 26-adjacency matrix"""
        rows, slots = np.nonzero(self.neighbor_table >= 0)
        cols = self.neighbor_table[rows, slots]
        n = len(self.voxels)
        return csr_matrix((np.ones(len(rows), dtype=np.int8), (rows, cols)), shape=(n, n))

    def endpoints(self) -> np.ndarray:
        """Row indices of voxels with exactly one 26-neighbor"""
        return np.flatnonzero(self.degrees == 1)


def skeletonize(grid: VoxelGrid) -> Skeleton:
    """Topology-preserving 3D thinning of the occupied voxels of ``grid``.

    Each 26-connected component is thinned separately inside its own padded
    bounding box, so removed voxels never depend on neighbouring structures.
    """
    if grid.n_occupied == 0:
        raise EmptyInput("cannot skeletonize an empty grid")

    kept = []
    for component in connected_components(grid.occupied):
        lo = component.min(axis=0) - 1
        shape = tuple(component.max(axis=0) - lo + 2)
        crop = np.zeros(shape, dtype=bool)
        crop[tuple((component - lo).T)] = True
        if len(component) <= 2:
            kept.append(component)
            continue
        thin = _thin(crop, method="lee") > 0
        thin &= crop
        kept.append(np.argwhere(thin) + lo)

    voxels = np.concatenate(kept) if kept else np.zeros((0, 3), dtype=np.int64)
    voxels = voxels[np.lexsort(voxels.T[::-1])]
    logger.debug(f"Thinned {grid.n_occupied} voxels to {len(voxels)}")
    return Skeleton(voxels, grid)


def _component_key(component: np.ndarray):
    # minimum voxel compared as (y, z, x)
    yzx = component[:, [1, 2, 0]]
    first = np.lexsort(yzx.T[::-1])[0]
    return tuple(yzx[first].tolist())


def component_labels(voxels: np.ndarray) -> np.ndarray:
    """Per-voxel component number under 26-connectivity (unordered)"""
    voxels = np.asarray(voxels, dtype=np.int64).reshape(-1, 3)
    n = len(voxels)
    if n == 0:
        return np.zeros(0, dtype=np.int64)
    pairs = cKDTree(voxels).query_pairs(r=_ADJACENCY_RADIUS, output_type="ndarray")
    graph = coo_matrix((np.ones(len(pairs), dtype=np.int8), (pairs[:, 0], pairs[:, 1])), shape=(n, n))
    _, labels = _csgraph_components(graph, directed=False)
    return labels.astype(np.int64)


def connected_components(voxels: np.ndarray) -> List[np.ndarray]:
    """Partition voxels into 26-connected components.

    Components are ordered by their minimum voxel compared as (y, z, x); voxels
    inside a component are in lexicographic (k, l, m) order.
    """
    voxels = np.asarray(voxels, dtype=np.int64).reshape(-1, 3)
    if len(voxels) == 0:
        return []
    labels = component_labels(voxels)
    components = []
    for label in np.unique(labels):
        members = voxels[labels == label]
        components.append(members[np.lexsort(members.T[::-1])])
    components.sort(key=_component_key)
    return components


def skeleton_components(skeleton: Skeleton) -> List[Skeleton]:
    return [Skeleton(c, skeleton.grid) for c in connected_components(skeleton.voxels)]


def bfs_hops(skeleton: Skeleton, start: int, removed: Optional[np.ndarray] = None):
    """Hop distance and BFS parent of every voxel from row ``start`` (-1 if unreached)"""
    n = len(skeleton)
    hops = np.full(n, -1, dtype=np.int64)
    parent = np.full(n, -1, dtype=np.int64)
    graph = skeleton.adjacency
    if removed is not None:
        if removed[start]:
            return hops, parent
        edges = graph.tocoo()
        open_edge = ~removed[edges.row] & ~removed[edges.col]
        graph = csr_matrix(
            (edges.data[open_edge], (edges.row[open_edge], edges.col[open_edge])), shape=graph.shape
        )
    dist, pred = _csgraph_shortest_path(
        graph, method="D", directed=False, unweighted=True, indices=start, return_predecessors=True
    )
    reached = np.isfinite(dist)
    hops[reached] = dist[reached].astype(np.int64)
    parent[pred >= 0] = pred[pred >= 0]
    return hops, parent


def shortest_path_rows(
    skeleton: Skeleton, start: int, end: int, removed: Optional[np.ndarray] = None
) -> np.ndarray:
    """Row indices of a minimum-hop path from ``start`` to ``end``"""
    hops, parent = bfs_hops(skeleton, start, removed)
    if hops[end] < 0:
        raise NotConnected(f"voxel rows {start} and {end} are not connected")
    path = [end]
    while path[-1] != start:
        path.append(int(parent[path[-1]]))
    return np.array(path[::-1], dtype=np.int64)


def shortest_path(skeleton: Skeleton, start, end) -> np.ndarray:
    """Minimum-hop 26-connected voxel path from ``start`` to ``end`` inclusive"""
    rows = shortest_path_rows(skeleton, skeleton.index_of(start), skeleton.index_of(end))
    return skeleton.voxels[rows]


def path_length(points: np.ndarray) -> float:
    """Euclidean arc length of an ordered polyline"""
    points = np.asarray(points, dtype=np.float64).reshape(-1, 3)
    if len(points) < 2:
        return 0.0
    return float(np.linalg.norm(np.diff(points, axis=0), axis=1).sum())
