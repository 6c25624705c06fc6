#!/usr/bin/env python3
"""
Color point clouds and their binary volumetric form.
"""

from dataclasses import dataclass, field
from typing import Optional, Union

import numpy as np

from ..exceptions import EmptyInput, ShapeError


@dataclass(frozen=True)
class ColorPointCloud:
    """Ordered 3D points (meters) with 8-bit RGB colors"""

    points: np.ndarray
    colors: np.ndarray

    def __post_init__(self):
        points = np.asarray(self.points, dtype=np.float64).reshape(-1, 3)
        if self.colors is None:
            colors = np.zeros((len(points), 3), dtype=np.uint8)
        else:
            colors = np.asarray(self.colors).reshape(-1, 3)
        if len(colors) != len(points):
            raise ShapeError(f"{len(points)} points but {len(colors)} colors")
        if not np.all(np.isfinite(points)):
            raise ShapeError("point coordinates must be finite")
        object.__setattr__(self, "points", points)
        object.__setattr__(self, "colors", np.clip(colors, 0, 255).astype(np.uint8))

    def __len__(self) -> int:
        return len(self.points)

    @property
    def is_empty(self) -> bool:
        return len(self.points) == 0

    def subset(self, selection) -> "ColorPointCloud":
        """Points picked by a boolean mask or an index array, order preserved"""
        return ColorPointCloud(self.points[selection], self.colors[selection])

    def with_points(self, points: np.ndarray) -> "ColorPointCloud":
        return ColorPointCloud(points, self.colors)

    def bounds(self):
        if self.is_empty:
            raise EmptyInput("empty point cloud has no bounds")
        return self.points.min(axis=0), self.points.max(axis=0)

    @classmethod
    def concatenate(cls, clouds) -> "ColorPointCloud":
        clouds = list(clouds)
        if not clouds:
            return cls(np.zeros((0, 3)), np.zeros((0, 3), dtype=np.uint8))
        return cls(
            np.concatenate([c.points for c in clouds]),
            np.concatenate([c.colors for c in clouds]),
        )


@dataclass(frozen=True)
class VoxelGrid:
    """Regular grid fitted to a point bounding box.

    ``occupied`` lists the (k, l, m) indices of occupied voxels in lexicographic
    order; ``point_voxels`` holds the voxel index of every source point.
    """

    origin: np.ndarray
    voxel_edge: float
    dims: tuple
    occupied: np.ndarray
    point_voxels: np.ndarray = field(repr=False)

    @property
    def occupancy(self) -> np.ndarray:
        """Dense boolean array of shape ``dims``"""
        dense = np.zeros(self.dims, dtype=bool)
        if len(self.occupied):
            dense[tuple(self.occupied.T)] = True
        return dense

    @property
    def n_occupied(self) -> int:
        return len(self.occupied)

    def centers(self, voxels: Optional[np.ndarray] = None) -> np.ndarray:
        """World coordinates of voxel centers (all occupied voxels by default)"""
        voxels = self.occupied if voxels is None else np.asarray(voxels).reshape(-1, 3)
        return self.origin + (voxels + 0.5) * self.voxel_edge

    def index_of(self, points: np.ndarray) -> np.ndarray:
        """Floored bin indices of arbitrary points (may fall outside ``dims``)"""
        points = np.asarray(points, dtype=np.float64).reshape(-1, 3)
        return np.floor((points - self.origin) / self.voxel_edge).astype(np.int64)

    def points_in(self, voxels: np.ndarray) -> np.ndarray:
        """Indices of source points whose voxel is in ``voxels``"""
        voxels = np.asarray(voxels, dtype=np.int64).reshape(-1, 3)
        if len(voxels) == 0:
            return np.zeros(0, dtype=np.int64)
        keys = _ravel(self.point_voxels, self.dims)
        wanted = _ravel(voxels, self.dims)
        return np.flatnonzero(np.isin(keys, wanted))


def _ravel(voxels: np.ndarray, dims) -> np.ndarray:
    return np.ravel_multi_index(tuple(np.asarray(voxels, dtype=np.int64).T), dims)


def voxelize(cloud: Union[ColorPointCloud, np.ndarray], voxel_edge: float = 0.005) -> VoxelGrid:
    """Binary volumetric form of a cloud.

    dims = floor((max - min) / edge) + 1 per axis; a voxel is occupied iff at
    least one point floors into it. Bins are half-open, the maximum lands in the
    last bin.
    """
    points = cloud.points if isinstance(cloud, ColorPointCloud) else np.asarray(cloud, dtype=np.float64)
    points = points.reshape(-1, 3)
    if len(points) == 0:
        raise EmptyInput("cannot voxelize an empty cloud")
    if not voxel_edge > 0:
        raise ValueError("voxel_edge must be positive")

    lo = points.min(axis=0)
    hi = points.max(axis=0)
    dims = tuple(int(d) for d in np.floor((hi - lo) / voxel_edge).astype(np.int64) + 1)
    idx = np.floor((points - lo) / voxel_edge).astype(np.int64)
    idx = np.clip(idx, 0, np.array(dims) - 1)

    occupied = np.unique(idx, axis=0)
    return VoxelGrid(origin=lo, voxel_edge=float(voxel_edge), dims=dims, occupied=occupied, point_voxels=idx)
