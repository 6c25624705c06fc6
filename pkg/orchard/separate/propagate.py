#!/usr/bin/env python3
"""
Tree ids from labeled skeleton voxels to cloud points
"""

from dataclasses import dataclass, field

import numpy as np

from ..core.cloud import ColorPointCloud
from ..core.spatial import NearestIndex
from ..exceptions import EmptyTrees, ShapeError
from ..segment.labels import NO_TREE


@dataclass(frozen=True)
class TreeLabeledCloud:
    """Calibrated winter cloud with semantic labels and tree ids (0 = no tree)"""

    cloud: ColorPointCloud
    labels: np.ndarray = field(repr=False)
    tree_ids: np.ndarray = field(repr=False)

    def __post_init__(self):
        if not len(self.cloud) == len(self.labels) == len(self.tree_ids):
            raise ShapeError("cloud, labels and tree ids must have the same length")

    @property
    def labeled_mask(self) -> np.ndarray:
        return self.tree_ids != NO_TREE

    def tree_point_counts(self) -> dict:
        ids, counts = np.unique(self.tree_ids[self.labeled_mask], return_counts=True)
        return {int(i): int(c) for i, c in zip(ids, counts)}


def propagate_labels(
    points: np.ndarray,
    voxel_centers: np.ndarray,
    voxel_tree_ids: np.ndarray,
) -> np.ndarray:
    """Tree id of the nearest labeled skeleton voxel for every point (lowest voxel row on ties)"""
    if len(voxel_centers) == 0:
        raise EmptyTrees("no labeled skeleton voxels")
    idx, _ = NearestIndex(voxel_centers).query(points)
    return np.asarray(voxel_tree_ids, dtype=np.int64)[idx]


def scatter_tree_ids(n_points: int, kept: np.ndarray, kept_ids: np.ndarray) -> np.ndarray:
    """Full-length tree id array from ids of the kept subset; others get NO_TREE"""
    tree_ids = np.full(n_points, NO_TREE, dtype=np.int64)
    tree_ids[kept] = kept_ids
    return tree_ids
