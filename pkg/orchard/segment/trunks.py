#!/usr/bin/env python3
"""
Trunk candidates from the ground histogram, and their verification
"""

import logging
from dataclasses import dataclass, field
from typing import List, Optional, Tuple

import numpy as np
from scipy import ndimage

from ..core.cloud import VoxelGrid, voxelize
from ..core.spatial import NearestIndex
from ..core.topology import bfs_hops, component_labels, path_length, shortest_path_rows, skeletonize
from ..exceptions import NoTrunkCandidates
from ..models.config import PipelineConfig
from .labels import Tree, TreeSet
from .poles import PoleDecision, cylinder_mask, detect_support_pole

logger = logging.getLogger(__name__)

_SMOOTHING_CELLS = 5

# background connectivity restricted to one horizontal slice
_SLICE_STRUCTURE = np.zeros((3, 3, 3), dtype=bool)
_SLICE_STRUCTURE[:, :, 1] = ndimage.generate_binary_structure(2, 1)


@dataclass(frozen=True)
class GroundHistogram:
    counts: np.ndarray = field(repr=False)
    smoothed: np.ndarray = field(repr=False)
    x_min: float
    y_min: float
    cell: float

    def column_of(self, y) -> np.ndarray:
        """Ground-grid column J of a row position"""
        return np.floor((np.asarray(y) - self.y_min) / self.cell).astype(np.int64)

    def position_of(self, column) -> np.ndarray:
        """Row position of the center of column J"""
        return self.y_min + (np.asarray(column) + 0.5) * self.cell


def ground_histogram(points: np.ndarray, cell: float) -> GroundHistogram:
    """Point counts of the (x, y) footprint on a regular ground grid"""
    lo = points[:, :2].min(axis=0)
    idx = np.floor((points[:, :2] - lo) / cell).astype(np.int64)
    shape = tuple(idx.max(axis=0) + 1)
    counts = np.zeros(shape, dtype=np.int64)
    np.add.at(counts, (idx[:, 0], idx[:, 1]), 1)
    smoothed = ndimage.uniform_filter(counts.astype(np.float64), size=_SMOOTHING_CELLS, mode="constant")
    return GroundHistogram(counts, smoothed, float(lo[0]), float(lo[1]), cell)


def locate_trunk_candidates(points: np.ndarray, config: Optional[PipelineConfig] = None):
    """Row positions of trunk-like peaks in the trellis slab, ascending.

    ``points`` are trellis-frame coordinates. Returns (positions, histogram).
    """
    config = config or PipelineConfig()
    slab = points[np.abs(points[:, 0]) < config.slab_half_width]
    if len(slab) == 0:
        raise NoTrunkCandidates("no points inside the trellis slab")

    hist = ground_histogram(slab, config.ground_cell)
    smooth = hist.smoothed
    nonzero = smooth[smooth > 0]
    floor = config.peak_prominence * float(np.median(nonzero))
    window = max(1, int(round(config.nms_window / config.ground_cell)))
    is_peak = (ndimage.maximum_filter(smooth, size=window, mode="constant") == smooth) & (smooth > floor)

    rows, cols = np.nonzero(is_peak)
    order = np.lexsort((cols, rows, -smooth[rows, cols]))
    kept_cols: List[int] = []
    for k in order:
        col = int(cols[k])
        if all(abs(col - c) * config.ground_cell >= config.nms_window for c in kept_cols):
            kept_cols.append(col)
    if not kept_cols:
        raise NoTrunkCandidates(f"no ground-histogram peak above {floor:.1f} points")

    positions = np.sort(hist.position_of(np.array(kept_cols)))
    logger.info(f"Found {len(positions)} trunk candidates")
    return positions, hist


def _closed_grid(grid: VoxelGrid) -> VoxelGrid:
    """Occupancy closed by a 3x3x3 cube and hole-filled in every horizontal slice"""
    volume = np.pad(grid.occupancy, 2)
    volume = ndimage.binary_closing(volume, structure=np.ones((3, 3, 3), dtype=bool))
    volume = ndimage.binary_fill_holes(volume, structure=_SLICE_STRUCTURE)
    volume = volume[2:-2, 2:-2, 2:-2] | grid.occupancy
    return VoxelGrid(grid.origin, grid.voxel_edge, grid.dims, np.argwhere(volume), grid.point_voxels)


def dominant_component(voxels: np.ndarray) -> np.ndarray:
    """Rows of the 26-connected component spanning the most height (most voxels on ties)"""
    labels = component_labels(voxels)
    z = voxels[:, 2]
    top = np.full(labels.max() + 1, np.iinfo(np.int64).min)
    bottom = np.full(labels.max() + 1, np.iinfo(np.int64).max)
    np.maximum.at(top, labels, z)
    np.minimum.at(bottom, labels, z)
    sizes = np.bincount(labels)
    best = np.lexsort((-sizes, -(top - bottom)))[0]
    return np.flatnonzero(labels == best)


def main_axis(points: np.ndarray, voxel_edge: float) -> Tuple[np.ndarray, float]:
    """Shortest skeleton path from the lowest voxel to the highest voxel reachable from it.

    Both ends are taken inside the skeleton component with the largest height
    span, so isolated fragments below the trunk do not shorten the axis.
    Returns the path voxel centers (bottom first) and its Euclidean length.
    """
    grid = _closed_grid(voxelize(points, voxel_edge))
    skeleton = skeletonize(grid)
    z = skeleton.voxels[:, 2]
    rows = dominant_component(skeleton.voxels)
    bottom = int(rows[np.argmin(z[rows])])
    hops, _ = bfs_hops(skeleton, bottom)
    reachable_z = np.where(hops >= 0, z, -1)
    top = int(np.argmax(reachable_z))
    rows = shortest_path_rows(skeleton, bottom, top)
    axis = skeleton.grid.centers(skeleton.voxels[rows])
    return axis, path_length(axis)


@dataclass(frozen=True)
class Verification:
    trees: TreeSet
    poles: List[PoleDecision]
    rejected: List[float]


def verify_trunks(
    points: np.ndarray, candidates, config: Optional[PipelineConfig] = None
) -> Verification:
    """Keep candidates whose main axis is longer than the minimum and that are not poles"""
    config = config or PipelineConfig()
    kept: List[Tuple[float, np.ndarray, float]] = []
    poles: List[PoleDecision] = []
    rejected: List[float] = []

    for y in np.sort(np.asarray(candidates, dtype=np.float64)):
        cyl = points[cylinder_mask(points, y, config.trunk_cylinder_radius)]
        if len(cyl) < 2:
            rejected.append(float(y))
            continue
        axis, length = main_axis(cyl, config.voxel_edge)
        if length <= config.min_trunk_path:
            logger.debug(f"Candidate y={y:.3f}: main axis {length:.2f} m, discarded")
            rejected.append(float(y))
            continue
        decision = detect_support_pole(points, float(y), config)
        if decision.is_pole:
            logger.info(f"Candidate y={y:.3f} is a support pole (shell ratio {decision.ratio:.2f})")
            poles.append(decision)
            continue
        kept.append((float(y), axis, length))

    trees = [
        Tree(id=i + 1, base=np.array([0.0, y, 0.0]), axis=axis, axis_length=length)
        for i, (y, axis, length) in enumerate(kept)
    ]
    logger.info(f"Verified {len(trees)} trees, {len(poles)} poles, {len(rejected)} rejected")
    return Verification(TreeSet(trees), poles, rejected)


def label_trunk_points(points: np.ndarray, trees: TreeSet, distance: float = 0.03) -> np.ndarray:
    """Mask of points closer than ``distance`` to any main-axis point"""
    axis_points, _ = trees.axis_points()
    if len(axis_points) == 0:
        return np.zeros(len(points), dtype=bool)
    return NearestIndex(axis_points).any_within(points, distance)
