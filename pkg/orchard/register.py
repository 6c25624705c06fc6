#!/usr/bin/env python3
"""
Winter-to-harvest rigid alignment and apple-to-tree assignment
"""

import logging
from dataclasses import dataclass, field
from typing import List, Optional, Sequence

import numpy as np
from scipy.spatial import cKDTree

from .apples import DetectedApple
from .core.spatial import NearestIndex
from .exceptions import AlignmentFailed, EmptyTrees
from .models.config import PipelineConfig
from .models.reports import TransformDocument
from .separate.propagate import TreeLabeledCloud

logger = logging.getLogger(__name__)

# iterations per coarse radius before it is halved regardless
_COARSE_STEPS = 10


@dataclass(frozen=True)
class RigidTransform:
    """p' = p @ rotation + translation"""

    rotation: np.ndarray
    translation: np.ndarray
    rms: float = 0.0
    iterations: int = 0

    @classmethod
    def identity(cls) -> "RigidTransform":
        return cls(np.eye(3), np.zeros(3))

    def apply(self, points: np.ndarray) -> np.ndarray:
        return np.asarray(points, dtype=np.float64).reshape(-1, 3) @ self.rotation + self.translation

    def inverse(self) -> "RigidTransform":
        rotation = self.rotation.T
        return RigidTransform(rotation, -self.translation @ rotation, self.rms, self.iterations)

    def compose(self, other: "RigidTransform") -> "RigidTransform":
        """Transform applying ``self`` first, then ``other``"""
        return RigidTransform(
            self.rotation @ other.rotation, self.translation @ other.rotation + other.translation
        )

    def to_document(self) -> TransformDocument:
        return TransformDocument(
            R=self.rotation.tolist(), T=self.translation.tolist(), rms=self.rms, iterations=self.iterations
        )


def kabsch(source: np.ndarray, target: np.ndarray):
    """Rotation R and translation T minimizing sum ||source @ R + T - target||^2"""
    src_mean = source.mean(axis=0)
    tgt_mean = target.mean(axis=0)
    h = (source - src_mean).T @ (target - tgt_mean)
    u, _, vt = np.linalg.svd(h)
    d = np.sign(np.linalg.det(u @ vt))
    rotation = u @ np.diag([1.0, 1.0, d]) @ vt
    return rotation, tgt_mean - src_mean @ rotation


def voxel_subsample(points: np.ndarray, edge: float) -> np.ndarray:
    """First point of every occupied voxel, in input order"""
    keys = np.floor((points - points.min(axis=0)) / edge).astype(np.int64)
    _, first = np.unique(keys, axis=0, return_index=True)
    return points[np.sort(first)]


def icp_align(
    winter: np.ndarray, harvest: np.ndarray, config: Optional[PipelineConfig] = None
) -> RigidTransform:
    """Point-to-point ICP from the identity.

    A coarse phase starts with ``icp_coarse_radius`` as the rejection radius and
    halves it whenever the RMS settles (or after a few iterations) until it
    reaches ``icp_radius``, where the RMS change decides convergence.
    """
    config = config or PipelineConfig()
    source = voxel_subsample(np.asarray(winter, dtype=np.float64), config.icp_sample_voxel)
    target = np.asarray(harvest, dtype=np.float64)
    tree = cKDTree(target)

    radius = max(config.icp_coarse_radius, config.icp_radius)
    dist, _ = tree.query(source, k=1, distance_upper_bound=radius)
    start = int((dist < radius).sum())
    if start < config.icp_min_correspondences:
        raise AlignmentFailed(f"{start} correspondences within {radius} m, need {config.icp_min_correspondences}")

    rotation, translation = np.eye(3), np.zeros(3)
    previous = np.inf
    at_radius = 0
    iteration = 0
    for iteration in range(1, config.icp_max_iterations + 1):
        moved = source @ rotation + translation
        dist, idx = tree.query(moved, k=1, distance_upper_bound=radius)
        valid = dist < radius
        if valid.sum() < 3:
            raise AlignmentFailed(f"correspondences vanished at iteration {iteration}")
        rotation, translation = kabsch(source[valid], target[idx[valid]])
        rms = float(np.sqrt(np.mean(dist[valid] ** 2)))
        change = abs(previous - rms)
        previous = rms
        at_radius += 1
        if radius <= config.icp_radius:
            if change < config.icp_tolerance:
                break
        elif change < 0.01 * rms or at_radius >= _COARSE_STEPS:
            radius = max(config.icp_radius, radius / 2)
            previous, at_radius = np.inf, 0

    dist, _ = tree.query(source @ rotation + translation, k=1, distance_upper_bound=config.icp_radius)
    valid = dist < config.icp_radius
    rms = float(np.sqrt(np.mean(dist[valid] ** 2))) if valid.any() else float("inf")
    logger.info(f"ICP: {iteration} iterations, rms {rms * 1000:.2f} mm over {int(valid.sum())} points")
    return RigidTransform(rotation, translation, rms, iteration)


@dataclass(frozen=True)
class AppleAssignment:
    """Tree id of every apple and the winter point it was inherited from"""

    tree_ids: np.ndarray
    point_indices: np.ndarray = field(repr=False)
    distances: np.ndarray = field(repr=False)

    def __len__(self) -> int:
        return len(self.tree_ids)

    def per_tree(self) -> dict:
        ids, counts = np.unique(self.tree_ids, return_counts=True)
        return {int(i): int(c) for i, c in zip(ids, counts)}


def assign_apples(
    apples: Sequence[DetectedApple], winter: TreeLabeledCloud, transform: RigidTransform
) -> AppleAssignment:
    """Tree id of the nearest tree-labeled winter point after alignment"""
    labeled = np.flatnonzero(winter.labeled_mask)
    if len(labeled) == 0:
        raise EmptyTrees("no winter point carries a tree id")
    if len(apples) == 0:
        empty = np.zeros(0, dtype=np.int64)
        return AppleAssignment(empty, empty, np.zeros(0))

    index = NearestIndex(transform.apply(winter.cloud.points[labeled]))
    locations = np.array([a.location for a in apples])
    nearest, dist = index.query(locations)
    points = labeled[nearest]
    return AppleAssignment(winter.tree_ids[points].astype(np.int64), points, dist)


def apple_locations(apples: List[DetectedApple]) -> np.ndarray:
    if not apples:
        return np.zeros((0, 3))
    return np.array([a.location for a in apples])
