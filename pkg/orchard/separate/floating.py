#!/usr/bin/env python3
"""
Tree assignment of floating skeleton components
"""

import logging
from dataclasses import dataclass, field
from functools import cached_property
from typing import List, Optional, Sequence

import numpy as np
from scipy.spatial import cKDTree

from ..core.geometry import Line3, point_line_distances
from ..core.topology import Skeleton
from ..exceptions import DegenerateLine, EmptyTrees
from ..models.config import PipelineConfig

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class AssignedComponent:
    points: np.ndarray = field(repr=False)
    tree_id: int

    @cached_property
    def index(self) -> cKDTree:
        return cKDTree(self.points)


def end_lines(component: Skeleton, k: int = 10) -> List[Line3]:
    """One line per end voxel, fitted to its ``k`` nearest component voxels"""
    centers = component.centers()
    if len(centers) < 2:
        return []
    k = min(k, len(centers))
    tree = cKDTree(centers)
    lines = []
    for row in component.endpoints():
        _, nbrs = tree.query(centers[row], k=k)
        local = centers[np.atleast_1d(nbrs)]
        centroid = local.mean(axis=0)
        _, s, vt = np.linalg.svd(local - centroid, full_matrices=False)
        if s[0] <= 1e-12:
            continue
        try:
            lines.append(Line3.from_point_direction(centers[row], vt[0]))
        except DegenerateLine:
            continue
    return lines


def floating_distances(floating: Sequence[Skeleton], assigned: Sequence[AssignedComponent]) -> np.ndarray:
    """(floating, assigned) matrix of closest voxel distances, one k-d tree query per assigned component"""
    distances = np.full((len(floating), len(assigned)), np.inf)
    if not floating or not assigned:
        return distances
    centers = np.concatenate([component.centers() for component in floating])
    starts = np.cumsum([0] + [len(component) for component in floating[:-1]])
    for j, other in enumerate(assigned):
        dist, _ = other.index.query(centers, k=1)
        distances[:, j] = np.minimum.reduceat(dist, starts)
    return distances


def assign_floating(
    component: Skeleton,
    assigned: Sequence[AssignedComponent],
    config: Optional[PipelineConfig] = None,
    distances: Optional[np.ndarray] = None,
) -> int:
    """Tree id for a floating component.

    The closest assigned component wins outright when the second closest is more
    than ``floating_ratio`` times farther away; otherwise lines fitted at the
    floating component's end voxels are extended and the nearer of the two
    closest components to any of those lines wins. ``distances`` are the
    component's precomputed distances to every assigned component.
    """
    config = config or PipelineConfig()
    if not assigned:
        raise EmptyTrees("no assigned component to attach a floating component to")
    if len(assigned) == 1:
        return assigned[0].tree_id

    if distances is None:
        distances = floating_distances([component], assigned)[0]
    order = np.argsort(distances, kind="stable")
    f1, f2 = assigned[order[0]], assigned[order[1]]
    d1, d2 = distances[order[0]], distances[order[1]]
    if d1 == 0 or d2 / d1 > config.floating_ratio:
        return f1.tree_id

    lines = end_lines(component, config.floating_knn)
    if not lines:
        logger.debug("Floating component has no end lines; closest component wins")
        return f1.tree_id
    e1 = min(point_line_distances(f1.points, line).min() for line in lines)
    e2 = min(point_line_distances(f2.points, line).min() for line in lines)
    logger.debug(f"Floating: d1={d1:.3f} d2={d2:.3f}, line distances {e1:.3f}/{e2:.3f}")
    return f1.tree_id if e1 < e2 else f2.tree_id
