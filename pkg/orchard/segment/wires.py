#!/usr/bin/env python3
"""
Wire and water-pipe labeling between neighbouring trunks
"""

import logging
from typing import Optional, Sequence

import numpy as np

from ..core.fitting import fit_line_msac
from ..core.geometry import point_segment_distances
from ..core.spatial import NearestIndex
from ..exceptions import DegenerateInput
from ..models.config import PipelineConfig
from .labels import SemanticLabel, TreeSet

logger = logging.getLogger(__name__)


def _edge_points(points: np.ndarray, index: NearestIndex, height: float, tube: float):
    """Points closest to the row-extreme locations (0, y_min, height) and (0, y_max, height).

    The search is bounded to the tube around the trellis line when the tube is
    not empty.
    """
    targets = np.array([[0.0, points[:, 1].min(), height], [0.0, points[:, 1].max(), height]])
    near = np.flatnonzero(np.hypot(points[:, 0], points[:, 2] - height) <= tube)
    if len(near) == 0:
        logger.debug(f"Empty trellis-line tube at z={height:.2f}; searching the whole cloud")
        idx, _ = index.query(targets)
        return points[idx[0]], points[idx[1]]
    idx, _ = NearestIndex(points[near]).query(targets)
    return points[near[idx[0]]], points[near[idx[1]]]


def _stations(points, index: NearestIndex, trees: TreeSet, height: float, config: PipelineConfig):
    """Ordered (anchor point, is_trunk) pairs along one trellis line"""
    left, right = _edge_points(points, index, height, config.line_tube)
    stations = [(left, False)]
    for tree in trees:
        nearest, _ = index.nearest([0.0, tree.y, height])
        stations.append((points[nearest], True))
    stations.append((right, False))
    return stations


def _accept(line, inliers, config: PipelineConfig) -> bool:
    if len(inliers) < config.wire_min_inliers:
        return False
    angle = np.degrees(np.arccos(min(1.0, abs(float(line.direction[1])))))
    return angle <= config.wire_max_angle_deg


def label_wire_points(
    points: np.ndarray,
    heights: Sequence[float],
    trees: TreeSet,
    labels: Optional[np.ndarray] = None,
    config: Optional[PipelineConfig] = None,
) -> np.ndarray:
    """Mask of trellis wire and water pipe points in trellis-frame ``points``.

    Every trellis line is cut into segments between neighbouring trunks (plus the
    scene ends); each segment cylinder gets its own line fit. Points already
    labeled as trunk or pole are never returned.
    """
    config = config or PipelineConfig()
    taken = np.zeros(len(points), dtype=bool)
    if labels is not None:
        taken = np.isin(labels, [int(SemanticLabel.TREE_TRUNK), int(SemanticLabel.SUPPORT_POLE)])
    wire = np.zeros(len(points), dtype=bool)
    if len(points) == 0:
        return wire
    index = NearestIndex(points)

    for q, height in enumerate(sorted(heights)):
        lowest = q == 0
        tol = config.lowest_line_tol if lowest else config.line_tol
        stations = _stations(points, index, trees, height, config)
        for j, ((a, a_trunk), (b, b_trunk)) in enumerate(zip(stations, stations[1:])):
            start = a + np.array([0.0, config.trunk_offset if a_trunk else 0.0, 0.0])
            end = b - np.array([0.0, config.trunk_offset if b_trunk else 0.0, 0.0])
            if end[1] <= start[1]:
                continue
            members = np.flatnonzero(
                (point_segment_distances(points, start, end) <= config.segment_cylinder_radius) & ~taken
            )
            if len(members) < 2:
                logger.debug(f"Level {q} segment {j}: {len(members)} points, skipped")
                continue
            wire |= _fit_segment(points, members, tol, 2 if lowest else 1, [config.seed, q, j], config)

    logger.info(f"Labeled {int(wire.sum())} wire/pipe points on {len(heights)} trellis lines")
    return wire


def _fit_segment(points, members, tol, count, seed, config: PipelineConfig) -> np.ndarray:
    found = np.zeros(len(points), dtype=bool)
    try:
        fits = fit_line_msac(points[members], tol, seed=seed, count=count)
    except DegenerateInput:
        if count == 1:
            return found
        try:
            fits = fit_line_msac(points[members], tol, seed=seed, count=1)
        except DegenerateInput:
            return found
    for line, inliers in fits:
        if _accept(line, inliers, config):
            found[members[inliers]] = True
    return found

