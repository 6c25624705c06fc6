"""
Assignment of every trunk and branch point to an individual tree
"""

import logging
from dataclasses import dataclass, field
from typing import List, Optional, Tuple

import numpy as np

from ..core.cloud import ColorPointCloud, voxelize
from ..core.topology import Skeleton, skeleton_components, skeletonize
from ..exceptions import EmptyTrees
from ..models.config import PipelineConfig
from ..segment import SegmentationResult
from .components import ComponentKind, ComponentStatus, assign_components
from .floating import AssignedComponent, assign_floating, floating_distances
from .propagate import TreeLabeledCloud, propagate_labels, scatter_tree_ids
from .splitting import split_spanning

logger = logging.getLogger(__name__)


@dataclass
class SeparationResult:
    labeled: TreeLabeledCloud
    skeleton: Skeleton = field(repr=False)
    statuses: List[ComponentStatus] = field(default_factory=list)
    pieces: List[Tuple[Skeleton, int]] = field(default_factory=list, repr=False)


def label_skeleton(
    components: List[Skeleton], statuses: List[ComponentStatus], segmentation: SegmentationResult, config
) -> List[Tuple[Skeleton, int]]:
    """(voxel set, tree id) for every component after splitting and floating assignment"""
    pieces: List[Tuple[Skeleton, int]] = []
    floating: List[Skeleton] = []
    for component, status in zip(components, statuses):
        if status.kind == ComponentKind.ASSIGNED:
            pieces.append((component, status.tree))
        elif status.kind == ComponentKind.SPANNING:
            pieces.extend(split_spanning(component, status.trees, segmentation.trees, config))
        else:
            floating.append(component)

    assigned = [AssignedComponent(piece.centers(), tree_id) for piece, tree_id in pieces]
    distances = floating_distances(floating, assigned)
    for component, row in zip(floating, distances):
        pieces.append((component, assign_floating(component, assigned, config, row)))
    return pieces


def separate_trees(
    segmentation: SegmentationResult,
    calibrated: ColorPointCloud,
    config: Optional[PipelineConfig] = None,
) -> SeparationResult:
    """Tree id for every trunk and branch point of the calibrated winter cloud"""
    config = config or PipelineConfig()
    if len(segmentation.trees) == 0:
        raise EmptyTrees("no verified trees to separate")

    tree_points = segmentation.tree_cloud.points
    skeleton = skeletonize(voxelize(tree_points, config.voxel_edge))
    components = skeleton_components(skeleton)
    statuses = assign_components(components, segmentation.trees, config.component_trunk_distance)
    pieces = label_skeleton(components, statuses, segmentation, config)

    centers = np.concatenate([piece.centers() for piece, _ in pieces])
    voxel_ids = np.concatenate([np.full(len(piece), tree_id) for piece, tree_id in pieces])
    kept_ids = propagate_labels(tree_points, centers, voxel_ids)
    tree_ids = scatter_tree_ids(len(calibrated), segmentation.tree_indices, kept_ids)

    labeled = TreeLabeledCloud(calibrated, segmentation.labels, tree_ids)
    logger.info(f"Separated {len(labeled.tree_point_counts())} trees over {len(pieces)} skeleton pieces")
    return SeparationResult(labeled, skeleton, statuses, pieces)


__all__ = [
    "ComponentKind",
    "ComponentStatus",
    "AssignedComponent",
    "TreeLabeledCloud",
    "SeparationResult",
    "assign_components",
    "split_spanning",
    "assign_floating",
    "propagate_labels",
    "separate_trees",
]
