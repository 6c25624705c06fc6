"""
Semantic segmentation of the calibrated winter cloud.

Order of work: horizontal wire lines, trellis plane and frame, trellis-line
heights, trunk candidates, trunk verification with the pole test, trunk labels,
wire labels, and finally removal of wires and poles.
"""

import logging
from dataclasses import dataclass, field
from typing import Dict, List, Optional, Tuple

import numpy as np

from ..core.cloud import ColorPointCloud
from ..core.geometry import Line3
from ..exceptions import EmptyTrees
from ..models.config import PipelineConfig
from .labels import (
    NON_TREE_LABELS,
    SemanticLabel,
    Tree,
    TreeSet,
    label_counts,
    new_labeling,
)
from .poles import PoleDecision, detect_support_pole
from .trellis import (
    HoughResult,
    TrellisFrame,
    debug_images,
    detect_horizontal_lines,
    estimate_trellis_frame,
    merge_trellis_lines,
)
from .trunks import label_trunk_points, locate_trunk_candidates, verify_trunks
from .wires import label_wire_points

logger = logging.getLogger(__name__)


def strip_to_trees(cloud: ColorPointCloud, labels: np.ndarray) -> Tuple[ColorPointCloud, np.ndarray]:
    """Cloud without wire and pole points, plus the kept indices into ``cloud``"""
    if len(labels) != len(cloud):
        raise ValueError("labels must cover the cloud")
    kept = np.flatnonzero(~np.isin(labels, [int(v) for v in NON_TREE_LABELS]))
    if len(kept) == 0:
        raise EmptyTrees("every point is a wire, pipe or pole point")
    return cloud.subset(kept), kept


@dataclass
class SegmentationResult:
    """Everything the winter segmentation produces; points in trellis-frame order"""

    frame: TrellisFrame
    frame_cloud: ColorPointCloud
    lines: List[Line3]
    candidates: np.ndarray
    trees: TreeSet
    poles: List[PoleDecision]
    labels: np.ndarray
    tree_cloud: ColorPointCloud
    tree_indices: np.ndarray
    debug: Dict[str, np.ndarray] = field(default_factory=dict, repr=False)

    @property
    def counts(self) -> Dict[str, int]:
        return label_counts(self.labels)


def segment_winter(cloud: ColorPointCloud, config: Optional[PipelineConfig] = None) -> SegmentationResult:
    """Label every point of the calibrated winter cloud and find its trees"""
    config = config or PipelineConfig()
    hough = detect_horizontal_lines(cloud, config)
    frame, frame_cloud = estimate_trellis_frame(cloud, hough.lines, config)
    heights = merge_trellis_lines(hough.lines, frame, config.wire_merge_distance)
    if len(heights) != config.expected_trellis_levels:
        logger.warning(f"Found {len(heights)} trellis lines, expected {config.expected_trellis_levels}")
    frame = frame.with_heights(heights)

    points = frame_cloud.points
    candidates, _ = locate_trunk_candidates(points, config)
    verification = verify_trunks(points, candidates, config)

    labels = new_labeling(len(points))
    for pole in verification.poles:
        labels[pole.shell] = int(SemanticLabel.SUPPORT_POLE)
    trunk = label_trunk_points(points, verification.trees, config.trunk_label_distance)
    labels[trunk] = int(SemanticLabel.TREE_TRUNK)
    wire = label_wire_points(points, heights, verification.trees, labels, config)
    labels[wire & (labels == SemanticLabel.BRANCH)] = int(SemanticLabel.TRELLIS_WIRE)

    tree_cloud, tree_indices = strip_to_trees(frame_cloud, labels)
    logger.info(f"Segmentation: {label_counts(labels)}")
    return SegmentationResult(
        frame=frame,
        frame_cloud=frame_cloud,
        lines=list(hough.lines),
        candidates=candidates,
        trees=verification.trees,
        poles=verification.poles,
        labels=labels,
        tree_cloud=tree_cloud,
        tree_indices=tree_indices,
        debug=debug_images(hough) if config.emit_debug else {},
    )


__all__ = [
    "SemanticLabel",
    "Tree",
    "TreeSet",
    "TrellisFrame",
    "HoughResult",
    "PoleDecision",
    "SegmentationResult",
    "segment_winter",
    "strip_to_trees",
    "detect_horizontal_lines",
    "estimate_trellis_frame",
    "merge_trellis_lines",
    "locate_trunk_candidates",
    "verify_trunks",
    "detect_support_pole",
    "label_trunk_points",
    "label_wire_points",
]
