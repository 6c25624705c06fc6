#!/usr/bin/env python3
"""
Color-threshold apple detection on the calibrated harvest cloud
"""

import logging
from dataclasses import dataclass
from enum import Enum
from typing import List, Optional, Sequence, Tuple

import numpy as np
from skimage.color import rgb2hsv

from .core.cloud import ColorPointCloud, voxelize
from .core.topology import VoxelLookup, connected_components
from .models.config import PipelineConfig
from .models.reports import DetectionRecord

logger = logging.getLogger(__name__)


class HueRange(str, Enum):
    RED = "red"
    GREEN_YELLOW = "green_yellow"


@dataclass(frozen=True)
class DetectedApple:
    location: np.ndarray
    variety: HueRange
    voxels: int

    def to_record(self) -> DetectionRecord:
        x, y, z = (float(v) for v in self.location)
        return DetectionRecord(x=x, y=y, z=z, range=self.variety.value, voxels=self.voxels)


def colors_to_hsv(colors: np.ndarray) -> np.ndarray:
    """(N, 3) uint8 RGB to (N, 3) HSV in [0, 1]; achromatic colors get hue 0"""
    colors = np.asarray(colors, dtype=np.float64).reshape(-1, 1, 3) / 255.0
    if len(colors) == 0:
        return np.zeros((0, 3))
    return rgb2hsv(colors).reshape(-1, 3)


def rgb_to_hsv(color: Sequence[int]) -> Tuple[float, float, float]:
    h, s, v = colors_to_hsv(np.asarray(color).reshape(1, 3))[0]
    return float(h), float(s), float(v)


def in_hue_ranges(hue: np.ndarray, ranges: Sequence[Tuple[float, float]]) -> np.ndarray:
    """Inclusive membership of hues in any of ``ranges``"""
    mask = np.zeros(len(hue), dtype=bool)
    for lo, hi in ranges:
        mask |= (hue >= lo) & (hue <= hi)
    return mask


def hue_masks(colors: np.ndarray, config: Optional[PipelineConfig] = None) -> Tuple[np.ndarray, np.ndarray]:
    """(red, green/yellow) point masks"""
    config = config or PipelineConfig()
    hsv = colors_to_hsv(colors)
    red = in_hue_ranges(hsv[:, 0], config.red_hue_ranges)
    green = in_hue_ranges(hsv[:, 0], config.green_hue_ranges)
    if config.use_sv_gates:
        gate = (hsv[:, 1] >= config.min_saturation) & (hsv[:, 2] >= config.min_value)
        red &= gate
        green &= gate
    return red, green


def detect_apples(harvest: ColorPointCloud, config: Optional[PipelineConfig] = None) -> List[DetectedApple]:
    """Apple centers: bounding-box centers of 26-connected components of apple-colored voxels"""
    config = config or PipelineConfig()
    red, green = hue_masks(harvest.colors, config)
    candidate = red | green
    if not candidate.any():
        logger.info("No apple-colored points")
        return []

    points = harvest.points[candidate]
    is_red = red[candidate]
    grid = voxelize(points, config.apple_voxel_edge)
    components = connected_components(grid.occupied)
    component_of_voxel = np.empty(grid.n_occupied, dtype=np.int64)
    lookup = VoxelLookup(grid.occupied)
    for c, voxels in enumerate(components):
        component_of_voxel[lookup.find(voxels)] = c
    component_of_point = component_of_voxel[lookup.find(grid.point_voxels)]

    apples: List[DetectedApple] = []
    for c, voxels in enumerate(components):
        if len(voxels) < config.min_apple_voxels:
            continue
        members = component_of_point == c
        member_points = points[members]
        center = 0.5 * (member_points.min(axis=0) + member_points.max(axis=0))
        n_red = int(is_red[members].sum())
        variety = HueRange.RED if 2 * n_red >= int(members.sum()) else HueRange.GREEN_YELLOW
        apples.append(DetectedApple(center, variety, len(voxels)))

    logger.info(f"Detected {len(apples)} apples from {len(components)} colored components")
    return apples
