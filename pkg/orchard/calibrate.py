#!/usr/bin/env python3
"""
Calibration of raw reconstructed clouds.

Brings a cloud to the calibrated frame: metric scale, Y along the tree row, Z up,
origin at the base of the designated tree, cropped to the region of interest.
"""

import logging
from dataclasses import dataclass
from typing import Optional, Tuple

import numpy as np

from .core.cloud import ColorPointCloud
from .core.geometry import is_orthonormal
from .exceptions import DegenerateMarker, EmptyRoi, MarkerNoiseTooHigh
from .models.config import PipelineConfig
from .models.sidecars import CalibrationSidecar

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class RoiSpec:
    """Region of interest in the calibrated frame"""

    half_extent: float = 3.0
    depth: float = 2.0
    z_min: float = 0.03
    z_max: float = 3.5

    def __post_init__(self):
        if self.half_extent <= 0 or self.depth <= 0 or self.z_max <= self.z_min:
            raise ValueError("ROI extents must be positive")

    @classmethod
    def from_config(cls, config: PipelineConfig) -> "RoiSpec":
        return cls(config.roi_half_extent, config.roi_depth, config.roi_z_min, config.roi_z_max)


@dataclass(frozen=True)
class Calibration:
    """p_cal = scale * p @ rotation - origin"""

    scale: float
    rotation: np.ndarray
    origin: np.ndarray
    marker_offset: Optional[float] = None

    def __post_init__(self):
        if not self.scale > 0:
            raise ValueError("scale must be positive")
        if not is_orthonormal(self.rotation):
            raise ValueError("rotation must be orthonormal")
        object.__setattr__(self, "rotation", np.asarray(self.rotation, dtype=np.float64))
        object.__setattr__(self, "origin", np.asarray(self.origin, dtype=np.float64).reshape(3))

    def transform(self, points: np.ndarray) -> np.ndarray:
        return self.scale * np.asarray(points, dtype=np.float64).reshape(-1, 3) @ self.rotation - self.origin

    def x_range(self, roi: RoiSpec) -> Tuple[float, float]:
        """ROI depth interval; starts at the chart when it was observed"""
        start = -self.marker_offset if self.marker_offset is not None else -roi.depth / 2
        return start, start + roi.depth


def _marker_grid(sidecar: CalibrationSidecar) -> np.ndarray:
    rows, cols = sidecar.grid_shape
    return np.asarray(sidecar.marker_points, dtype=np.float64).reshape(rows, cols, 3)


def _unit(v: np.ndarray) -> np.ndarray:
    return v / np.linalg.norm(v)


def _marker_axes(grid: np.ndarray) -> np.ndarray:
    """Columns X, Y, Z of the calibrated frame expressed in the raw frame"""
    along_row = grid[:, 1:] - grid[:, :-1]
    down = grid[1:] - grid[:-1]
    y_axis = _unit(along_row.reshape(-1, 3).mean(axis=0))
    if down.size:
        z_axis = -down.reshape(-1, 3).mean(axis=0)
    else:
        # single patch row: any vector normal to the row inside the chart is ambiguous
        raise DegenerateMarker("chart needs at least two patch rows")
    z_axis = _unit(z_axis - (z_axis @ y_axis) * y_axis)
    x_axis = np.cross(y_axis, z_axis)
    return np.column_stack([x_axis, y_axis, z_axis])


def _spacing(grid: np.ndarray) -> np.ndarray:
    gaps = [np.linalg.norm(grid[:, 1:] - grid[:, :-1], axis=2).ravel()]
    if grid.shape[0] > 1:
        gaps.append(np.linalg.norm(grid[1:] - grid[:-1], axis=2).ravel())
    return np.concatenate(gaps)


def derive_calibration(
    sidecar: CalibrationSidecar,
    cloud: Optional[ColorPointCloud] = None,
    roi: Optional[RoiSpec] = None,
    noise_limit: float = 0.1,
    ground_percentile: float = 1.0,
) -> Calibration:
    """Scale, rotation and origin from a chart observation or an explicit transform.

    With a chart, the origin lies ``d_R_cc`` behind the chart center along +X and
    ``d_T_cc`` along +Y; its height is the ``ground_percentile`` of calibrated
    heights inside the ROI footprint when ``cloud`` is given.
    """
    if not sidecar.is_marker:
        logger.debug("Using explicit calibration transform")
        return Calibration(float(sidecar.scale), np.asarray(sidecar.rotation), np.asarray(sidecar.origin))

    roi = roi or RoiSpec()
    grid = _marker_grid(sidecar)
    flat = grid.reshape(-1, 3)
    singular = np.linalg.svd(flat - flat.mean(axis=0), compute_uv=False)
    if singular[0] <= 1e-12 or singular[1] <= 1e-6 * singular[0]:
        raise DegenerateMarker("chart patch centers are collinear")

    gaps = _spacing(grid)
    noise = float(gaps.std() / gaps.mean())
    if noise > noise_limit:
        raise MarkerNoiseTooHigh(f"patch spacing stddev/mean {noise:.3f} exceeds {noise_limit}")
    scale = float(sidecar.patch_spacing_m / gaps.mean())

    rotation = _marker_axes(grid)
    center = scale * flat.mean(axis=0) @ rotation
    origin = center + np.array([sidecar.d_R_cc, sidecar.d_T_cc, 0.0])

    if cloud is not None and not cloud.is_empty:
        provisional = Calibration(scale, rotation, origin, marker_offset=sidecar.d_R_cc)
        points = provisional.transform(cloud.points)
        lo, hi = provisional.x_range(roi)
        footprint = (
            (points[:, 0] >= lo)
            & (points[:, 0] <= hi)
            & (np.abs(points[:, 1]) <= roi.half_extent)
        )
        if footprint.any():
            ground = float(np.percentile(points[footprint, 2], ground_percentile))
            origin = origin + np.array([0.0, 0.0, ground])
        else:
            logger.warning("No points under the ROI footprint; origin stays at chart height")

    logger.info(f"Calibration: scale {scale:.4f}, spacing noise {noise:.3f}")
    return Calibration(scale, rotation, origin, marker_offset=float(sidecar.d_R_cc))


def roi_mask(points: np.ndarray, calib: Calibration, roi: RoiSpec) -> np.ndarray:
    """Mask of calibrated points inside the ROI box"""
    lo, hi = calib.x_range(roi)
    return (
        (points[:, 0] >= lo)
        & (points[:, 0] <= hi)
        & (np.abs(points[:, 1]) <= roi.half_extent)
        & (points[:, 2] >= roi.z_min)
        & (points[:, 2] <= roi.z_max)
    )


def calibrate_cloud(
    cloud: ColorPointCloud, calib: Calibration, roi: RoiSpec
) -> Tuple[ColorPointCloud, np.ndarray]:
    """Calibrated, cropped cloud and the boolean mask of kept input points"""
    points = calib.transform(cloud.points)
    keep = roi_mask(points, calib, roi)
    if not keep.any():
        raise EmptyRoi(f"none of {len(cloud)} points fall inside the region of interest")
    logger.info(f"ROI kept {int(keep.sum())}/{len(cloud)} points")
    return ColorPointCloud(points[keep], cloud.colors[keep]), keep


def apply_calibration(cloud: ColorPointCloud, calib: Calibration, roi: RoiSpec) -> ColorPointCloud:
    return calibrate_cloud(cloud, calib, roi)[0]
