#!/usr/bin/env python3
"""
Trellis wire lines and the trellis-plane frame
"""

import logging
from dataclasses import dataclass, field
from typing import Dict, List, Optional, Sequence, Tuple

import numpy as np
from skimage.transform import hough_line, hough_line_peaks

from ..core.cloud import ColorPointCloud, voxelize
from ..core.fitting import fit_line_msac, fit_plane_msac
from ..core.geometry import Line3, Plane3, point_line_distances
from ..core.topology import skeletonize
from ..exceptions import DegenerateInput, DegenerateLine, NoTrellisFound
from ..models.config import PipelineConfig

logger = logging.getLogger(__name__)

# skeleton pixels within this image distance of a Hough line feed its 3D fit
_BACKPROJECT_PX = 1.5


@dataclass(frozen=True)
class HoughResult:
    """Detected horizontal lines plus the images they were found in"""

    lines: List[Line3]
    projection: np.ndarray = field(repr=False)
    accumulator: np.ndarray = field(repr=False)


def yz_projection(voxels: np.ndarray, dims) -> np.ndarray:
    """Binary image of voxels projected along X; rows index y, columns index z"""
    image = np.zeros((dims[1], dims[2]), dtype=bool)
    if len(voxels):
        image[voxels[:, 1], voxels[:, 2]] = True
    return image


def detect_horizontal_lines(
    cloud: ColorPointCloud, config: Optional[PipelineConfig] = None
) -> HoughResult:
    """Near-horizontal 3D lines of the thinned cloud, found by a Hough transform of its YZ projection"""
    config = config or PipelineConfig()
    grid = voxelize(cloud, config.voxel_edge)
    skeleton = skeletonize(grid)
    image = yz_projection(skeleton.voxels, grid.dims)

    thetas = np.deg2rad(np.arange(-90.0, 90.0, config.hough_theta_step_deg))
    accumulator, angles, distances = hough_line(image, theta=thetas)
    if accumulator.max() == 0:
        raise NoTrellisFound("empty projection image")

    _, peak_angles, peak_dists = hough_line_peaks(
        accumulator, angles, distances, threshold=config.hough_threshold * accumulator.max()
    )
    # a world-horizontal line is a constant-column line of the image, i.e. theta near 0
    gate = np.deg2rad(config.hough_max_angle_deg)
    keep = np.abs(peak_angles) < gate
    logger.debug(f"Hough: {len(peak_angles)} peaks, {int(keep.sum())} within the angle gate")

    rows, cols = skeleton.voxels[:, 1], skeleton.voxels[:, 2]
    centers = skeleton.centers()
    lines: List[Line3] = []
    for k, (angle, dist) in enumerate(zip(peak_angles[keep], peak_dists[keep])):
        near = np.abs(cols * np.cos(angle) + rows * np.sin(angle) - dist) <= _BACKPROJECT_PX
        support = centers[near]
        if len(support) < 2:
            continue
        try:
            line = fit_line_msac(support, config.line_tube, seed=[config.seed, k], count=1)[0][0]
        except (DegenerateInput, DegenerateLine):
            logger.debug(f"Hough peak {k} has no usable 3D support")
            continue
        lines.append(line)

    if not lines:
        raise NoTrellisFound("no horizontal line passed the Hough gates")
    logger.info(f"Detected {len(lines)} horizontal lines")
    return HoughResult(lines, image, accumulator)


@dataclass(frozen=True)
class TrellisFrame:
    """Rotation to the trellis frame, where the trellis plane is x = 0.

    ``rotation`` rows are the frame axes; p_frame = p @ rotation.T - (x_offset, 0, 0).
    """

    plane: Plane3
    rotation: np.ndarray
    x_offset: float = 0.0
    heights: Tuple[float, ...] = ()

    @property
    def offset(self) -> np.ndarray:
        return np.array([self.x_offset, 0.0, 0.0])

    def to_frame(self, points: np.ndarray) -> np.ndarray:
        return np.asarray(points, dtype=np.float64).reshape(-1, 3) @ self.rotation.T - self.offset

    def from_frame(self, points: np.ndarray) -> np.ndarray:
        return (np.asarray(points, dtype=np.float64).reshape(-1, 3) + self.offset) @ self.rotation

    def line_to_frame(self, line: Line3) -> Line3:
        return line.transformed(self.rotation, self.offset)

    def with_heights(self, heights: Sequence[float]) -> "TrellisFrame":
        return TrellisFrame(self.plane, self.rotation, self.x_offset, tuple(float(h) for h in heights))


def trellis_points_mask(points: np.ndarray, lines: Sequence[Line3], tube: float) -> np.ndarray:
    """Points within ``tube`` of at least one line"""
    mask = np.zeros(len(points), dtype=bool)
    for line in lines:
        mask |= point_line_distances(points, line) <= tube
    return mask


def _frame_axes(lines: Sequence[Line3], plane: Plane3) -> np.ndarray:
    directions = np.array([ln.direction if ln.direction[1] >= 0 else -ln.direction for ln in lines])
    u_y = directions.sum(axis=0)
    normal = plane.normal
    u_y = u_y - (u_y @ normal) * normal
    if np.linalg.norm(u_y) <= 1e-9:
        raise NoTrellisFound("wire lines are perpendicular to the fitted plane")
    u_y = u_y / np.linalg.norm(u_y)
    u_z = np.cross(u_y, normal)
    if u_z[2] < 0:
        normal = -normal
        u_z = -u_z
    u_z = u_z / np.linalg.norm(u_z)
    u_x = np.cross(u_y, u_z)
    return np.vstack([u_x, u_y, u_z])


def estimate_trellis_frame(
    cloud: ColorPointCloud, lines: Sequence[Line3], config: Optional[PipelineConfig] = None
) -> Tuple[TrellisFrame, ColorPointCloud]:
    """Fit the trellis plane to points near the wire lines and rotate the cloud into its frame"""
    config = config or PipelineConfig()
    if not lines:
        raise NoTrellisFound("no lines to fit a trellis plane to")
    near = trellis_points_mask(cloud.points, lines, config.line_tube)
    logger.debug(f"{int(near.sum())} points within {config.line_tube} m of the wire lines")
    try:
        plane, inliers = fit_plane_msac(cloud.points[near], config.plane_tol, seed=config.seed)
    except DegenerateInput as exc:
        raise NoTrellisFound(f"trellis plane fit failed: {exc.detail}") from exc

    rotation = _frame_axes(lines, plane)
    on_plane = -plane.d * plane.normal
    x_offset = float(rotation[0] @ on_plane)
    frame = TrellisFrame(plane, rotation, x_offset)
    logger.info(f"Trellis plane: {len(inliers)} inliers, normal {np.round(plane.normal, 4).tolist()}")
    return frame, cloud.with_points(frame.to_frame(cloud.points))


def group_heights(heights: Sequence[float], merge_distance: float = 0.30) -> List[float]:
    """Single ascending pass: a height joins the current group when within
    ``merge_distance`` of the group mean"""
    groups: List[List[float]] = []
    for h in sorted(float(v) for v in heights):
        if groups and abs(h - np.mean(groups[-1])) <= merge_distance:
            groups[-1].append(h)
        else:
            groups.append([h])
    return [float(np.mean(g)) for g in groups]


def merge_trellis_lines(
    lines: Sequence[Line3], frame: Optional[TrellisFrame] = None, merge_distance: float = 0.30
) -> List[float]:
    """Trellis-line heights from the midpoint heights of the lines in the trellis frame"""
    if frame is not None:
        lines = [frame.line_to_frame(line) for line in lines]
    heights = group_heights([line.midpoint[2] for line in lines], merge_distance)
    logger.info(f"Merged {len(lines)} lines into {len(heights)} trellis lines")
    return heights


def debug_images(result: HoughResult) -> Dict[str, np.ndarray]:
    return {"yz_projection": result.projection, "hough_accumulator": result.accumulator}
