#!/usr/bin/env python3
"""
Support-pole test for trunk candidates.

A pole is a hollow cylinder of known radius: almost every point of the
candidate cylinder lies in a thin shell around a stack of per-slice circle
centers.
"""

import logging
from dataclasses import dataclass, field
from typing import Optional

import numpy as np
from scipy.stats import median_abs_deviation

from ..models.config import PipelineConfig

logger = logging.getLogger(__name__)

_CENTER_ITERATIONS = 20


@dataclass(frozen=True)
class PoleDecision:
    y: float
    is_pole: bool
    ratio: float
    shell: np.ndarray = field(repr=False)


def cylinder_mask(points: np.ndarray, y: float, radius: float) -> np.ndarray:
    """Points within ``radius`` of the vertical axis through (0, y)"""
    return np.hypot(points[:, 0], points[:, 1] - y) < radius


def fixed_radius_center(xy: np.ndarray, radius: float, start: Optional[np.ndarray] = None) -> np.ndarray:
    """Center of a circle of known radius through 2D points.

    Fixed point of c = mean(p - radius * unit(p - c)), started at the centroid.
    """
    center = xy.mean(axis=0) if start is None else np.asarray(start, dtype=np.float64)
    for _ in range(_CENTER_ITERATIONS):
        rel = xy - center
        norm = np.linalg.norm(rel, axis=1)
        norm[norm == 0] = 1.0
        updated = (xy - radius * rel / norm[:, None]).mean(axis=0)
        if np.linalg.norm(updated - center) < 1e-6:
            return updated
        center = updated
    return center


def slice_centers(points: np.ndarray, radius: float, slice_height: float):
    """Circle center per horizontal slice; returns (slice mid-heights, centers)"""
    z0 = points[:, 2].min()
    slices = np.floor((points[:, 2] - z0) / slice_height).astype(np.int64)
    heights, centers = [], []
    for s in np.unique(slices):
        members = points[slices == s]
        if len(members) < 3:
            continue
        heights.append(z0 + (s + 0.5) * slice_height)
        centers.append(fixed_radius_center(members[:, :2], radius))
    return np.asarray(heights), np.asarray(centers).reshape(-1, 2)


def shell_band(radial: np.ndarray, config: PipelineConfig) -> float:
    """Shell half-width widened by twice the robust spread of the radial distances.

    The spread estimate is capped at ``pole_noise_cap``.
    """
    spread = median_abs_deviation(radial, scale="normal") if len(radial) > 1 else 0.0
    return config.pole_shell_tolerance + 2.0 * min(float(spread), config.pole_noise_cap)


def surrounded(z: np.ndarray, offset: np.ndarray, config: PipelineConfig) -> np.ndarray:
    """Per point: the points of its slice lie all around the fitted axis.

    A slice qualifies when the mean resultant length of its unit offsets stays
    at or below ``pole_max_resultant``. A circle fitted beside a thin solid stem
    sees the stem from one side only and fails this test.
    """
    slices = np.floor((z - z.min()) / config.pole_slice).astype(np.int64)
    norm = np.linalg.norm(offset, axis=1)
    norm[norm == 0] = 1.0
    unit = offset / norm[:, None]
    counts = np.bincount(slices)
    sx = np.bincount(slices, weights=unit[:, 0], minlength=len(counts))
    sy = np.bincount(slices, weights=unit[:, 1], minlength=len(counts))
    resultant = np.hypot(sx, sy) / np.maximum(counts, 1)
    return resultant[slices] <= config.pole_max_resultant


def detect_support_pole(
    points: np.ndarray, y: float, config: Optional[PipelineConfig] = None
) -> PoleDecision:
    """Decide whether the candidate at row position ``y`` is a support pole.

    ``points`` are trellis-frame coordinates; the returned shell holds indices
    into ``points`` and is empty unless the candidate is a pole.
    """
    config = config or PipelineConfig()
    inside = np.flatnonzero(cylinder_mask(points, y, config.trunk_cylinder_radius))
    empty = np.zeros(0, dtype=np.int64)
    if len(inside) < config.pole_min_points:
        logger.debug(f"Candidate y={y:.3f}: {len(inside)} points, too few for a pole test")
        return PoleDecision(y, False, 0.0, empty)

    cyl = points[inside]
    heights, centers = slice_centers(cyl, config.pole_radius, config.pole_slice)
    if len(heights) == 0:
        return PoleDecision(y, False, 0.0, empty)
    offset = cyl[:, :2] - np.column_stack(
        [np.interp(cyl[:, 2], heights, centers[:, 0]), np.interp(cyl[:, 2], heights, centers[:, 1])]
    )
    radial = np.linalg.norm(offset, axis=1)

    band = shell_band(radial, config)
    bottom = cyl[:, 2].min()
    in_shell = (
        (np.abs(radial - config.pole_radius) <= band)
        & (cyl[:, 2] - bottom <= config.pole_height)
        & surrounded(cyl[:, 2], offset, config)
    )
    ratio = float(in_shell.sum() / len(cyl))
    is_pole = ratio > config.pole_ratio
    logger.debug(f"Candidate y={y:.3f}: shell ratio {ratio:.3f} (band {100 * band:.2f} cm), pole={is_pole}")
    return PoleDecision(y, is_pole, ratio, inside[in_shell] if is_pole else empty)
