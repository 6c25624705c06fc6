#!/usr/bin/env python3
"""
MSAC (truncated-quadratic RANSAC) plane and line estimation.
"""

import logging
from typing import List, Optional, Sequence, Tuple, Union

import numpy as np

from ..exceptions import DegenerateInput
from .geometry import Line3, Plane3

logger = logging.getLogger(__name__)

MAX_ITERATIONS = 10_000
CONFIDENCE = 0.999
_BATCH_CELLS = 2_000_000
_EPS = 1e-12

SeedLike = Union[None, int, Sequence[int]]


def msac_score(residuals: np.ndarray, inlier_tol: float) -> np.ndarray:
    """Sum of min(r^2, tol^2) along the last axis"""
    return np.minimum(residuals**2, inlier_tol**2).sum(axis=-1)


def _required_iterations(inlier_ratio: float, sample_size: int, confidence: float) -> int:
    if inlier_ratio <= 0:
        return MAX_ITERATIONS
    good = inlier_ratio**sample_size
    if good >= 1.0:
        return 1
    return int(np.ceil(np.log(1 - confidence) / np.log(1 - good)))


def _batched_msac(points, sample_size, hypothesize, residuals_of, inlier_tol, rng, max_iterations, confidence):
    """Run MSAC; returns (best model, best score, iterations run)"""
    n = len(points)
    batch = int(max(1, min(64, _BATCH_CELLS // max(n, 1))))
    best_model, best_score = None, np.inf
    budget = max_iterations
    done = 0
    while done < min(budget, max_iterations):
        size = min(batch, min(budget, max_iterations) - done)
        samples = np.stack([rng.choice(n, size=sample_size, replace=False) for _ in range(size)])
        done += size
        models = [hypothesize(points[s]) for s in samples]
        valid = [m for m in models if m is not None]
        if not valid:
            continue
        scores = [float(msac_score(residuals_of(points, m), inlier_tol)) for m in valid]
        k = int(np.argmin(scores))
        if scores[k] < best_score:
            best_model, best_score = valid[k], scores[k]
            inliers = int((residuals_of(points, best_model) <= inlier_tol).sum())
            budget = _required_iterations(inliers / n, sample_size, confidence)
    return best_model, best_score, done


def _plane_hypothesis(sample: np.ndarray) -> Optional[Plane3]:
    normal = np.cross(sample[1] - sample[0], sample[2] - sample[0])
    if np.linalg.norm(normal) <= _EPS:
        return None
    return Plane3(normal, -float(normal @ sample[0]))


def _plane_residuals(points, plane: Plane3) -> np.ndarray:
    return plane.distances(points)


def _least_squares_plane(points: np.ndarray) -> Optional[Plane3]:
    if len(points) < 3:
        return None
    centroid = points.mean(axis=0)
    _, s, vt = np.linalg.svd(points - centroid, full_matrices=False)
    if s[1] <= _EPS:
        return None
    normal = vt[-1]
    return Plane3(normal, -float(normal @ centroid))


def _check_not_collinear(points: np.ndarray) -> None:
    centered = points - points.mean(axis=0)
    s = np.linalg.svd(centered, compute_uv=False)
    scale = max(float(s[0]), 1.0)
    if len(s) < 2 or s[1] <= 1e-9 * scale:
        raise DegenerateInput("points are collinear")


def fit_plane_msac(
    points: np.ndarray,
    inlier_tol: float,
    seed: SeedLike = 0,
    max_iterations: int = MAX_ITERATIONS,
    confidence: float = CONFIDENCE,
    refine: bool = True,
) -> Tuple[Plane3, np.ndarray]:
    """Robust plane fit; returns the plane and the indices of points within ``inlier_tol``"""
    points = np.asarray(points, dtype=np.float64).reshape(-1, 3)
    if len(points) < 3:
        raise DegenerateInput(f"plane fit needs 3 points, got {len(points)}")
    _check_not_collinear(points)

    rng = np.random.default_rng(seed)
    plane, score, iterations = _batched_msac(
        points, 3, _plane_hypothesis, _plane_residuals, inlier_tol, rng, max_iterations, confidence
    )
    if plane is None:
        raise DegenerateInput("no non-degenerate plane sample found")

    if refine:
        inliers = np.flatnonzero(plane.distances(points) <= inlier_tol)
        refit = _least_squares_plane(points[inliers])
        if refit is not None and float(msac_score(refit.distances(points), inlier_tol)) <= score:
            plane = refit

    inliers = np.flatnonzero(plane.distances(points) <= inlier_tol)
    logger.debug(f"Plane MSAC: {iterations} iterations, {len(inliers)}/{len(points)} inliers")
    return plane, inliers


def _line_hypothesis(sample: np.ndarray) -> Optional[Tuple[np.ndarray, np.ndarray]]:
    d = sample[1] - sample[0]
    norm = np.linalg.norm(d)
    if norm <= _EPS:
        return None
    return sample[0], d / norm


def _line_residuals(points, model) -> np.ndarray:
    origin, direction = model
    rel = points - origin
    return np.linalg.norm(rel - np.outer(rel @ direction, direction), axis=1)


def _principal_line(points: np.ndarray):
    if len(points) < 2:
        return None
    centroid = points.mean(axis=0)
    _, s, vt = np.linalg.svd(points - centroid, full_matrices=False)
    if s[0] <= _EPS:
        return None
    return centroid, vt[0]


def _anchored(model, points: np.ndarray, inliers: np.ndarray) -> Line3:
    origin, direction = model
    t = (points[inliers] - origin) @ direction if len(inliers) else np.zeros(0)
    if len(t) >= 2 and t.max() - t.min() > _EPS:
        return Line3(origin + t.min() * direction, origin + t.max() * direction)
    return Line3(origin, origin + direction)


def _fit_one_line(points, inlier_tol, rng, max_iterations, confidence, refine):
    model, score, iterations = _batched_msac(
        points, 2, _line_hypothesis, _line_residuals, inlier_tol, rng, max_iterations, confidence
    )
    if model is None:
        raise DegenerateInput("all points coincide")
    if refine:
        inliers = np.flatnonzero(_line_residuals(points, model) <= inlier_tol)
        refit = _principal_line(points[inliers])
        if refit is not None and float(msac_score(_line_residuals(points, refit), inlier_tol)) <= score:
            model = refit
    inliers = np.flatnonzero(_line_residuals(points, model) <= inlier_tol)
    logger.debug(f"Line MSAC: {iterations} iterations, {len(inliers)}/{len(points)} inliers")
    return _anchored(model, points, inliers), inliers


def fit_line_msac(
    points: np.ndarray,
    inlier_tol: float,
    seed: SeedLike = 0,
    count: int = 1,
    max_iterations: int = MAX_ITERATIONS,
    confidence: float = CONFIDENCE,
    refine: bool = True,
) -> List[Tuple[Line3, np.ndarray]]:
    """Sequential MSAC line fits.

    The second line (``count=2``) is fitted to the points left over by the first
    fit's inliers. Inlier indices always refer to ``points``.
    """
    if count not in (1, 2):
        raise ValueError("count must be 1 or 2")
    points = np.asarray(points, dtype=np.float64).reshape(-1, 3)
    if len(points) < 2 * count:
        raise DegenerateInput(f"{count} line(s) need {2 * count} points, got {len(points)}")

    rng = np.random.default_rng(seed)
    remaining = np.arange(len(points))
    results = []
    for _ in range(count):
        if len(remaining) < 2:
            raise DegenerateInput(f"only {len(remaining)} points left for another line")
        line, local = _fit_one_line(points[remaining], inlier_tol, rng, max_iterations, confidence, refine)
        results.append((line, remaining[local]))
        remaining = np.delete(remaining, local)
    return results
