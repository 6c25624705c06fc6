#!/usr/bin/env python3
"""
Point samplers for procedural scene parts.

Tube-like parts take a number of points proportional to their lateral surface
area and spread them over the cross-section disk with r * sqrt(u) so that thin
branches voxelize as solid strands.
"""

from typing import Sequence, Tuple

import numpy as np
from skimage.color import hsv2rgb


def point_count(area: float, density: float) -> int:
    return max(1, int(round(area * density)))


def bezier(p0, p1, p2, n: int = 16) -> np.ndarray:
    """Quadratic Bezier polyline with ``n`` vertices"""
    t = np.linspace(0.0, 1.0, n)[:, None]
    p0, p1, p2 = (np.asarray(p, dtype=np.float64) for p in (p0, p1, p2))
    return (1 - t) ** 2 * p0 + 2 * t * (1 - t) * p1 + t**2 * p2


def _normals(direction: np.ndarray) -> Tuple[np.ndarray, np.ndarray]:
    """Two unit vectors orthogonal to each row of ``direction`` and to each other"""
    helper = np.where(np.abs(direction[:, :1]) < 0.9, [[1.0, 0.0, 0.0]], [[0.0, 1.0, 0.0]])
    n1 = np.cross(direction, helper)
    n1 /= np.linalg.norm(n1, axis=1, keepdims=True)
    return n1, np.cross(direction, n1)


def sample_tube(
    rng: np.random.Generator, path: np.ndarray, radii: Sequence[float], density: float
) -> Tuple[np.ndarray, np.ndarray]:
    """Points filling a tube around a polyline, and the arc fraction of each point.

    ``radii`` gives the radius at every path vertex.
    """
    path = np.asarray(path, dtype=np.float64)
    radii = np.asarray(radii, dtype=np.float64)
    seg = path[1:] - path[:-1]
    lengths = np.linalg.norm(seg, axis=1)
    seg_radius = 0.5 * (radii[1:] + radii[:-1])
    areas = 2 * np.pi * seg_radius * lengths
    n = point_count(areas.sum(), density)

    which = rng.choice(len(seg), size=n, p=areas / areas.sum())
    u = rng.random(n)
    direction = seg[which] / lengths[which, None]
    n1, n2 = _normals(direction)
    radius = radii[which] + u * (radii[which + 1] - radii[which])
    r = radius * np.sqrt(rng.random(n))
    theta = rng.uniform(0, 2 * np.pi, n)
    points = (
        path[which]
        + u[:, None] * seg[which]
        + r[:, None] * (np.cos(theta)[:, None] * n1 + np.sin(theta)[:, None] * n2)
    )
    cumulative = np.concatenate([[0.0], np.cumsum(lengths)])
    fraction = (cumulative[which] + u * lengths[which]) / cumulative[-1]
    return points, fraction


def sample_cylinder_shell(
    rng: np.random.Generator, center_xy, radius: float, z0: float, z1: float, density: float
) -> np.ndarray:
    """Points on the side surface of a vertical cylinder"""
    n = point_count(2 * np.pi * radius * (z1 - z0), density)
    theta = rng.uniform(0, 2 * np.pi, n)
    return np.column_stack(
        [
            center_xy[0] + radius * np.cos(theta),
            center_xy[1] + radius * np.sin(theta),
            rng.uniform(z0, z1, n),
        ]
    )


def sample_sphere_surface(rng: np.random.Generator, center, radius: float, density: float) -> np.ndarray:
    n = point_count(4 * np.pi * radius**2, density)
    v = rng.normal(size=(n, 3))
    v /= np.linalg.norm(v, axis=1, keepdims=True)
    return np.asarray(center, dtype=np.float64) + radius * v


def sample_ground(rng: np.random.Generator, x_range, y_range, density: float) -> np.ndarray:
    area = (x_range[1] - x_range[0]) * (y_range[1] - y_range[0])
    n = point_count(area, density) if density > 0 else 0
    return np.column_stack(
        [rng.uniform(*x_range, n), rng.uniform(*y_range, n), np.zeros(n)]
    )


def sample_shell_around(rng: np.random.Generator, anchors: np.ndarray, r_min: float, r_max: float) -> np.ndarray:
    """One point per anchor at a random direction and distance in [r_min, r_max]"""
    v = rng.normal(size=anchors.shape)
    v /= np.linalg.norm(v, axis=1, keepdims=True)
    return anchors + rng.uniform(r_min, r_max, (len(anchors), 1)) * v


def hsv_colors(
    rng: np.random.Generator,
    n: int,
    hue: Tuple[float, float],
    saturation: Tuple[float, float] = (0.5, 0.7),
    value: Tuple[float, float] = (0.4, 0.6),
) -> np.ndarray:
    """(n, 3) uint8 RGB colors drawn uniformly in an HSV box; hues wrap modulo 1"""
    hsv = np.column_stack(
        [
            np.mod(rng.uniform(*hue, n), 1.0),
            rng.uniform(*saturation, n),
            rng.uniform(*value, n),
        ]
    )
    rgb = hsv2rgb(hsv.reshape(-1, 1, 3)).reshape(-1, 3)
    return np.round(255 * rgb).astype(np.uint8)
