#!/usr/bin/env python3
"""
Lines, planes and point distances
"""

from dataclasses import dataclass

import numpy as np

from ..exceptions import DegenerateInput, DegenerateLine

_EPS = 1e-12


@dataclass(frozen=True)
class Line3:
    """3D line through two distinct anchor points"""

    p1: np.ndarray
    p2: np.ndarray

    def __post_init__(self):
        p1 = np.asarray(self.p1, dtype=np.float64).reshape(3)
        p2 = np.asarray(self.p2, dtype=np.float64).reshape(3)
        if np.linalg.norm(p2 - p1) <= _EPS:
            raise DegenerateLine(f"coincident anchors {p1.tolist()}")
        object.__setattr__(self, "p1", p1)
        object.__setattr__(self, "p2", p2)

    @classmethod
    def from_point_direction(cls, point, direction) -> "Line3":
        point = np.asarray(point, dtype=np.float64)
        return cls(point, point + np.asarray(direction, dtype=np.float64))

    @property
    def direction(self) -> np.ndarray:
        d = self.p2 - self.p1
        return d / np.linalg.norm(d)

    @property
    def midpoint(self) -> np.ndarray:
        return 0.5 * (self.p1 + self.p2)

    def project(self, points: np.ndarray) -> np.ndarray:
        """Signed position of each point along the line, measured from ``p1``"""
        return (np.asarray(points, dtype=np.float64).reshape(-1, 3) - self.p1) @ self.direction

    def at(self, t) -> np.ndarray:
        return self.p1 + np.multiply.outer(np.asarray(t, dtype=np.float64), self.direction)

    def transformed(self, rotation: np.ndarray, offset=None) -> "Line3":
        """Line with anchors mapped by ``p @ rotation.T - offset``"""
        offset = np.zeros(3) if offset is None else np.asarray(offset, dtype=np.float64)
        return Line3(rotation @ self.p1 - offset, rotation @ self.p2 - offset)


@dataclass(frozen=True)
class Plane3:
    """Plane A*x + B*y + C*z + D = 0 with unit normal (A, B, C)"""

    normal: np.ndarray
    d: float

    def __post_init__(self):
        normal = np.asarray(self.normal, dtype=np.float64).reshape(3)
        norm = np.linalg.norm(normal)
        if norm <= _EPS:
            raise DegenerateInput("plane normal has zero length")
        object.__setattr__(self, "normal", normal / norm)
        object.__setattr__(self, "d", float(self.d) / norm)

    @classmethod
    def through_points(cls, a, b, c) -> "Plane3":
        a, b, c = (np.asarray(v, dtype=np.float64) for v in (a, b, c))
        normal = np.cross(b - a, c - a)
        if np.linalg.norm(normal) <= _EPS:
            raise DegenerateInput("collinear points do not define a plane")
        normal = normal / np.linalg.norm(normal)
        return cls(normal, -float(normal @ a))

    @property
    def coefficients(self):
        return (*self.normal.tolist(), self.d)

    def signed_distances(self, points: np.ndarray) -> np.ndarray:
        return np.asarray(points, dtype=np.float64).reshape(-1, 3) @ self.normal + self.d

    def distances(self, points: np.ndarray) -> np.ndarray:
        return np.abs(self.signed_distances(points))

    def flipped(self) -> "Plane3":
        return Plane3(-self.normal, -self.d)


def point_line_distances(points: np.ndarray, line: Line3) -> np.ndarray:
    """Distances ||(p - p1) x (p - p2)|| / ||p2 - p1|| for a batch of points"""
    points = np.asarray(points, dtype=np.float64).reshape(-1, 3)
    cross = np.cross(points - line.p1, points - line.p2)
    return np.linalg.norm(cross, axis=1) / np.linalg.norm(line.p2 - line.p1)


def point_line_distance(p, line: Line3) -> float:
    return float(point_line_distances(np.asarray(p, dtype=np.float64).reshape(1, 3), line)[0])


def point_segment_distances(points: np.ndarray, a, b) -> np.ndarray:
    """Distances from points to the closed segment [a, b]"""
    points = np.asarray(points, dtype=np.float64).reshape(-1, 3)
    a = np.asarray(a, dtype=np.float64)
    b = np.asarray(b, dtype=np.float64)
    ab = b - a
    length2 = float(ab @ ab)
    if length2 <= _EPS:
        return np.linalg.norm(points - a, axis=1)
    t = np.clip((points - a) @ ab / length2, 0.0, 1.0)
    return np.linalg.norm(points - (a + np.outer(t, ab)), axis=1)


def rotation_angle_deg(rotation: np.ndarray) -> float:
    """Angle of a rotation matrix in degrees"""
    cos = (np.trace(rotation) - 1.0) / 2.0
    return float(np.degrees(np.arccos(np.clip(cos, -1.0, 1.0))))


def rotation_about(axis, angle_rad: float) -> np.ndarray:
    """Right-handed rotation matrix about ``axis`` (Rodrigues)"""
    axis = np.asarray(axis, dtype=np.float64)
    axis = axis / np.linalg.norm(axis)
    k = np.array([[0, -axis[2], axis[1]], [axis[2], 0, -axis[0]], [-axis[1], axis[0], 0]])
    return np.eye(3) + np.sin(angle_rad) * k + (1 - np.cos(angle_rad)) * (k @ k)


def is_orthonormal(rotation: np.ndarray, tol: float = 1e-6) -> bool:
    rotation = np.asarray(rotation, dtype=np.float64)
    if rotation.shape != (3, 3):
        return False
    return bool(np.allclose(rotation @ rotation.T, np.eye(3), atol=tol))
