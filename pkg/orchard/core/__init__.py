"""
Geometry primitives shared by every pipeline stage
"""

from .cloud import ColorPointCloud, VoxelGrid, voxelize
from .fitting import fit_line_msac, fit_plane_msac
from .geometry import Line3, Plane3, point_line_distance, point_line_distances
from .spatial import NearestIndex, nearest_point
from .topology import Skeleton, connected_components, shortest_path, skeletonize

__all__ = [
    "ColorPointCloud",
    "VoxelGrid",
    "voxelize",
    "Skeleton",
    "skeletonize",
    "connected_components",
    "shortest_path",
    "Line3",
    "Plane3",
    "point_line_distance",
    "point_line_distances",
    "fit_plane_msac",
    "fit_line_msac",
    "NearestIndex",
    "nearest_point",
]
