"""
Orchard tree delineation and apple-to-tree assignment for 3D color point clouds.
"""

__version__ = "1.0.0"
