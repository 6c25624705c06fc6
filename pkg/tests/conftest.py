#!/usr/bin/env python3
"""
Pytest configuration and fixtures for orchard-trees tests
"""

import numpy as np
import pytest

from orchard.calibrate import Calibration, RoiSpec, calibrate_cloud
from orchard.core.cloud import ColorPointCloud, VoxelGrid
from orchard.synth import SceneSpec, generate_scene, write_scene


@pytest.fixture
def rng():
    """Seeded generator for per-test random data"""
    return np.random.default_rng(1234)


@pytest.fixture
def make_cloud():
    """Build a cloud from points with a constant color"""

    def _make(points, color=(120, 80, 40)):
        points = np.asarray(points, dtype=np.float64).reshape(-1, 3)
        return ColorPointCloud(points, np.tile(np.asarray(color, dtype=np.uint8), (len(points), 1)))

    return _make


@pytest.fixture
def voxel_grid():
    """Wrap integer voxels in a unit grid so they can back a Skeleton"""

    def _grid(voxels, edge=1.0):
        voxels = np.asarray(voxels, dtype=np.int64).reshape(-1, 3)
        dims = tuple(int(d) for d in voxels.max(axis=0) + 1)
        return VoxelGrid(np.zeros(3), float(edge), dims, voxels, voxels)

    return _grid


@pytest.fixture(scope="session")
def small_scene():
    """Three trees, a pole and a touching pair, already in the calibrated frame"""
    return generate_scene(SceneSpec(n_trees=3, seed=7, raw_frame=False))


@pytest.fixture(scope="session")
def small_winter(small_scene):
    """ROI-cropped winter cloud of the small scene with its ground-truth labels"""
    identity = Calibration(1.0, np.eye(3), np.zeros(3))
    cloud, keep = calibrate_cloud(small_scene.winter.cloud, identity, RoiSpec())
    return cloud, small_scene.winter.labels[keep], small_scene.winter.tree_ids[keep]


@pytest.fixture(scope="session")
def raw_scene_dir(tmp_path_factory):
    """Four-tree scene written in a raw frame with chart sidecars"""
    directory = tmp_path_factory.mktemp("raw-scene")
    scene = generate_scene(SceneSpec(n_trees=4, seed=3))
    return scene, write_scene(scene, directory)
