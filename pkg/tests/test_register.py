#!/usr/bin/env python3
"""
Tests for rigid alignment and apple-to-tree assignment
"""

import numpy as np
import pytest

from orchard.apples import DetectedApple, HueRange
from orchard.core.cloud import ColorPointCloud
from orchard.core.geometry import rotation_about, rotation_angle_deg
from orchard.exceptions import AlignmentFailed, EmptyTrees
from orchard.register import RigidTransform, assign_apples, icp_align, kabsch, voxel_subsample
from orchard.separate.propagate import TreeLabeledCloud


def clustered_cloud(rng, n_balls=40, per_ball=300, radius=0.05):
    """Asymmetric cloud of small spheres inside a unit cube around the origin"""
    centers = rng.uniform(-0.5, 0.5, (n_balls, 3))
    directions = rng.normal(size=(n_balls * per_ball, 3))
    directions /= np.linalg.norm(directions, axis=1, keepdims=True)
    return np.repeat(centers, per_ball, axis=0) + radius * directions


def random_transform(rng, max_deg=3.0, max_shift=0.05):
    """Rotation about a random axis by at most ``max_deg`` and a shift of length at most ``max_shift``"""
    rotation = rotation_about(rng.normal(size=3), np.radians(rng.uniform(-max_deg, max_deg)))
    direction = rng.normal(size=3)
    return RigidTransform(rotation, rng.uniform(0, max_shift) * direction / np.linalg.norm(direction))


def apple(location):
    return DetectedApple(np.asarray(location, dtype=np.float64), HueRange.RED, 10)


@pytest.fixture
def two_trees():
    """Two vertical tree trunks at y = 0 and y = 1 with unlabeled points between them"""
    z = np.linspace(0, 2, 50)
    points = np.vstack(
        [
            np.column_stack([np.zeros(50), np.zeros(50), z]),
            np.column_stack([np.zeros(50), np.full(50, 0.5), z]),
            np.column_stack([np.zeros(50), np.ones(50), z]),
        ]
    )
    tree_ids = np.repeat([1, 0, 2], 50)
    cloud = ColorPointCloud(points, None)
    return TreeLabeledCloud(cloud, np.zeros(150, dtype=np.int64), tree_ids)


class TestRigidTransform:
    """Test transform algebra and the closed-form fit"""

    def test_kabsch_recovers_transform(self, rng):
        """Test exact correspondences give the generating transform"""
        truth = random_transform(rng, max_deg=40, max_shift=2)
        source = rng.normal(size=(100, 3))
        rotation, translation = kabsch(source, truth.apply(source))
        np.testing.assert_allclose(rotation, truth.rotation, atol=1e-9)
        np.testing.assert_allclose(translation, truth.translation, atol=1e-9)

    def test_inverse_and_compose(self, rng):
        """Test a transform composed with its inverse is the identity"""
        transform = random_transform(rng, max_deg=30, max_shift=1)
        points = rng.normal(size=(10, 3))
        np.testing.assert_allclose(transform.inverse().apply(transform.apply(points)), points, atol=1e-12)
        both = transform.compose(transform.inverse())
        np.testing.assert_allclose(both.rotation, np.eye(3), atol=1e-12)
        np.testing.assert_allclose(both.translation, np.zeros(3), atol=1e-12)

    def test_document(self):
        """Test the serialized transform"""
        document = RigidTransform.identity().to_document()
        assert document.R == np.eye(3).tolist()
        assert document.T == [0.0, 0.0, 0.0]

    def test_voxel_subsample_keeps_first_in_order(self):
        """Test one point per voxel in input order"""
        points = np.array([[0.5, 0.0, 0.0], [0.0, 0.0, 0.0], [0.001, 0.0, 0.0]])
        np.testing.assert_array_equal(voxel_subsample(points, 0.01), points[:2])


class TestIcp:
    """Test ICP on perturbed copies of a cloud"""

    @pytest.mark.slow
    def test_recovers_perturbations(self, rng):
        """Test 48 of 50 perturbations up to 10 degrees and 20 cm are recovered within 0.5 degree and 1 cm"""
        recovered = 0
        for _ in range(50):
            winter = clustered_cloud(rng)
            truth = random_transform(rng, max_deg=10.0, max_shift=0.20)
            harvest = truth.apply(winter) + rng.normal(0, 0.005, winter.shape)
            result = icp_align(winter, harvest)
            angle = rotation_angle_deg(result.rotation.T @ truth.rotation)
            shift = np.linalg.norm(result.translation - truth.translation)
            recovered += angle <= 0.5 and shift <= 0.01
        assert recovered >= 48

    def test_identity_for_identical_clouds(self, rng):
        """Test aligning a cloud to itself stays at the identity"""
        winter = clustered_cloud(rng, n_balls=10)
        result = icp_align(winter, winter)
        np.testing.assert_allclose(result.rotation, np.eye(3), atol=1e-6)
        np.testing.assert_allclose(result.translation, np.zeros(3), atol=1e-6)
        assert result.rms == pytest.approx(0.0, abs=1e-6)

    def test_too_few_correspondences(self, rng):
        """Test clouds ten meters apart fail to align"""
        winter = clustered_cloud(rng, n_balls=10)
        with pytest.raises(AlignmentFailed):
            icp_align(winter, winter + np.array([10.0, 0.0, 0.0]))


class TestAssignApples:
    """Test nearest-tree assignment"""

    def test_nearest_labeled_point(self, two_trees):
        """Test unlabeled points are skipped when looking for the nearest tree"""
        result = assign_apples([apple([0, 0.45, 1.0]), apple([0, 0.8, 0.3])], two_trees, RigidTransform.identity())
        np.testing.assert_array_equal(result.tree_ids, [1, 2])
        assert result.distances[0] == pytest.approx(0.45, abs=0.03)
        assert result.per_tree() == {1: 1, 2: 1}

    def test_transform_moves_winter_points(self, two_trees):
        """Test the winter cloud is moved into the harvest frame before the lookup"""
        shift = RigidTransform(np.eye(3), np.array([0.0, 1.0, 0.0]))
        result = assign_apples([apple([0, 1.1, 1.0])], two_trees, shift)
        np.testing.assert_array_equal(result.tree_ids, [1])

    def test_no_apples(self, two_trees):
        """Test an empty detection list gives an empty assignment"""
        assert len(assign_apples([], two_trees, RigidTransform.identity())) == 0

    def test_no_trees(self, two_trees):
        """Test a winter cloud without tree ids raises EmptyTrees"""
        unlabeled = TreeLabeledCloud(two_trees.cloud, two_trees.labels, np.zeros(150, dtype=np.int64))
        with pytest.raises(EmptyTrees):
            assign_apples([apple([0, 0, 1])], unlabeled, RigidTransform.identity())
