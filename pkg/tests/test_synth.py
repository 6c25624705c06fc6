#!/usr/bin/env python3
"""
Tests for the synthetic orchard scene generator
"""

import json

import numpy as np
import pytest

from orchard.exceptions import SpecError
from orchard.io import read_ply
from orchard.io.sidecars import load_calibration, load_gt_apples
from orchard.segment.labels import NO_TREE, SemanticLabel
from orchard.synth import UNLABELED, SceneSpec, generate_scene, write_scene


@pytest.fixture(scope="module")
def tiny_scene():
    """Two trees exported in a raw frame"""
    return generate_scene(SceneSpec(n_trees=2, seed=5, apples_per_tree=4))


class TestGenerateScene:
    """Test scene content and ground truth"""

    def test_same_seed_same_scene(self, tiny_scene):
        """Test generation is deterministic for a seed"""
        again = generate_scene(SceneSpec(n_trees=2, seed=5, apples_per_tree=4))
        np.testing.assert_array_equal(again.winter.cloud.points, tiny_scene.winter.cloud.points)
        np.testing.assert_array_equal(again.harvest.cloud.colors, tiny_scene.harvest.cloud.colors)
        np.testing.assert_array_equal(again.apples, tiny_scene.apples)

    def test_other_seed_other_scene(self, tiny_scene):
        """Test a different seed changes the scene"""
        other = generate_scene(SceneSpec(n_trees=2, seed=6, apples_per_tree=4))
        assert len(other.winter) != len(tiny_scene.winter) or not np.array_equal(
            other.winter.cloud.points, tiny_scene.winter.cloud.points
        )

    def test_tree_ids_follow_classes(self, small_scene):
        """Test tree classes carry tree ids and infrastructure does not"""
        winter = small_scene.winter
        tree_class = np.isin(winter.labels, [SemanticLabel.TREE_TRUNK, SemanticLabel.BRANCH])
        assert (winter.tree_ids[tree_class] >= 1).all()
        infrastructure = np.isin(winter.labels, [SemanticLabel.TRELLIS_WIRE, SemanticLabel.SUPPORT_POLE])
        assert (winter.tree_ids[infrastructure] == NO_TREE).all()
        assert set(np.unique(winter.tree_ids[tree_class])) == {1, 2, 3}
        assert (winter.labels == SemanticLabel.SUPPORT_POLE).any()

    def test_apples_only_in_harvest(self, small_scene):
        """Test the harvest scene adds leaves and fruit to the winter parts"""
        assert len(small_scene.harvest) > len(small_scene.winter)
        assert (small_scene.harvest.labels == UNLABELED).sum() > (small_scene.winter.labels == UNLABELED).sum()

    def test_apple_spacing_and_owners(self, small_scene):
        """Test apple centers are at least ten centimeters apart and belong to real trees"""
        apples = small_scene.apples
        gaps = np.linalg.norm(apples[:, None] - apples[None, :], axis=2)
        assert gaps[~np.eye(len(apples), dtype=bool)].min() >= 0.1
        assert set(small_scene.apple_tree_ids.tolist()) <= {1, 2, 3}

    def test_harvest_source(self, small_scene):
        """Test harvest points map back to the winter point they were generated with"""
        source = small_scene.harvest_source
        shared = source >= 0
        assert shared.sum() == len(small_scene.winter)
        np.testing.assert_array_equal(
            small_scene.harvest.cloud.colors[shared], small_scene.winter.cloud.colors[source[shared]]
        )
        np.testing.assert_array_equal(small_scene.harvest.labels[shared], small_scene.winter.labels)

    def test_raw_frame_inverts(self, tiny_scene):
        """Test the calibration maps the raw export back onto the scene"""
        restored = tiny_scene.winter_calibration.transform(tiny_scene.raw_winter().points)
        np.testing.assert_allclose(restored, tiny_scene.winter.cloud.points, atol=1e-9)
        assert tiny_scene.winter_sidecar.is_marker

    def test_calibrated_frame_has_identity_sidecar(self, small_scene):
        """Test scenes kept in the calibrated frame carry an explicit identity sidecar"""
        assert not small_scene.winter_sidecar.is_marker
        np.testing.assert_array_equal(small_scene.raw_winter().points, small_scene.winter.cloud.points)


class TestSceneSpec:
    """Test spec validation"""

    def test_invalid_field(self):
        """Test field constraints become SpecError"""
        with pytest.raises(SpecError):
            SceneSpec.create(n_trees=0)

    def test_row_too_short(self):
        """Test too many trees for the row extent"""
        with pytest.raises(SpecError, match="do not fit"):
            generate_scene(SceneSpec(n_trees=9))

    def test_wire_order(self):
        """Test wire heights must increase"""
        with pytest.raises(SpecError, match="wire heights"):
            generate_scene(SceneSpec(n_trees=2, wire_heights=[1.0, 0.5]))


class TestWriteScene:
    """Test the on-disk scene layout"""

    def test_files(self, tiny_scene, tmp_path):
        """Test PLYs, sidecars and ground truth load back"""
        paths = write_scene(tiny_scene, tmp_path)
        assert set(paths) == {"winter", "harvest", "winter_calib", "harvest_calib", "gt_apples", "spec"}
        winter = read_ply(paths["winter"])
        assert len(winter.cloud) == len(tiny_scene.winter)
        np.testing.assert_array_equal(winter.scalar("semlabel"), tiny_scene.winter.labels)
        np.testing.assert_array_equal(winter.scalar("treeid"), tiny_scene.winter.tree_ids)
        assert load_calibration(paths["winter_calib"]).is_marker
        points, tree_ids = load_gt_apples(paths["gt_apples"])
        np.testing.assert_allclose(points, tiny_scene.apples)
        np.testing.assert_array_equal(tree_ids, tiny_scene.apple_tree_ids)
        assert json.loads(paths["spec"].read_text())["seed"] == 5
