#!/usr/bin/env python3
"""
Tests for trellis, trunk, pole and wire segmentation
"""

from unittest.mock import patch

import numpy as np
import pytest

from orchard.core.cloud import ColorPointCloud
from orchard.core.geometry import Line3, rotation_about
from orchard.evaluate import segmentation_metrics
from orchard.exceptions import NoTrellisFound, NoTrunkCandidates
from orchard.models.config import PipelineConfig
from orchard.segment import segment_winter, strip_to_trees
from orchard.segment.labels import SemanticLabel, Tree, TreeSet, label_counts, new_labeling
from orchard.segment.poles import PoleDecision, detect_support_pole, fixed_radius_center
from orchard.segment.trellis import (
    detect_horizontal_lines,
    estimate_trellis_frame,
    group_heights,
    merge_trellis_lines,
    trellis_points_mask,
)
from orchard.segment.trunks import label_trunk_points, locate_trunk_candidates, main_axis, verify_trunks
from orchard.segment.wires import label_wire_points


def hollow_pole(rng, y, radius=0.045, height=2.3, n=6000, noise=0.001):
    angle = rng.uniform(0, 2 * np.pi, n)
    z = rng.uniform(0, height, n)
    shell = np.column_stack([radius * np.cos(angle), y + radius * np.sin(angle), z])
    return shell + rng.normal(0, noise, shell.shape)


def solid_trunk(rng, y, radius=0.03, height=2.0, n=6000):
    r = radius * np.sqrt(rng.uniform(0, 1, n))
    angle = rng.uniform(0, 2 * np.pi, n)
    return np.column_stack([r * np.cos(angle), y + r * np.sin(angle), rng.uniform(0, height, n)])


def tree(tree_id, y, height=2.0):
    axis = np.column_stack([np.zeros(21), np.full(21, y), np.linspace(0, height, 21)])
    return Tree(tree_id, np.array([0.0, y, 0.0]), axis, height)


def wires(rng, heights=(0.5, 1.0, 1.5, 2.0), yaw_deg=0.0, x_offset=0.0, n=3000):
    """Horizontal wires in a vertical plane turned by ``yaw_deg`` about z"""
    yaw = np.radians(yaw_deg)
    along = np.array([np.sin(yaw), np.cos(yaw), 0.0])
    normal = np.array([np.cos(yaw), -np.sin(yaw), 0.0])
    clouds = []
    for h in heights:
        t = rng.uniform(-1.0, 1.0, n)
        points = np.outer(t, along) + x_offset * normal + np.array([0.0, 0.0, h])
        clouds.append(points + rng.normal(0, 0.001, points.shape))
    return np.vstack(clouds), along, normal


def thin_column(rng, y, height, n=6000):
    return np.column_stack([rng.normal(0, 0.002, n), rng.normal(y, 0.002, n), rng.uniform(0, height, n)])


class TestTrellisLines:
    """Test wire-line grouping"""

    def test_group_heights(self):
        """Test an ascending pass merges heights close to the group mean"""
        assert group_heights([1.2, 0.5, 0.45, 1.0, 1.6]) == pytest.approx([0.475, 1.1, 1.6])

    def test_group_heights_compares_to_mean(self):
        """Test a height is compared to the group mean, not to its last member"""
        assert group_heights([0.0, 0.25, 0.5], 0.3) == pytest.approx([0.125, 0.5])

    def test_points_near_lines(self):
        """Test the tube around wire lines"""
        line = Line3([0, 0, 1.0], [0, 1, 1.0])
        mask = trellis_points_mask(np.array([[0, 5, 1.005], [0, 0, 1.02]]), [line], 0.01)
        np.testing.assert_array_equal(mask, [True, False])


class TestTrellisFrame:
    """Test line detection and the trellis-plane frame"""

    def test_detects_wire_heights(self, rng, make_cloud):
        """Test four wires give four near-horizontal lines at their heights"""
        points, _, _ = wires(rng)
        result = detect_horizontal_lines(make_cloud(points))
        assert all(abs(line.direction[1]) > 0.99 for line in result.lines)
        heights = merge_trellis_lines(result.lines)
        np.testing.assert_allclose(heights, [0.5, 1.0, 1.5, 2.0], atol=0.02)
        assert result.projection.any()

    def test_frame_puts_wires_on_plane(self, rng, make_cloud):
        """Test a turned and shifted wire plane maps to x = 0 with heights unchanged"""
        heights = (0.5, 1.0, 1.5, 2.0)
        points, along, normal = wires(rng, heights, yaw_deg=12.0, x_offset=0.3)
        offset = 0.3 * normal
        lines = [Line3(offset + [0, 0, h], offset + along + [0, 0, h]) for h in heights]
        frame, moved = estimate_trellis_frame(make_cloud(points), lines)
        assert np.abs(moved.points[:, 0]).max() < 0.01
        np.testing.assert_allclose(moved.points[:, 2], points[:, 2], atol=2e-3)
        np.testing.assert_allclose(frame.from_frame(moved.points), points, atol=1e-9)
        assert merge_trellis_lines(lines, frame) == pytest.approx(list(heights), abs=2e-3)

    def test_wires_tilted_in_the_row_plane(self, rng, make_cloud):
        """Test wires tilted by 5 degrees in YZ are still found with their tilt"""
        points, _, _ = wires(rng)
        tilted = points @ rotation_about([1.0, 0.0, 0.0], np.radians(5.0)).T
        result = detect_horizontal_lines(make_cloud(tilted))
        assert len(result.lines) >= 4
        for line in result.lines:
            slope = np.degrees(np.arctan2(abs(line.direction[2]), abs(line.direction[1])))
            assert slope == pytest.approx(5.0, abs=1.5)

    def test_no_lines(self, make_cloud):
        """Test a frame needs at least one line"""
        with pytest.raises(NoTrellisFound):
            estimate_trellis_frame(make_cloud(np.zeros((3, 3))), [])


class TestTrunkCandidates:
    """Test the ground histogram of the trellis slab"""

    def test_two_trunks_and_a_wire(self, rng):
        """Test dense vertical columns stand out of a uniform wire"""
        trunks = [
            np.column_stack(
                [rng.normal(0, 0.005, 3000), rng.normal(y, 0.005, 3000), rng.uniform(0, 2, 3000)]
            )
            for y in (-0.5, 0.5)
        ]
        wire = np.column_stack([rng.normal(0, 0.002, 3000), rng.uniform(-1.5, 1.5, 3000), np.ones(3000)])
        positions, hist = locate_trunk_candidates(np.vstack(trunks + [wire]))
        np.testing.assert_allclose(positions, [-0.5, 0.5], atol=0.03)
        assert hist.counts.sum() == 9000

    def test_empty_slab(self):
        """Test points far from the trellis plane give no candidates"""
        with pytest.raises(NoTrunkCandidates):
            locate_trunk_candidates(np.array([[0.5, 0.0, 1.0], [0.6, 0.1, 1.0]]))


class TestVerifyTrunks:
    """Test main-axis length and pole rejection of candidates"""

    def test_short_candidates_rejected(self, rng):
        """Test a column shorter than the minimum path is not a tree"""
        points = np.vstack([thin_column(rng, 0.0, 2.0), thin_column(rng, 1.0, 0.6)])
        result = verify_trunks(points, [1.0, 0.0])
        assert len(result.trees) == 1
        (kept,) = list(result.trees)
        assert kept.id == 1
        assert kept.base[1] == pytest.approx(0.0)
        assert kept.axis_length > 1.5
        assert result.rejected == [1.0]

    def test_stray_point_below_trunk(self, rng):
        """Test a lone point under the trunk does not shorten its main axis"""
        trunk = solid_trunk(rng, 0.0, radius=0.015, height=1.95, n=20000) + [0.0, 0.0, 0.05]
        points = np.vstack([trunk, [[0.06, 0.0, 0.03]]])
        axis, length = main_axis(points, 0.005)
        assert length > 1.5
        assert axis[0, 2] > 0.04
        result = verify_trunks(points, [0.0])
        assert len(result.trees) == 1
        assert result.rejected == []

    def test_poles_rejected(self, rng):
        """Test candidates the pole test accepts are kept apart from trees"""
        points = np.vstack([thin_column(rng, 0.0, 2.0), thin_column(rng, 1.0, 2.0)])

        def pole_at_one(points, y, config=None):
            return PoleDecision(y, y == 1.0, 1.0 if y == 1.0 else 0.0, np.zeros(0, dtype=np.int64))

        with patch("orchard.segment.trunks.detect_support_pole", side_effect=pole_at_one):
            result = verify_trunks(points, [0.0, 1.0])
        assert [tree.base[1] for tree in result.trees] == [0.0]
        assert [pole.y for pole in result.poles] == [1.0]


class TestPoleTest:
    """Test the hollow-cylinder pole test"""

    def test_circle_center(self, rng):
        """Test the fixed-radius center of a noisy circle"""
        angle = rng.uniform(0, 2 * np.pi, 400)
        xy = np.column_stack([0.01 + 0.045 * np.cos(angle), 0.3 + 0.045 * np.sin(angle)])
        xy += rng.normal(0, 0.001, xy.shape)
        np.testing.assert_allclose(fixed_radius_center(xy, 0.045), [0.01, 0.3], atol=0.002)

    def test_hollow_pole(self, rng):
        """Test a hollow cylinder of the pole radius is a pole"""
        decision = detect_support_pole(hollow_pole(rng, 0.5), 0.5)
        assert decision.is_pole
        assert decision.ratio > 0.95
        assert len(decision.shell) > 0.95 * 6000

    def test_solid_trunk(self, rng):
        """Test a filled trunk is not a pole"""
        decision = detect_support_pole(solid_trunk(rng, 0.5), 0.5)
        assert not decision.is_pole
        assert len(decision.shell) == 0

    def test_noisy_pole(self, rng):
        """Test a pole scanned with 5 mm noise is still a pole"""
        decision = detect_support_pole(hollow_pole(rng, 0.5, noise=0.005), 0.5)
        assert decision.is_pole
        assert decision.ratio > 0.9

    @pytest.mark.parametrize("radius", [0.01, 0.02])
    @pytest.mark.parametrize("noise", [0.0, 0.002, 0.005])
    def test_thin_stem_is_not_a_pole(self, rng, radius, noise):
        """Test a thin filled stem never passes, whatever side the circle fit settles on"""
        stem = solid_trunk(rng, 0.5, radius=radius, height=2.3)
        decision = detect_support_pole(stem + rng.normal(0, noise, stem.shape), 0.5)
        assert not decision.is_pole
        assert decision.ratio < 0.5

    def test_wider_cylinder_is_not_a_pole(self, rng):
        """Test a hollow cylinder of 8 cm radius leaves the pole shell sparse"""
        decision = detect_support_pole(hollow_pole(rng, 0.5, radius=0.08), 0.5)
        assert not decision.is_pole

    def test_too_few_points(self):
        """Test sparse candidates are not tested"""
        decision = detect_support_pole(np.zeros((10, 3)), 0.0)
        assert not decision.is_pole and decision.ratio == 0.0


class TestLabels:
    """Test label helpers and tree sets"""

    def test_tree_set_order(self):
        """Test trees must be ordered along the row"""
        trees = TreeSet([tree(1, -0.5), tree(2, 0.5)])
        assert trees.ids == [1, 2]
        assert trees.by_id(2).y == 0.5
        with pytest.raises(KeyError):
            trees.by_id(3)
        with pytest.raises(ValueError):
            TreeSet([tree(1, 0.5), tree(2, -0.5)])

    def test_trunk_labels(self):
        """Test points near a main axis are trunk points"""
        points = np.array([[0.01, 0.5, 1.0], [0.2, 0.5, 1.0], [0.0, -0.49, 0.3]])
        mask = label_trunk_points(points, TreeSet([tree(1, -0.5), tree(2, 0.5)]), 0.03)
        np.testing.assert_array_equal(mask, [True, False, True])

    def test_strip_to_trees(self):
        """Test wire and pole points are removed and indices kept"""
        labels = np.array([0, 2, 1, 3, 1])
        cloud = ColorPointCloud(np.arange(15, dtype=float).reshape(5, 3), None)
        stripped, kept = strip_to_trees(cloud, labels)
        np.testing.assert_array_equal(kept, [0, 2, 4])
        assert len(stripped) == 3

    def test_counts(self):
        """Test a fresh labeling is all branch"""
        counts = label_counts(new_labeling(4))
        assert counts == {"tree_trunk": 0, "branch": 4, "trellis_wire": 0, "support_pole": 0}


@pytest.mark.slow
@pytest.mark.integration
class TestSegmentWinter:
    """Test the whole segmentation on a synthetic row"""

    @pytest.fixture(scope="class")
    def segmentation(self, small_winter):
        cloud, _, _ = small_winter
        return segment_winter(cloud, PipelineConfig(emit_debug=True))

    def test_tree_count_and_pole(self, segmentation, small_scene):
        """Test every tree is found and the pole is not a tree"""
        assert len(segmentation.trees) == 3
        assert len(segmentation.poles) == 1
        found = np.array([t.y for t in segmentation.trees])
        np.testing.assert_allclose(found, small_scene.tree_bases[:, 1], atol=0.05)

    def test_trellis_levels(self, segmentation):
        """Test the four trellis levels are recovered"""
        assert len(segmentation.frame.heights) == 4
        assert segmentation.frame.heights[-1] == pytest.approx(2.0, abs=0.05)

    def test_class_recall(self, segmentation, small_winter):
        """Test wire and pole points are found with high recall"""
        _, gt_labels, _ = small_winter
        wire = segmentation_metrics(segmentation.labels, gt_labels, SemanticLabel.TRELLIS_WIRE)
        pole = segmentation_metrics(segmentation.labels, gt_labels, SemanticLabel.SUPPORT_POLE)
        assert wire.recall >= 0.85
        assert pole.recall >= 0.90
        assert pole.precision >= 0.90

    def test_tree_cloud_has_no_infrastructure(self, segmentation):
        """Test the stripped cloud keeps only tree classes"""
        kept = segmentation.labels[segmentation.tree_indices]
        assert np.isin(kept, [SemanticLabel.TREE_TRUNK, SemanticLabel.BRANCH]).all()

    def test_debug_images(self, segmentation):
        """Test the projection and accumulator are kept for debugging"""
        assert set(segmentation.debug) == {"yz_projection", "hough_accumulator"}


class TestWires:
    """Test wire labeling between trunks"""

    def test_wire_between_trunks(self, rng):
        """Test wire points on both sides of a trunk are labeled and trunk points are not"""
        wire = np.column_stack(
            [rng.normal(0, 0.001, 2000), rng.uniform(-1, 1, 2000), rng.normal(1.0, 0.001, 2000)]
        )
        trunk = solid_trunk(rng, 0.0, radius=0.02, n=2000)
        points = np.vstack([wire, trunk])
        labels = new_labeling(len(points))
        labels[2000:] = SemanticLabel.TREE_TRUNK
        mask = label_wire_points(points, [1.0], TreeSet([tree(1, 0.0)]), labels)
        assert not mask[2000:].any()
        away = np.abs(wire[:, 1]) > 0.06
        assert mask[:2000][away].mean() > 0.9
