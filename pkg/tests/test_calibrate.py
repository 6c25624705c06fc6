#!/usr/bin/env python3
"""
Tests for calibration from chart sidecars and the ROI crop
"""

import numpy as np
import pytest

from orchard.calibrate import (
    Calibration,
    RoiSpec,
    apply_calibration,
    calibrate_cloud,
    derive_calibration,
    roi_mask,
)
from orchard.core.geometry import rotation_about, rotation_angle_deg
from orchard.exceptions import DegenerateMarker, EmptyRoi, MarkerNoiseTooHigh
from orchard.models.sidecars import CalibrationSidecar
from orchard.synth import SceneSpec, generate_scene


@pytest.fixture(scope="module")
def raw_scene():
    """Two-tree scene exported in a random raw frame"""
    return generate_scene(SceneSpec(n_trees=2, seed=11, apples_per_tree=3))


def chart(points, spacing=0.05):
    return CalibrationSidecar(
        marker_points=np.asarray(points).tolist(), patch_spacing_m=spacing, d_R_cc=1.0, d_T_cc=0.25
    )


def flat_chart(rows=4, cols=6, spacing=0.05):
    r, c = np.meshgrid(np.arange(rows), np.arange(cols), indexing="ij")
    return np.column_stack([np.zeros(rows * cols), c.ravel() * spacing, -r.ravel() * spacing])


class TestDeriveCalibration:
    """Test scale, rotation and origin estimation"""

    def test_explicit_transform(self):
        """Test an explicit sidecar is taken as is"""
        rotation = rotation_about([0, 0, 1], 0.3)
        sidecar = CalibrationSidecar(scale=2.0, rotation=rotation.tolist(), origin=[1.0, 2.0, 3.0])
        calib = derive_calibration(sidecar)
        assert calib.scale == 2.0
        np.testing.assert_allclose(calib.rotation, rotation)
        np.testing.assert_allclose(calib.transform(np.zeros((1, 3))), [[-1.0, -2.0, -3.0]])

    def test_scale_from_spacing(self):
        """Test a chart seen at half size doubles the scale"""
        calib = derive_calibration(chart(flat_chart(spacing=0.025)))
        assert calib.scale == pytest.approx(2.0)
        np.testing.assert_allclose(calib.rotation, np.eye(3), atol=1e-12)

    def test_chart_center_lands_behind_the_row(self):
        """Test the chart center maps to (-d_R_cc, -d_T_cc, 0) without a cloud"""
        grid = flat_chart()
        calib = derive_calibration(chart(grid))
        center = calib.transform(grid.mean(axis=0, keepdims=True))[0]
        np.testing.assert_allclose(center, [-1.0, -0.25, 0.0], atol=1e-12)

    def test_recovers_raw_frame(self, raw_scene):
        """Test calibrating the raw scene restores the generator frame"""
        calib = derive_calibration(raw_scene.winter_sidecar, raw_scene.raw_winter(), RoiSpec())
        truth = raw_scene.winter_calibration
        assert calib.scale == pytest.approx(truth.scale, rel=1e-9)
        assert rotation_angle_deg(calib.rotation.T @ truth.rotation) < 1e-4
        restored = calib.transform(raw_scene.raw_winter().points)
        np.testing.assert_allclose(restored, raw_scene.winter.cloud.points, atol=0.02)

    def test_collinear_chart(self):
        """Test patch centers on one line raise DegenerateMarker"""
        points = np.column_stack([np.zeros(24), np.arange(24) * 0.05, np.zeros(24)])
        with pytest.raises(DegenerateMarker):
            derive_calibration(chart(points))

    def test_noisy_chart(self, rng):
        """Test inconsistent patch spacing raises MarkerNoiseTooHigh"""
        points = flat_chart() + rng.normal(0, 0.02, (24, 3))
        with pytest.raises(MarkerNoiseTooHigh):
            derive_calibration(chart(points))


class TestRoi:
    """Test the region-of-interest crop"""

    def test_mask_bounds(self):
        """Test points inside and outside every ROI face"""
        calib = Calibration(1.0, np.eye(3), np.zeros(3))
        roi = RoiSpec(half_extent=1.0, depth=2.0, z_min=0.03, z_max=2.0)
        points = np.array(
            [[0.0, 0.0, 1.0], [0.0, 0.0, 0.01], [0.0, 1.5, 1.0], [1.5, 0.0, 1.0], [0.0, 0.0, 2.5]]
        )
        np.testing.assert_array_equal(roi_mask(points, calib, roi), [True, False, False, False, False])

    def test_chart_offset_sets_depth_start(self):
        """Test the depth interval starts at the chart when it was observed"""
        calib = Calibration(1.0, np.eye(3), np.zeros(3), marker_offset=1.0)
        assert calib.x_range(RoiSpec(depth=2.0)) == (-1.0, 1.0)

    def test_crop_keeps_order(self, make_cloud):
        """Test the crop mask and kept points"""
        cloud = make_cloud([[0, 0, 1.0], [0, 0, -1.0], [0, 0, 2.0]])
        kept, keep = calibrate_cloud(cloud, Calibration(1.0, np.eye(3), np.zeros(3)), RoiSpec())
        np.testing.assert_array_equal(keep, [True, False, True])
        np.testing.assert_allclose(kept.points[:, 2], [1.0, 2.0])

    def test_apply_scales_and_crops(self, make_cloud):
        """Test apply_calibration returns the calibrated points left after the crop"""
        cloud = make_cloud([[0, 0, 0.5], [0, 0, 5.0], [0, 1.0, 0.5]])
        calib = Calibration(2.0, np.eye(3), np.array([0.0, 0.0, -0.1]))
        kept = apply_calibration(cloud, calib, RoiSpec())
        np.testing.assert_allclose(kept.points, [[0.0, 0.0, 1.1], [0.0, 2.0, 1.1]])
        np.testing.assert_array_equal(kept.colors, cloud.colors[[0, 2]])

    def test_empty_roi(self, make_cloud):
        """Test a crop removing every point raises EmptyRoi"""
        cloud = make_cloud([[10.0, 10.0, 10.0]])
        with pytest.raises(EmptyRoi):
            calibrate_cloud(cloud, Calibration(1.0, np.eye(3), np.zeros(3)), RoiSpec())

    def test_invalid_roi(self):
        """Test inverted height bounds are rejected"""
        with pytest.raises(ValueError):
            RoiSpec(z_min=2.0, z_max=1.0)

    def test_rotation_must_be_orthonormal(self):
        """Test a non-rotation matrix is rejected"""
        with pytest.raises(ValueError):
            Calibration(1.0, 2 * np.eye(3), np.zeros(3))
