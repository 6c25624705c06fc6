#!/usr/bin/env python3
"""
Tests for MSAC plane and line fitting
"""

import numpy as np
import pytest

from orchard.core.fitting import fit_line_msac, fit_plane_msac, msac_score
from orchard.exceptions import DegenerateInput


@pytest.fixture
def noisy_plane(rng):
    """Points on z = 0.2 x with 30% uniform outliers"""
    n = 700
    xy = rng.uniform(-1, 1, (n, 2))
    plane = np.column_stack([xy, 0.2 * xy[:, 0] + rng.normal(0, 0.002, n)])
    outliers = rng.uniform(-1, 1, (300, 3))
    return np.vstack([plane, outliers]), n


class TestPlaneFit:
    """Test robust plane estimation"""

    def test_recovers_plane(self, noisy_plane):
        """Test the normal and inliers of a plane with outliers"""
        points, n = noisy_plane
        plane, inliers = fit_plane_msac(points, 0.01, seed=0)
        expected = np.array([-0.2, 0.0, 1.0]) / np.linalg.norm([-0.2, 0.0, 1.0])
        assert abs(plane.normal @ expected) > np.cos(np.radians(1.0))
        assert (inliers < n).sum() >= 0.95 * n

    def test_same_seed_same_result(self, noisy_plane):
        """Test fits are reproducible for a fixed seed"""
        points, _ = noisy_plane
        _, first = fit_plane_msac(points, 0.01, seed=5)
        _, second = fit_plane_msac(points, 0.01, seed=5)
        np.testing.assert_array_equal(first, second)

    def test_too_few_points(self):
        """Test that two points cannot define a plane"""
        with pytest.raises(DegenerateInput):
            fit_plane_msac(np.zeros((2, 3)), 0.01)

    def test_collinear_points(self):
        """Test that collinear points raise DegenerateInput"""
        points = np.outer(np.linspace(0, 1, 20), [1.0, 2.0, 3.0])
        with pytest.raises(DegenerateInput):
            fit_plane_msac(points, 0.01)


class TestLineFit:
    """Test sequential line estimation"""

    def test_two_parallel_lines(self, rng):
        """Test that two fits find two parallel wires with disjoint inliers"""
        t = rng.uniform(-1, 1, 300)
        high = np.column_stack([np.zeros(300), t, np.full(300, 0.5)])
        low = np.column_stack([np.zeros(300), t[::-1], np.full(300, 0.44)])
        points = np.vstack([low, high]) + rng.normal(0, 0.001, (600, 3))
        fits = fit_line_msac(points, 0.01, seed=0, count=2)
        assert len(fits) == 2
        (first, a), (second, b) = fits
        assert len(np.intersect1d(a, b)) == 0
        heights = sorted([first.midpoint[2], second.midpoint[2]])
        assert heights == pytest.approx([0.44, 0.5], abs=0.005)
        for line in (first, second):
            assert abs(line.direction[1]) > 0.999

    def test_anchors_span_inliers(self, rng):
        """Test that the fitted line is anchored at its extreme inliers"""
        t = np.linspace(0, 2, 100)
        points = np.column_stack([t, np.zeros(100), np.zeros(100)])
        (line, inliers), = fit_line_msac(points, 0.01, seed=1)
        assert len(inliers) == 100
        assert np.linalg.norm(line.p2 - line.p1) == pytest.approx(2.0, abs=1e-6)

    def test_count_must_be_one_or_two(self):
        """Test that three sequential lines are not supported"""
        with pytest.raises(ValueError):
            fit_line_msac(np.random.default_rng(0).random((10, 3)), 0.01, count=3)

    def test_coincident_points(self):
        """Test that identical points raise DegenerateInput"""
        with pytest.raises(DegenerateInput):
            fit_line_msac(np.ones((5, 3)), 0.01)


class TestScore:
    """Test the truncated quadratic cost"""

    def test_truncation(self):
        """Test residuals beyond the tolerance cost the tolerance squared"""
        assert msac_score(np.array([0.1, 1.0]), 0.5) == pytest.approx(0.26)
