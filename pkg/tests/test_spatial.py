#!/usr/bin/env python3
"""
Tests for nearest-neighbour queries
"""

from itertools import product

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from orchard.core.spatial import NearestIndex, nearest_point
from orchard.exceptions import EmptyInput


class TestNearestIndex:
    """Test exact nearest-neighbour lookups"""

    @settings(max_examples=100, deadline=None)
    @given(seed=st.integers(0, 2**32 - 1))
    def test_matches_linear_scan(self, seed):
        """Test indices and distances against a brute-force scan"""
        rng = np.random.default_rng(seed)
        points = rng.uniform(-1, 1, (int(rng.integers(1, 80)), 3))
        queries = rng.uniform(-1.5, 1.5, (30, 3))
        idx, dist = NearestIndex(points).query(queries)
        full = np.linalg.norm(queries[:, None, :] - points[None, :, :], axis=2)
        np.testing.assert_array_equal(idx, full.argmin(axis=1))
        np.testing.assert_allclose(dist, full.min(axis=1), atol=1e-12)

    def test_ties_go_to_lowest_index(self):
        """Test equidistant points resolve to the lower index"""
        index = NearestIndex(np.array([[1.0, 0, 0], [-1.0, 0, 0], [0, 1.0, 0]]))
        assert index.nearest([0, 0, 0]) == (0, pytest.approx(1.0))

    def test_many_ties_go_to_lowest_index(self, rng):
        """Test thirty equidistant points still resolve to the lowest index"""
        base = [np.roll(v, r) for v in ([3, 0, 0], [2, 2, 1]) for r in range(3)]
        signed = [b * np.array(s) for b in base for s in product((-1, 1), repeat=3)]
        shell = np.unique(signed, axis=0).astype(np.float64)
        assert len(shell) == 30
        shell = shell[rng.permutation(len(shell))]
        far = np.array([[5.0, 0, 0], [0, 0, -4.0], [4.0, 3.0, 0]])
        index = NearestIndex(np.vstack([far, shell]))
        assert index.nearest([0, 0, 0]) == (3, pytest.approx(3.0))

    def test_duplicate_points(self):
        """Test duplicated points resolve to the first copy"""
        index = NearestIndex(np.array([[5.0, 5, 5], [0.0, 0, 0], [0.0, 0, 0]]))
        assert nearest_point(index, [0.1, 0, 0])[0] == 1

    def test_empty_index_rejected(self):
        """Test an empty point set cannot be indexed"""
        with pytest.raises(EmptyInput):
            NearestIndex(np.zeros((0, 3)))

    def test_any_within_is_strict(self):
        """Test the radius test excludes points exactly at the radius"""
        index = NearestIndex(np.array([[0.0, 0, 0]]))
        mask = index.any_within(np.array([[0.5, 0, 0], [0.25, 0, 0]]), 0.5)
        np.testing.assert_array_equal(mask, [False, True])

    def test_within(self):
        """Test ball queries return every point inside the radius"""
        index = NearestIndex(np.array([[0.0, 0, 0], [0.1, 0, 0], [1.0, 0, 0]]))
        assert sorted(index.within(np.array([[0.0, 0, 0]]), 0.2)[0]) == [0, 1]

    def test_empty_query(self):
        """Test no queries give empty results"""
        idx, dist = NearestIndex(np.ones((2, 3))).query(np.zeros((0, 3)))
        assert len(idx) == 0 and len(dist) == 0
