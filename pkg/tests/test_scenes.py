#!/usr/bin/env python3
"""
Seeded synthetic rows at 5 mm scan noise: tree counts, wire and pole
segmentation, separation time and apple-to-tree assignment
"""

import time
from functools import lru_cache

import numpy as np
import pytest

from orchard.calibrate import Calibration, RoiSpec, calibrate_cloud
from orchard.commands import run_pipeline
from orchard.evaluate import segmentation_metrics
from orchard.models.config import PipelineConfig
from orchard.segment import segment_winter
from orchard.segment.labels import SemanticLabel
from orchard.separate import separate_trees
from orchard.synth import SceneSpec, generate_scene, write_scene

NOISE = 0.005
SEEDS = range(20)


def scene_spec(seed: int, **values) -> SceneSpec:
    """Four or five trees at 1 m mean spacing"""
    return SceneSpec(n_trees=4 + seed % 2, seed=seed, noise=NOISE, **values)


@lru_cache(maxsize=None)
def segmented(seed: int):
    """(scene, calibrated cloud, ground-truth labels, segmentation) of a seeded row"""
    scene = generate_scene(scene_spec(seed, raw_frame=False, apples_per_tree=0))
    identity = Calibration(1.0, np.eye(3), np.zeros(3))
    cloud, keep = calibrate_cloud(scene.winter.cloud, identity, RoiSpec())
    return scene, cloud, scene.winter.labels[keep], segment_winter(cloud)


@pytest.mark.slow
@pytest.mark.integration
class TestTreeCount:
    """Test every trunk is found and nothing else is taken for one"""

    @pytest.mark.parametrize("seed", SEEDS)
    def test_count_matches(self, seed):
        """Test the verified tree count equals the planted count"""
        scene, _, _, segmentation = segmented(seed)
        assert len(segmentation.trees) == scene.spec.n_trees
        found = np.array([tree.y for tree in segmentation.trees])
        np.testing.assert_allclose(found, scene.tree_bases[:, 1], atol=0.05)
        assert len(segmentation.poles) == 1


@pytest.mark.slow
@pytest.mark.integration
class TestWireAndPole:
    """Test infrastructure labels against the planted classes"""

    @pytest.mark.parametrize("seed", range(4))
    def test_recall_and_precision(self, seed):
        """Test wire recall of 0.85 and pole recall and precision of 0.90"""
        _, _, gt_labels, segmentation = segmented(seed)
        wire = segmentation_metrics(segmentation.labels, gt_labels, SemanticLabel.TRELLIS_WIRE)
        pole = segmentation_metrics(segmentation.labels, gt_labels, SemanticLabel.SUPPORT_POLE)
        assert wire.recall >= 0.85
        assert pole.recall >= 0.90
        assert pole.precision >= 0.90


@pytest.mark.slow
@pytest.mark.integration
class TestSeparationTime:
    """Test separation stays inside 60 s per million winter points"""

    def test_within_budget(self):
        """Test a five-tree row separates in time proportional to its size"""
        _, cloud, _, segmentation = segmented(1)
        started = time.perf_counter()
        result = separate_trees(segmentation, cloud)
        elapsed = time.perf_counter() - started
        assert len(result.labeled.tree_point_counts()) == 5
        assert elapsed < 60.0 * len(cloud) / 1_000_000


@pytest.mark.slow
@pytest.mark.integration
class TestAssignment:
    """Test apple-to-tree assignment over twenty raw-frame runs"""

    @pytest.fixture(scope="class")
    def reports(self, tmp_path_factory):
        reports = []
        for seed in SEEDS:
            scene_dir = tmp_path_factory.mktemp(f"scene-{seed}")
            paths = write_scene(generate_scene(scene_spec(seed)), scene_dir)
            config = PipelineConfig(
                winter=paths["winter"],
                harvest=paths["harvest"],
                winter_calib=paths["winter_calib"],
                harvest_calib=paths["harvest_calib"],
                gt_labels=paths["winter"],
                gt_apples=paths["gt_apples"],
                out_dir=scene_dir / "out",
            )
            reports.append(run_pipeline(config, scene=f"seed-{seed}"))
        return reports

    def test_every_run_counts_its_trees(self, reports):
        """Test each run finds exactly the planted trees"""
        assert [r.metrics.tree_count_exact for r in reports] == [True] * len(reports)

    def test_mean_accuracy(self, reports):
        """Test the mean assignment accuracy reaches 95%"""
        assert np.mean([r.metrics.acc for r in reports]) >= 0.95

    def test_drop_against_manual_labels(self, reports):
        """Test automatic separation costs at most 3 points of accuracy against ground-truth labels"""
        assert np.mean([r.metrics.acc_drop for r in reports]) <= 0.03
