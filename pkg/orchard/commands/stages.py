#!/usr/bin/env python3
"""
Stage handlers of a pipeline run.

Each handler reads what earlier stages left on the ``RunContext``, does its
work, writes its artifacts and records counts on the run report.
"""

import logging
from dataclasses import dataclass, field
from pathlib import Path
from typing import Callable, Dict, List, Optional

import numpy as np

from ..apples import DetectedApple, detect_apples
from ..calibrate import Calibration, RoiSpec, calibrate_cloud, derive_calibration
from ..core.cloud import ColorPointCloud
from ..evaluate import build_metric_report, metric_markdown
from ..exceptions import ConfigError, ParseError, ShapeError
from ..io import (
    PlyData,
    load_calibration,
    load_gt_apples,
    read_ply,
    write_assignment_csv,
    write_json,
    write_pgm,
    write_ply,
    write_text,
)
from ..models.config import PipelineConfig, Stage
from ..models.reports import DetectionsDocument, RunReport, TreesDocument, TreeSummary
from ..register import AppleAssignment, RigidTransform, apple_locations, assign_apples, icp_align
from ..segment import SegmentationResult, segment_winter
from ..separate import SeparationResult, TreeLabeledCloud, separate_trees

logger = logging.getLogger(__name__)


@dataclass
class RunContext:
    """Inputs and intermediate results of one scene"""

    config: PipelineConfig
    report: RunReport
    winter_raw: Optional[PlyData] = field(default=None, repr=False)
    winter_keep: Optional[np.ndarray] = field(default=None, repr=False)
    winter: Optional[ColorPointCloud] = field(default=None, repr=False)
    harvest: Optional[ColorPointCloud] = field(default=None, repr=False)
    calibration: Optional[Calibration] = None
    harvest_calibration: Optional[Calibration] = None
    segmentation: Optional[SegmentationResult] = field(default=None, repr=False)
    separation: Optional[SeparationResult] = field(default=None, repr=False)
    apples: Optional[List[DetectedApple]] = field(default=None, repr=False)
    transform: Optional[RigidTransform] = None
    assignment: Optional[AppleAssignment] = field(default=None, repr=False)

    @property
    def out_dir(self) -> Path:
        return Path(self.config.out_dir)

    def record(self, name: str, path: Path) -> Path:
        self.report.artifacts[name] = str(path)
        return path


def _calibration(sidecar: Optional[Path], cloud: ColorPointCloud, config: PipelineConfig) -> Calibration:
    if sidecar is None:
        logger.warning("No calibration sidecar; treating the cloud as already calibrated")
        return Calibration(1.0, np.eye(3), np.zeros(3))
    return derive_calibration(
        load_calibration(sidecar),
        cloud,
        RoiSpec.from_config(config),
        noise_limit=config.marker_noise_limit,
        ground_percentile=config.ground_percentile,
    )


def run_calibrate(ctx: RunContext) -> None:
    config = ctx.config
    if config.winter is None:
        raise ConfigError("no winter cloud given (--winter)")
    roi = RoiSpec.from_config(config)
    ctx.winter_raw = read_ply(config.winter)
    ctx.calibration = _calibration(config.winter_calib, ctx.winter_raw.cloud, config)
    ctx.winter, ctx.winter_keep = calibrate_cloud(ctx.winter_raw.cloud, ctx.calibration, roi)
    ctx.record("winter_calibrated", write_ply(ctx.out_dir / "winter_calibrated.ply", ctx.winter))
    ctx.report.counts["winter_points"] = len(ctx.winter)

    if config.stage.includes(Stage.APPLES):
        if config.harvest is None:
            raise ConfigError("no harvest cloud given (--harvest)")
        harvest = read_ply(config.harvest)
        ctx.harvest_calibration = _calibration(config.resolved_harvest_calib, harvest.cloud, config)
        ctx.harvest, _ = calibrate_cloud(harvest.cloud, ctx.harvest_calibration, roi)
        ctx.record("harvest_calibrated", write_ply(ctx.out_dir / "harvest_calibrated.ply", ctx.harvest))
        ctx.report.counts["harvest_points"] = len(ctx.harvest)


def run_segment(ctx: RunContext) -> None:
    ctx.segmentation = segment_winter(ctx.winter, ctx.config)
    labels = ctx.segmentation.labels
    ctx.record("winter_labels", write_ply(ctx.out_dir / "winter_labels.ply", ctx.winter, {"semlabel": labels}))
    for name, count in ctx.segmentation.counts.items():
        ctx.report.counts[f"label_{name}"] = count
    ctx.report.counts["trees"] = len(ctx.segmentation.trees)
    for name, image in ctx.segmentation.debug.items():
        ctx.record(name, write_pgm(ctx.out_dir / "debug" / f"{name}.pgm", image))
    print(f"🌳 Detected {len(ctx.segmentation.trees)} trees")


def tree_summaries(ctx: RunContext) -> List[TreeSummary]:
    """Base, size and apple count of every separated tree, in row order"""
    labeled = ctx.separation.labeled
    frame = ctx.segmentation.frame
    apple_counts = ctx.assignment.per_tree() if ctx.assignment is not None else {}
    point_counts = labeled.tree_point_counts()
    summaries = []
    for tree in ctx.segmentation.trees:
        base = frame.from_frame(np.asarray(tree.base).reshape(1, 3))[0]
        members = labeled.tree_ids == tree.id
        top = float(labeled.cloud.points[members, 2].max()) if members.any() else float(base[2])
        summaries.append(
            TreeSummary(
                id=tree.id,
                base=[round(float(v), 6) for v in base],
                point_count=point_counts.get(tree.id, 0),
                height=round(max(top - float(base[2]), 0.0), 6),
                apple_count=apple_counts.get(tree.id, 0),
            )
        )
    return summaries


def _write_trees(ctx: RunContext) -> None:
    ctx.report.trees = tree_summaries(ctx)
    ctx.record("trees", write_json(ctx.out_dir / "trees.json", TreesDocument(trees=ctx.report.trees)))


def run_separate(ctx: RunContext) -> None:
    ctx.separation = separate_trees(ctx.segmentation, ctx.winter, ctx.config)
    labeled = ctx.separation.labeled
    scalars = {"semlabel": labeled.labels, "treeid": labeled.tree_ids}
    ctx.record("winter_trees", write_ply(ctx.out_dir / "winter_trees.ply", labeled.cloud, scalars))
    ctx.report.counts["tree_points"] = int(labeled.labeled_mask.sum())
    _write_trees(ctx)


def run_apples(ctx: RunContext) -> None:
    ctx.apples = detect_apples(ctx.harvest, ctx.config)
    document = DetectionsDocument(detections=[a.to_record() for a in ctx.apples])
    ctx.record("detections", write_json(ctx.out_dir / "detections.json", document))
    ctx.report.counts["apples"] = len(ctx.apples)
    print(f"🍎 Detected {len(ctx.apples)} apples")


def run_register(ctx: RunContext) -> None:
    ctx.transform = icp_align(ctx.winter.points, ctx.harvest.points, ctx.config)
    ctx.record("transform", write_json(ctx.out_dir / "transform.json", ctx.transform.to_document()))


def run_assign(ctx: RunContext) -> None:
    ctx.assignment = assign_apples(ctx.apples, ctx.separation.labeled, ctx.transform)
    path = write_assignment_csv(
        ctx.out_dir / "assignment.csv",
        apple_locations(ctx.apples),
        ctx.assignment.tree_ids,
        ctx.assignment.distances,
    )
    ctx.record("assignment", path)
    ctx.report.counts["assigned_apples"] = len(ctx.assignment)
    _write_trees(ctx)


def _ground_truth_labels(ctx: RunContext):
    """(semantic labels, tree ids) of the kept winter points"""
    truth = read_ply(ctx.config.gt_labels)
    if len(truth.cloud) != len(ctx.winter_raw.cloud):
        raise ShapeError(
            f"{ctx.config.gt_labels} has {len(truth.cloud)} vertices, winter cloud has {len(ctx.winter_raw.cloud)}"
        )
    labels, tree_ids = truth.scalar("semlabel"), truth.scalar("treeid")
    if labels is None or tree_ids is None:
        raise ParseError(f"{ctx.config.gt_labels}: semlabel and treeid scalars required")
    keep = ctx.winter_keep
    return labels[keep].astype(np.int64), tree_ids[keep].astype(np.int64)


def run_eval(ctx: RunContext) -> None:
    config = ctx.config
    if config.gt_labels is None and config.gt_apples is None:
        logger.info("No ground truth given; skipping evaluation")
        return

    inputs: Dict[str, object] = {"n_trees": len(ctx.segmentation.trees), "match_radius": config.match_radius}
    if config.gt_labels is not None:
        gt_labels, gt_tree_ids = _ground_truth_labels(ctx)
        inputs.update(
            labels=ctx.separation.labeled.labels,
            gt_labels=gt_labels,
            tree_ids=ctx.separation.labeled.tree_ids,
            gt_tree_ids=gt_tree_ids,
        )
        manual = TreeLabeledCloud(ctx.winter, gt_labels, gt_tree_ids)
        if manual.labeled_mask.any():
            inputs["manual_apple_tree_ids"] = assign_apples(ctx.apples, manual, ctx.transform).tree_ids
    if config.gt_apples is not None:
        gt_apples, gt_apple_tree_ids = load_gt_apples(config.gt_apples)
        inputs.update(
            detections=apple_locations(ctx.apples),
            apple_tree_ids=ctx.assignment.tree_ids,
            gt_apples=gt_apples,
            gt_apple_tree_ids=gt_apple_tree_ids,
        )

    metrics = build_metric_report(**inputs)
    ctx.report.metrics = metrics
    ctx.record("metrics", write_json(ctx.out_dir / "metrics.json", metrics))
    ctx.record("metrics_table", write_text(ctx.out_dir / "metrics.md", metric_markdown(metrics, ctx.report.scene)))
    if metrics.acc is not None:
        print(f"📊 Assignment accuracy {100 * metrics.acc:.2f}%")


STAGE_HANDLERS: Dict[Stage, Callable[[RunContext], None]] = {
    Stage.CALIBRATE: run_calibrate,
    Stage.SEGMENT: run_segment,
    Stage.SEPARATE: run_separate,
    Stage.APPLES: run_apples,
    Stage.REGISTER: run_register,
    Stage.ASSIGN: run_assign,
    Stage.EVAL: run_eval,
}
