#!/usr/bin/env python3
"""
Ground-truth comparison: segmentation scores, apple matching and assignment accuracy.

Undefined ratios (zero denominators) are reported as None.
"""

import logging
from dataclasses import dataclass, field
from typing import Dict, List, Optional, Sequence, Tuple

import numpy as np

from .core.spatial import NearestIndex
from .exceptions import ShapeError
from .models.reports import AppleScores, ClassScores, MetricReport
from .segment.labels import NO_TREE, SemanticLabel

logger = logging.getLogger(__name__)


def _ratio(num: float, den: float) -> Optional[float]:
    return float(num) / float(den) if den > 0 else None


def f1_from(precision: Optional[float], recall: Optional[float]) -> Optional[float]:
    if precision is None or recall is None or precision + recall == 0:
        return None
    return 2 * precision * recall / (precision + recall)


def iou_from_f1(f1: Optional[float]) -> Optional[float]:
    return None if f1 is None else f1 / (2 - f1)


def segmentation_metrics(pred: np.ndarray, gt: np.ndarray, label: int) -> ClassScores:
    """One-vs-rest confusion counts and scores of ``label``"""
    pred = np.asarray(pred)
    gt = np.asarray(gt)
    if pred.shape != gt.shape:
        raise ShapeError(f"{len(pred)} predicted labels but {len(gt)} ground-truth labels")
    p = pred == label
    g = gt == label
    tp = int((p & g).sum())
    fp = int((p & ~g).sum())
    fn = int((~p & g).sum())
    tn = int((~p & ~g).sum())
    recall = _ratio(tp, tp + fn)
    precision = _ratio(tp, tp + fp)
    try:
        name = SemanticLabel(label).name.lower()
    except ValueError:
        name = str(label)
    return ClassScores(
        label=name,
        tp=tp,
        fp=fp,
        fn=fn,
        tn=tn,
        recall=recall,
        precision=precision,
        f1=f1_from(precision, recall),
        iou=_ratio(tp, tp + fp + fn),
        accuracy=_ratio(tp + tn, len(pred)),
    )


@dataclass(frozen=True)
class AppleMatch:
    pairs: List[Tuple[int, int]] = field(default_factory=list)
    tp: int = 0
    fp: int = 0
    fn: int = 0

    def scores(self) -> AppleScores:
        return AppleScores(
            tp=self.tp,
            fp=self.fp,
            fn=self.fn,
            recall=_ratio(self.tp, self.tp + self.fn),
            precision=_ratio(self.tp, self.tp + self.fp),
        )


def match_apples(detections: np.ndarray, truth: np.ndarray, radius: float = 0.10) -> AppleMatch:
    """Pairs (detection, truth) that are each other's nearest and closer than ``radius``"""
    detections = np.asarray(detections, dtype=np.float64).reshape(-1, 3)
    truth = np.asarray(truth, dtype=np.float64).reshape(-1, 3)
    if len(detections) == 0 or len(truth) == 0:
        return AppleMatch([], 0, len(detections), len(truth))

    gt_of_det, dist = NearestIndex(truth).query(detections)
    det_of_gt, _ = NearestIndex(detections).query(truth)
    pairs = [
        (a, int(g))
        for a, (g, d) in enumerate(zip(gt_of_det, dist))
        if d < radius and det_of_gt[g] == a
    ]
    tp = len(pairs)
    return AppleMatch(pairs, tp, len(detections) - tp, len(truth) - tp)


def assignment_accuracy(
    pairs: Sequence[Tuple[int, int]],
    predicted: Sequence[int],
    truth: Sequence[int],
    mapping: Optional[Dict[int, int]] = None,
) -> Optional[float]:
    """Share of matched apples whose (mapped) predicted tree equals the true tree; None without matches"""
    if not pairs:
        return None
    mapping = mapping or {}
    correct = sum(mapping.get(int(predicted[a]), int(predicted[a])) == int(truth[g]) for a, g in pairs)
    return correct / len(pairs)


def map_tree_ids(predicted: np.ndarray, truth: np.ndarray) -> Dict[int, int]:
    """Predicted tree id -> ground-truth id sharing most points with it (lowest id on ties)"""
    predicted = np.asarray(predicted)
    truth = np.asarray(truth)
    if predicted.shape != truth.shape:
        raise ShapeError("tree id arrays differ in length")
    both = (predicted != NO_TREE) & (truth != NO_TREE)
    mapping = {}
    for pid in np.unique(predicted[both]):
        ids, counts = np.unique(truth[both & (predicted == pid)], return_counts=True)
        mapping[int(pid)] = int(ids[np.argmax(counts)])
    return mapping


def separation_accuracy(predicted: np.ndarray, truth: np.ndarray, mapping: Dict[int, int]) -> Optional[float]:
    """Share of ground-truth tree points whose mapped predicted id is their true id"""
    predicted = np.asarray(predicted)
    truth = np.asarray(truth)
    members = truth != NO_TREE
    if not members.any():
        return None
    mapped = np.array([mapping.get(int(p), -1) for p in predicted[members]])
    return float((mapped == truth[members]).mean())


def build_metric_report(
    labels: Optional[np.ndarray] = None,
    gt_labels: Optional[np.ndarray] = None,
    tree_ids: Optional[np.ndarray] = None,
    gt_tree_ids: Optional[np.ndarray] = None,
    detections: Optional[np.ndarray] = None,
    apple_tree_ids: Optional[Sequence[int]] = None,
    manual_apple_tree_ids: Optional[Sequence[int]] = None,
    gt_apples: Optional[np.ndarray] = None,
    gt_apple_tree_ids: Optional[Sequence[int]] = None,
    n_trees: Optional[int] = None,
    match_radius: float = 0.10,
) -> MetricReport:
    """All metrics the supplied inputs allow; everything else stays None"""
    report = MetricReport()
    if labels is not None and gt_labels is not None:
        report.classes = [segmentation_metrics(labels, gt_labels, int(label)) for label in SemanticLabel]

    mapping: Dict[int, int] = {}
    if tree_ids is not None and gt_tree_ids is not None:
        mapping = map_tree_ids(tree_ids, gt_tree_ids)
        report.tree_id_mapping = {str(k): v for k, v in mapping.items()}
        report.separation_accuracy = separation_accuracy(tree_ids, gt_tree_ids, mapping)
        gt_trees = set(np.unique(gt_tree_ids).tolist()) - {NO_TREE}
        report.n_trees_gt = len(gt_trees)
        if n_trees is not None:
            report.tree_count_exact = n_trees == report.n_trees_gt

    if detections is not None and gt_apples is not None:
        match = match_apples(detections, gt_apples, match_radius)
        report.apples = match.scores()
        if apple_tree_ids is not None and gt_apple_tree_ids is not None:
            report.acc = assignment_accuracy(match.pairs, apple_tree_ids, gt_apple_tree_ids, mapping)
        if manual_apple_tree_ids is not None and gt_apple_tree_ids is not None:
            report.acc_manual = assignment_accuracy(match.pairs, manual_apple_tree_ids, gt_apple_tree_ids)
        if report.acc is not None and report.acc_manual is not None:
            report.acc_drop = report.acc_manual - report.acc
    return report


def _pct(value: Optional[float]) -> str:
    return "n/a" if value is None else f"{100 * value:.2f}"


def metric_markdown(report: MetricReport, scene: str = "scene") -> str:
    """Markdown tables of a metric report"""
    lines = [f"# {scene}", ""]
    if report.classes:
        lines += ["| Class | Re | Pr | F1 | IoU | CA |", "|---|---|---|---|---|---|"]
        for c in report.classes:
            lines.append(
                f"| {c.label} | {_pct(c.recall)} | {_pct(c.precision)} | {_pct(c.f1)} "
                f"| {_pct(c.iou)} | {_pct(c.accuracy)} |"
            )
        lines.append("")
    if report.apples is not None:
        a = report.apples
        lines += ["| TP | FP | FN | Re | Pr | ACC | ACC (manual) |", "|---|---|---|---|---|---|---|"]
        lines.append(
            f"| {a.tp} | {a.fp} | {a.fn} | {_pct(a.recall)} | {_pct(a.precision)} "
            f"| {_pct(report.acc)} | {_pct(report.acc_manual)} |"
        )
        lines.append("")
    if report.n_trees_gt is not None:
        lines.append(f"Trees in ground truth: {report.n_trees_gt}; exact count: {report.tree_count_exact}")
        lines.append(f"Separation accuracy: {_pct(report.separation_accuracy)}")
    return "\n".join(lines) + "\n"
