#!/usr/bin/env python3
"""
Pydantic models for emitted JSON artifacts
"""

from typing import Dict, List, Optional

from pydantic import BaseModel, ConfigDict, Field

SCHEMA_VERSION = "v1"


class VersionedModel(BaseModel):
    """Artifact carrying a ``"schema"`` version field"""

    model_config = ConfigDict(populate_by_name=True)

    schema_version: str = Field(SCHEMA_VERSION, alias="schema", description="Artifact schema version")


class ClassScores(BaseModel):
    """One-vs-rest segmentation scores of a semantic class (None when undefined)"""

    label: str = Field(..., description="Semantic class name")
    tp: int = Field(..., ge=0)
    fp: int = Field(..., ge=0)
    fn: int = Field(..., ge=0)
    tn: int = Field(..., ge=0)
    recall: Optional[float] = Field(None, description="TP / (TP + FN)")
    precision: Optional[float] = Field(None, description="TP / (TP + FP)")
    f1: Optional[float] = Field(None, description="2 Pr Re / (Pr + Re)")
    iou: Optional[float] = Field(None, description="TP / (TP + FP + FN)")
    accuracy: Optional[float] = Field(None, description="(TP + TN) / all points")


class AppleScores(BaseModel):
    """Apple detection counts against ground truth"""

    tp: int = Field(..., ge=0)
    fp: int = Field(..., ge=0)
    fn: int = Field(..., ge=0)
    recall: Optional[float] = Field(None, description="TP / (TP + FN)")
    precision: Optional[float] = Field(None, description="TP / (TP + FP)")


class MetricReport(VersionedModel):
    """Every evaluation metric of a run"""

    classes: List[ClassScores] = Field(default_factory=list, description="Per-class segmentation scores")
    apples: Optional[AppleScores] = Field(None, description="Apple detection counts")
    acc: Optional[float] = Field(None, description="Apple-to-tree assignment accuracy TP_C / TP")
    acc_manual: Optional[float] = Field(
        None, description="Assignment accuracy with ground-truth tree labels substituted"
    )
    acc_drop: Optional[float] = Field(None, description="acc_manual - acc")
    separation_accuracy: Optional[float] = Field(
        None, description="Fraction of ground-truth tree points carrying their mapped tree id"
    )
    n_trees_gt: Optional[int] = Field(None, description="Ground-truth tree count")
    tree_count_exact: Optional[bool] = Field(None, description="Detected tree count equals ground truth")
    tree_id_mapping: Dict[str, int] = Field(
        default_factory=dict, description="Predicted tree id -> ground-truth tree id"
    )


class TreeSummary(BaseModel):
    """One separated tree"""

    id: int = Field(..., ge=1)
    base: List[float] = Field(..., description="Base location in the calibrated frame")
    point_count: int = Field(0, ge=0)
    height: float = Field(0.0, ge=0, description="Highest tree point above the base (m)")
    apple_count: int = Field(0, ge=0, description="Apples assigned to this tree")


class TreesDocument(VersionedModel):
    trees: List[TreeSummary] = Field(default_factory=list)


class DetectionRecord(BaseModel):
    """One detected apple"""

    x: float
    y: float
    z: float
    range: str = Field(..., description="red or green_yellow")
    voxels: int = Field(..., ge=1, description="Voxel count of the source component")


class DetectionsDocument(VersionedModel):
    detections: List[DetectionRecord] = Field(default_factory=list)


class TransformDocument(VersionedModel):
    """Winter-to-harvest rigid transform"""

    R: List[List[float]] = Field(..., description="Rotation applied as p @ R")
    T: List[float] = Field(..., description="Translation added after rotation (m)")
    rms: float = Field(..., ge=0, description="Final RMS correspondence distance (m)")
    iterations: int = Field(0, ge=0)


class RunReport(VersionedModel):
    """Outcome of one pipeline run; ``timings`` is the only non-reproducible section"""

    scene: str = Field("scene", description="Scene name")
    status: str = Field("ok", description="ok or failed")
    error: Optional[str] = Field(None, description="Failure cause")
    stages: List[str] = Field(default_factory=list, description="Stages completed")
    counts: Dict[str, int] = Field(default_factory=dict, description="Point, tree and apple counts")
    trees: List[TreeSummary] = Field(default_factory=list)
    metrics: Optional[MetricReport] = Field(None)
    artifacts: Dict[str, str] = Field(default_factory=dict, description="Artifact name -> path")
    timings: Dict[str, float] = Field(default_factory=dict, description="Seconds per stage")

    def comparable(self) -> dict:
        """Report content that is identical across runs with the same config and seed"""
        return self.model_dump(by_alias=True, exclude={"timings"}, mode="json")


class BatchSummary(VersionedModel):
    scenes: Dict[str, str] = Field(default_factory=dict, description="Scene -> status")
    reports: Dict[str, str] = Field(default_factory=dict, description="Scene -> report path")
