"""
Pydantic schemas for configuration, sidecars and reports
"""

from .config import PipelineConfig, Stage
from .reports import (
    AppleScores,
    BatchSummary,
    ClassScores,
    DetectionRecord,
    DetectionsDocument,
    MetricReport,
    RunReport,
    TransformDocument,
    TreeSummary,
    TreesDocument,
)
from .sidecars import CalibrationSidecar, GroundTruthApple
