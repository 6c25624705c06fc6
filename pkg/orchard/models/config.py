#!/usr/bin/env python3
"""
Pydantic model of every tunable pipeline constant and input path
"""

from enum import Enum
from pathlib import Path
from typing import List, Optional, Tuple

from pydantic import BaseModel, ConfigDict, Field, field_validator, model_validator


class Stage(str, Enum):
    """Pipeline stages in execution order"""

    CALIBRATE = "calibrate"
    SEGMENT = "segment"
    SEPARATE = "separate"
    APPLES = "apples"
    REGISTER = "register"
    ASSIGN = "assign"
    EVAL = "eval"

    @classmethod
    def ordered(cls) -> List["Stage"]:
        return list(cls)

    def includes(self, other: "Stage") -> bool:
        """True when running up to ``self`` executes ``other``"""
        order = self.ordered()
        return order.index(other) <= order.index(self)


HueRange = Tuple[float, float]


class PipelineConfig(BaseModel):
    """Inputs, outputs and algorithm constants of one pipeline run"""

    model_config = ConfigDict(extra="forbid", validate_assignment=True)

    # inputs and outputs
    winter: Optional[Path] = Field(None, description="Winter (leaf-off) colored PLY")
    harvest: Optional[Path] = Field(None, description="Harvest-season colored PLY")
    winter_calib: Optional[Path] = Field(None, description="Calibration sidecar of the winter cloud")
    harvest_calib: Optional[Path] = Field(
        None, description="Calibration sidecar of the harvest cloud (defaults to the winter one)"
    )
    gt_labels: Optional[Path] = Field(
        None, description="PLY with per-vertex semlabel/treeid scalars for the winter cloud"
    )
    gt_apples: Optional[Path] = Field(None, description="Ground-truth apples JSON [{x,y,z,tree_id}]")
    out_dir: Path = Field(Path("orchard-out"), description="Artifact output directory")
    stage: Stage = Field(Stage.EVAL, description="Last stage to run")
    seed: int = Field(0, ge=0, description="Seed threaded through every randomized step")
    emit_debug: bool = Field(False, description="Write YZ projection and Hough accumulator images")
    workers: int = Field(1, ge=1, description="Concurrent scenes in batch mode")

    # calibration / region of interest
    roi_half_extent: float = Field(3.0, gt=0, description="ROI half-extent along the row (m)")
    roi_depth: float = Field(2.0, gt=0, description="ROI depth behind the marker along +X (m)")
    roi_z_min: float = Field(0.03, description="Lower ROI height above the tree base (m)")
    roi_z_max: float = Field(3.5, gt=0, description="Upper ROI height above the tree base (m)")
    ground_percentile: float = Field(
        1.0, gt=0, lt=100, description="Percentile of ROI heights taken as the tree base height"
    )
    marker_noise_limit: float = Field(
        0.1, gt=0, description="Maximum stddev/mean of observed chart patch spacing"
    )

    # trellis detection
    voxel_edge: float = Field(0.005, gt=0, description="Voxel edge for thinning (5 mm)")
    hough_threshold: float = Field(
        0.2, gt=0, le=1, description="Hough peaks must exceed this fraction of the accumulator maximum"
    )
    hough_max_angle_deg: float = Field(
        10.0, gt=0, description="Maximum angle between a wire line and the horizontal axis"
    )
    hough_theta_step_deg: float = Field(0.5, gt=0, description="Hough angle resolution")
    line_tube: float = Field(0.01, gt=0, description="Distance to a wire line for trellis points (1 cm)")
    plane_tol: float = Field(0.005, gt=0, description="MSAC inlier distance of the trellis plane (0.5 cm)")
    wire_merge_distance: float = Field(
        0.30, gt=0, description="Horizontal lines closer than this are one trellis line (30 cm)"
    )
    expected_trellis_levels: int = Field(4, ge=1, description="Trellis line count of the orchard")

    # trunk localization and verification
    slab_half_width: float = Field(0.05, gt=0, description="Trunk search slab |x| bound (5 cm)")
    ground_cell: float = Field(0.01, gt=0, description="Ground histogram cell edge (1 cm)")
    nms_window: float = Field(0.15, gt=0, description="Non-maximum suppression window (15 cm)")
    peak_prominence: float = Field(
        5.0, gt=0, description="Peaks must exceed this multiple of the median nonzero bin"
    )
    trunk_cylinder_radius: float = Field(0.15, gt=0, description="Trunk candidate cylinder (15 cm)")
    min_trunk_path: float = Field(1.0, gt=0, description="Minimum main-axis length of a tree (1 m)")
    trunk_label_distance: float = Field(0.03, gt=0, description="Trunk point distance to main axis (3 cm)")

    # support poles
    pole_radius: float = Field(0.045, gt=0, description="Support pole radius (4.5 cm)")
    pole_shell_tolerance: float = Field(0.005, gt=0, description="Half-width of the pole shell (0.5 cm)")
    pole_slice: float = Field(0.02, gt=0, description="Height of the circle-fit slices (2 cm)")
    pole_height: float = Field(2.3, gt=0, description="Support pole height (2.3 m)")
    pole_ratio: float = Field(0.8, gt=0, le=1, description="Shell/cylinder point ratio of a pole")
    pole_min_points: int = Field(50, ge=1, description="Minimum cylinder points for a pole test")
    pole_noise_cap: float = Field(
        0.0075, ge=0, description="Cap on the radial noise estimate that widens the pole shell (m)"
    )
    pole_max_resultant: float = Field(
        0.7, gt=0, le=1, description="Largest mean resultant length of a slice around the pole axis"
    )

    # wires
    segment_cylinder_radius: float = Field(0.10, gt=0, description="Wire segment cylinder (10 cm)")
    trunk_offset: float = Field(0.04, gt=0, description="Wire segment offset from trunks (4 cm)")
    lowest_line_tol: float = Field(0.07, gt=0, description="Line MSAC tolerance, lowest level (7 cm)")
    line_tol: float = Field(0.04, gt=0, description="Line MSAC tolerance, other levels (4 cm)")
    wire_min_inliers: int = Field(10, ge=2, description="Minimum inliers of an accepted wire line")
    wire_max_angle_deg: float = Field(10.0, gt=0, description="Maximum wire angle to the row axis")

    # separation
    component_trunk_distance: float = Field(
        0.30, gt=0, description="Component-to-trunk distance for an assignment (30 cm)"
    )
    floating_ratio: float = Field(3.0, gt=0, description="Distance ratio deciding floating branches")
    floating_knn: int = Field(10, ge=2, description="Neighbours of an end-point for its line (K=10)")

    # apples
    red_hue_ranges: List[HueRange] = Field(
        default_factory=lambda: [(0.0, 0.05), (0.95, 1.0)], description="Red apple hue ranges"
    )
    green_hue_ranges: List[HueRange] = Field(
        default_factory=lambda: [(0.15, 0.2)], description="Green/yellow apple hue ranges"
    )
    apple_voxel_edge: float = Field(0.005, gt=0, description="Voxel edge of apple components")
    min_apple_voxels: int = Field(8, ge=1, description="Smallest apple component kept")
    use_sv_gates: bool = Field(False, description="Also require saturation/value minimums")
    min_saturation: float = Field(0.3, ge=0, le=1, description="Saturation gate when enabled")
    min_value: float = Field(0.2, ge=0, le=1, description="Value gate when enabled")

    # registration
    icp_radius: float = Field(0.10, gt=0, description="ICP correspondence rejection radius (10 cm)")
    icp_coarse_radius: float = Field(0.5, gt=0, description="Starting rejection radius of the coarse phase")
    icp_max_iterations: int = Field(100, ge=1, description="ICP iteration cap")
    icp_tolerance: float = Field(1e-5, gt=0, description="ICP convergence on RMS change (m)")
    icp_min_correspondences: int = Field(100, ge=3, description="Correspondences required at start")
    icp_sample_voxel: float = Field(0.01, gt=0, description="Voxel subsampling of the ICP source")

    # evaluation
    match_radius: float = Field(0.10, gt=0, description="Apple match radius (10 cm)")

    @field_validator("red_hue_ranges", "green_hue_ranges")
    @classmethod
    def _check_hues(cls, ranges: List[HueRange]) -> List[HueRange]:
        for lo, hi in ranges:
            if not 0.0 <= lo <= hi <= 1.0:
                raise ValueError(f"hue range ({lo}, {hi}) must satisfy 0 <= lo <= hi <= 1")
        return ranges

    @model_validator(mode="after")
    def _check_roi(self) -> "PipelineConfig":
        if self.roi_z_max <= self.roi_z_min:
            raise ValueError("roi_z_max must exceed roi_z_min")
        return self

    @property
    def resolved_harvest_calib(self) -> Optional[Path]:
        return self.harvest_calib or self.winter_calib


CONSTANT_FIELDS = [
    name
    for name in PipelineConfig.model_fields
    if name
    not in {
        "winter",
        "harvest",
        "winter_calib",
        "harvest_calib",
        "gt_labels",
        "gt_apples",
        "out_dir",
        "stage",
        "emit_debug",
        "workers",
    }
]
