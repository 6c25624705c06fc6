#!/usr/bin/env python3
"""
Pydantic models for calibration and ground-truth sidecar files
"""

from typing import List, Optional, Tuple

from pydantic import BaseModel, Field, model_validator

from ..core.geometry import is_orthonormal


class CalibrationSidecar(BaseModel):
    """Calibration input: reference-chart observation or explicit transform"""

    marker_points: Optional[List[List[float]]] = Field(
        None, description="Chart patch centers in the raw frame, row-major, top row first"
    )
    patch_spacing_m: Optional[float] = Field(None, gt=0, description="Metric spacing of adjacent patches")
    d_R_cc: Optional[float] = Field(None, ge=0, description="Chart-to-row distance (m)")
    d_T_cc: Optional[float] = Field(None, description="Chart-to-designated-tree distance along the row (m)")
    grid_shape: Tuple[int, int] = Field((4, 6), description="Patch rows and columns of the chart")

    scale: Optional[float] = Field(None, gt=0, description="Explicit scale factor")
    rotation: Optional[List[List[float]]] = Field(None, description="Explicit 3x3 rotation")
    origin: Optional[List[float]] = Field(None, description="Explicit origin in the scaled, rotated frame")

    @property
    def is_marker(self) -> bool:
        return self.marker_points is not None

    @model_validator(mode="after")
    def _check_form(self) -> "CalibrationSidecar":
        marker = [self.marker_points, self.patch_spacing_m, self.d_R_cc, self.d_T_cc]
        explicit = [self.scale, self.rotation, self.origin]
        if all(v is not None for v in marker):
            if any(len(p) != 3 for p in self.marker_points):
                raise ValueError("marker points must be [x, y, z] triples")
            if len(self.marker_points) < 4:
                raise ValueError("at least 4 marker points are required")
            rows, cols = self.grid_shape
            if rows * cols != len(self.marker_points):
                raise ValueError(
                    f"grid_shape {rows}x{cols} does not match {len(self.marker_points)} marker points"
                )
            return self
        if all(v is not None for v in explicit):
            if not is_orthonormal(self.rotation):
                raise ValueError("rotation must be a 3x3 orthonormal matrix")
            if len(self.origin) != 3:
                raise ValueError("origin must be [x, y, z]")
            return self
        raise ValueError(
            "calibration needs marker_points/patch_spacing_m/d_R_cc/d_T_cc or scale/rotation/origin"
        )


class GroundTruthApple(BaseModel):
    """One annotated apple"""

    x: float
    y: float
    z: float
    tree_id: int = Field(..., ge=0, description="Bearing tree id (0 when unknown)")
