"""
File formats the pipeline reads and writes
"""

from .artifacts import write_assignment_csv, write_json, write_pgm, write_text
from .ply import PlyData, read_ply, write_ply
from .sidecars import dump_gt_apples, load_calibration, load_gt_apples

__all__ = [
    "PlyData",
    "read_ply",
    "write_ply",
    "load_calibration",
    "load_gt_apples",
    "dump_gt_apples",
    "write_json",
    "write_assignment_csv",
    "write_pgm",
    "write_text",
]
