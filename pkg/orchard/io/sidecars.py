#!/usr/bin/env python3
"""
JSON sidecar loading: calibration input and ground-truth apples
"""

import json
import logging
from pathlib import Path
from typing import List, Tuple, Union

import numpy as np
from pydantic import TypeAdapter, ValidationError

from ..exceptions import ParseError
from ..models.sidecars import CalibrationSidecar, GroundTruthApple

logger = logging.getLogger(__name__)

PathLike = Union[str, Path]

_APPLES = TypeAdapter(List[GroundTruthApple])


def _read_json(path: PathLike):
    path = Path(path)
    try:
        with open(path, "r") as f:
            return json.load(f)
    except json.JSONDecodeError as e:
        raise ParseError(f"{path}: line {e.lineno} column {e.colno}: {e.msg}") from e


def load_calibration(path: PathLike) -> CalibrationSidecar:
    """Chart observation or explicit transform from a calibration sidecar"""
    try:
        sidecar = CalibrationSidecar.model_validate(_read_json(path))
    except ValidationError as e:
        raise ParseError(f"{path}: {e.errors()[0]['msg']}") from e
    logger.debug(f"Loaded {'chart' if sidecar.is_marker else 'explicit'} calibration from {path}")
    return sidecar


def load_gt_apples(path: PathLike) -> Tuple[np.ndarray, np.ndarray]:
    """(K, 3) apple locations and their tree ids"""
    try:
        apples = _APPLES.validate_python(_read_json(path))
    except ValidationError as e:
        raise ParseError(f"{path}: {e.errors()[0]['msg']}") from e
    points = np.array([[a.x, a.y, a.z] for a in apples], dtype=np.float64).reshape(-1, 3)
    tree_ids = np.array([a.tree_id for a in apples], dtype=np.int64)
    print(f"🍎 Loaded {len(apples)} ground-truth apples from {path}")
    return points, tree_ids


def dump_gt_apples(points: np.ndarray, tree_ids: np.ndarray) -> list:
    """JSON-ready ground-truth apple list"""
    apples = [
        GroundTruthApple(x=float(p[0]), y=float(p[1]), z=float(p[2]), tree_id=int(t))
        for p, t in zip(points, tree_ids)
    ]
    return _APPLES.dump_python(apples, mode="json")
